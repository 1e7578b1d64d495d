#include "toolpose/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <CLI11.hpp>

#include "toolpose/augment.hpp"
#include "toolpose/config.hpp"
#include "toolpose/error.hpp"
#include "toolpose/hmap_io.hpp"
#include "toolpose/image.hpp"
#include "toolpose/pose_decode.hpp"
#include "toolpose/records.hpp"
#include "toolpose/rng.hpp"
#include "toolpose/ssl.hpp"
#include "toolpose/synth.hpp"

namespace toolpose {

namespace {

namespace fs = std::filesystem;

std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::to_string(v);
}

std::string frame_id_of(const fs::path& p) { return p.stem().string(); }

// Runs `work` over the inputs with up to `threads` in flight and hands the
// results to `emit` in input order. At most `threads` results are buffered.
template <typename Work, typename Emit>
void for_each_ordered(const std::vector<std::string>& inputs, std::size_t threads, Work&& work,
                      Emit&& emit) {
  if (threads <= 1) {
    for (const auto& in : inputs) emit(work(in));
    return;
  }
  using Result = decltype(work(inputs.front()));
  for (std::size_t start = 0; start < inputs.size(); start += threads) {
    const std::size_t end = std::min(inputs.size(), start + threads);
    std::vector<std::future<Result>> batch;
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(std::async(std::launch::async, [&work, &in = inputs[i]] { return work(in); }));
    }
    for (auto& f : batch) emit(f.get());
  }
}

// Prefixes precondition failures with the file being processed.
template <typename Fn>
auto with_source(const std::string& path, Fn&& fn) {
  try {
    return fn();
  } catch (const InvalidInput& e) {
    throw InvalidInput(path + ": " + e.what());
  }
}

class OutputFile {
 public:
  OutputFile(const std::string& path, std::ostream& fallback) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    stream_ = file_.is_open() ? static_cast<std::ostream*>(&file_) : &fallback;
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

struct SynthArgs {
  std::string out_dir;
  std::size_t frames = 1;
  std::size_t instruments = 2;
  double separation = 80.0;
};

int cmd_synth(const RunConfig& cfg, const SynthArgs& a, std::ostream& out) {
  fs::create_directories(a.out_dir);
  for (std::size_t i = 0; i < a.frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu", i);
    SceneSpec spec;
    spec.frame = cfg.frame;
    spec.skeleton = cfg.skeleton;
    spec.instruments = a.instruments;
    spec.min_separation = a.separation;
    spec.seed = mix_seed(cfg.seed, i);
    const auto scene = generate_scene(spec);
    const fs::path base = fs::path(a.out_dir) / name;

    std::ofstream ann(fs::path(base).replace_extension(".txt"));
    if (!ann) throw std::runtime_error("cannot write annotations under '" + a.out_dir + "'");
    write_annotations(ann, FrameAnnotations{name, scene});
    write_hmap_file(fs::path(base).replace_extension(".hmap"),
                    render_targets(scene, cfg.skeleton, cfg.frame, cfg.render));
    write_pnm_file(fs::path(base).replace_extension(".ppm"), draw_scene(scene, cfg.skeleton, cfg.frame));
    out << "frame=" << name << " instruments=" << scene.size() << '\n';
  }
  return 0;
}

struct RenderArgs {
  std::vector<std::string> files;
  std::string out_dir;
  bool noise = false;
};

int cmd_render(const RunConfig& cfg, const RenderArgs& a, std::ostream& out) {
  fs::create_directories(a.out_dir);
  std::size_t frame_index = 0;
  for (const auto& file : a.files) {
    for (const auto& frame : read_annotation_file(file)) {
      Heatmap maps = with_source(file, [&] {
        return render_targets(frame.instruments, cfg.skeleton, cfg.frame, cfg.render);
      });
      if (a.noise) maps = add_label_noise(maps, cfg.label_noise, mix_seed(cfg.seed, frame_index));
      ++frame_index;
      const fs::path dst = fs::path(a.out_dir) / (frame.frame_id + ".hmap");
      write_hmap_file(dst, maps);
      out << "frame=" << frame.frame_id << " path=" << dst.string() << '\n';
    }
  }
  return 0;
}

struct DecodeArgs {
  std::vector<std::string> files;
  std::string out;
  bool single = false;
};

int cmd_decode(const RunConfig& cfg, const DecodeArgs& a, std::ostream& out) {
  OutputFile dst(a.out, out);
  for_each_ordered(
      a.files, cfg.threads,
      [&](const std::string& file) {
        const Heatmap maps = read_hmap_file(file);
        PoseRecord rec{frame_id_of(file), {}, {}};
        with_source(file, [&] {
          if (a.single) {
            rec.poses.push_back(decode_single(maps, cfg.decode.smooth_sigma));
            rec.confidence = total_variation(maps);
          } else {
            auto res = parse_instruments(maps, cfg.skeleton, cfg.decode);
            rec.poses = std::move(res.poses);
            rec.confidence = std::move(res.confidence);
          }
          return 0;
        });
        return pose_record_json(rec, cfg.skeleton);
      },
      [&](const std::string& line) { dst.stream() << line << '\n'; });
  return 0;
}

int cmd_tv(const RunConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
  for_each_ordered(
      files, cfg.threads,
      [&](const std::string& file) {
        const Heatmap maps = read_hmap_file(file);
        const auto tv = total_variation(maps);
        std::ostringstream line;
        line << "frame=" << frame_id_of(file) << " total=" << num(tv.total);
        for (std::size_t c = 0; c < tv.per_channel.size(); ++c) {
          line << ' ' << maps.channel_names()[c] << '=' << num(tv.per_channel[c]);
        }
        return line.str();
      },
      [&](const std::string& line) { out << line << '\n'; });
  return 0;
}

int cmd_gate(const RunConfig& cfg, const std::vector<std::string>& files, std::ostream& out) {
  std::unordered_set<std::string> seen;
  for (const auto& f : files) {
    if (!seen.insert(frame_id_of(f)).second) {
      throw InvalidInput("duplicate frame id '" + frame_id_of(f) + "'");
    }
  }
  std::size_t accepted = 0, rejected = 0;
  const std::string mode(to_string(cfg.pseudo_label.mode));
  const std::string threshold = num(cfg.pseudo_label.threshold());
  for_each_ordered(
      files, cfg.threads,
      [&](const std::string& file) {
        return std::pair{frame_id_of(file), gate_pseudo_label(read_hmap_file(file), cfg.pseudo_label)};
      },
      [&](const std::pair<std::string, GateDecision>& r) {
        (r.second.accept ? accepted : rejected)++;
        out << "frame=" << r.first << " tv_total=" << num(r.second.tv_total)
            << " decision=" << (r.second.accept ? "accept" : "reject") << " threshold=" << threshold
            << " mode=" << mode << '\n';
      });
  out << "accepted=" << accepted << " rejected=" << rejected << " threshold=" << threshold
      << " mode=" << mode << '\n';
  return 0;
}

struct SwapArgs {
  std::string a_image, a_ann, b_image, b_ann, out_image, out_ann;
};

int cmd_swap(const RunConfig& cfg, const SwapArgs& a, std::ostream& out) {
  const auto first_frame = [](const std::string& path) {
    auto frames = read_annotation_file(path);
    if (frames.empty()) throw FormatError(path, 0, "annotation file holds no frame");
    return frames.front();
  };
  const auto ann_a = first_frame(a.a_ann);
  const auto ann_b = first_frame(a.b_ann);
  const Frame fa{read_pnm_file(a.a_image), ann_a.instruments};
  const Frame fb{read_pnm_file(a.b_image), ann_b.instruments};
  const SwapPlan plan = plan_swap(fa, fb, cfg.seed);
  const Frame swapped{apply_swap(plan, fa.image, fb.image),
                      apply_swap(plan, fa.annotations, fb.annotations, fa.image.height)};
  write_pnm_file(a.out_image, swapped.image);
  std::ofstream ann(a.out_ann);
  if (!ann) throw std::runtime_error("cannot open '" + a.out_ann + "' for writing");
  write_annotations(ann, FrameAnnotations{ann_a.frame_id, swapped.annotations});
  out << "split_a=" << plan.split_a << " split_b=" << plan.split_b << " pad=" << plan.pad
      << " crop_left=" << plan.crop_left << " crop_right=" << plan.crop_right
      << " instruments=" << swapped.annotations.size() << '\n';
  return 0;
}

struct EvalArgs {
  std::vector<std::string> preds;
  std::vector<std::string> gts;
  std::string format = "both";
};

int cmd_eval(const RunConfig& cfg, const EvalArgs& a, std::ostream& out) {
  std::vector<FramePoses> preds;
  for (const auto& f : a.preds)
    for (auto& r : read_pose_record_file(f)) preds.push_back({std::move(r.frame_id), std::move(r.poses)});
  std::vector<FrameAnnotations> gts;
  for (const auto& f : a.gts)
    for (auto& fa : read_annotation_file(f)) gts.push_back(std::move(fa));
  const auto table = evaluate_frames(preds, gts, cfg.skeleton.joint_names, cfg.eval);
  if (a.format == "table" || a.format == "both") write_metrics_table(out, table);
  if (a.format == "records" || a.format == "both") write_metrics_records(out, table);
  return 0;
}

struct BenchArgs {
  std::vector<std::string> files;
  std::size_t iterations = 200;
  std::size_t warmup = 10;
};

int cmd_bench(const RunConfig& cfg, const BenchArgs& a, std::ostream& out) {
  if (a.iterations < 100) throw InvalidInput("bench needs at least 100 iterations");
  std::vector<Heatmap> maps;
  for (const auto& f : a.files) maps.push_back(read_hmap_file(f));
  std::size_t sink = 0;
  for (std::size_t i = 0; i < a.warmup; ++i)
    for (const auto& m : maps) sink += parse_instruments(m, cfg.skeleton, cfg.decode).poses.size();
  std::vector<double> ms;
  ms.reserve(a.iterations * maps.size());
  for (std::size_t i = 0; i < a.iterations; ++i) {
    for (const auto& m : maps) {
      const auto t0 = std::chrono::steady_clock::now();
      sink += parse_instruments(m, cfg.skeleton, cfg.decode).poses.size();
      const auto t1 = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  std::sort(ms.begin(), ms.end());
  const auto rank = [&](double q) {
    const auto k = static_cast<std::size_t>(std::ceil(q * static_cast<double>(ms.size())));
    return ms[std::clamp<std::size_t>(k, 1, ms.size()) - 1];
  };
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());
  const double median = ms.size() % 2 == 1 ? ms[ms.size() / 2]
                                           : 0.5 * (ms[ms.size() / 2 - 1] + ms[ms.size() / 2]);
  char line[256];
  std::snprintf(line, sizeof line,
                "frames=%zu iterations=%zu samples=%zu median_ms=%.3f p95_ms=%.3f mean_ms=%.3f "
                "max_ms=%.3f poses=%zu\n",
                maps.size(), a.iterations, ms.size(), median, rank(0.95), mean, ms.back(),
                sink / (a.iterations + a.warmup));
  out << line;
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heatmap pose decoding, confidence gating, augmentation and evaluation tools",
               "toolpose"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string preset = "endovis";
  std::string config_path, skeleton_path, mode;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  double sigma = 0, smooth_sigma = 0, nms_threshold = 0, tv_threshold = 0, pixel_threshold = 0;
  bool print_config = false;
  app.add_option("--preset", preset, "Dataset preset: endovis or rmit")
      ->check(CLI::IsMember({"endovis", "rmit"}));
  app.add_option("--config", config_path, "JSON configuration file");
  auto* o_seed = app.add_option("--seed", seed, "Random seed");
  auto* o_threads = app.add_option("--threads", threads, "Worker threads for per-frame work");
  auto* o_sigma = app.add_option("--sigma", sigma, "Target Gaussian standard deviation (px)");
  auto* o_smooth = app.add_option("--smooth-sigma", smooth_sigma, "Decoder smoothing sigma (px)");
  auto* o_nms = app.add_option("--nms-threshold", nms_threshold, "Joint candidate threshold");
  auto* o_tv = app.add_option("--tv-threshold", tv_threshold,
                              "TV threshold: high-boost gate for decode/bench, acceptance gate for gate");
  auto* o_px = app.add_option("--pixel-threshold", pixel_threshold, "Evaluation distance threshold (px)");
  app.add_option("--skeleton", skeleton_path, "Skeleton JSON file");
  app.add_flag("--print-config", print_config, "Print the resolved configuration and exit");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate synthetic annotated scenes");
  c_synth->add_option("--out-dir", synth.out_dir, "Directory for frame_NNNN.{txt,hmap,ppm}")->required();
  c_synth->add_option("--frames", synth.frames, "Number of frames")->capture_default_str();
  c_synth->add_option("--instruments", synth.instruments, "Instruments per frame")->capture_default_str();
  c_synth->add_option("--separation", synth.separation, "Minimum distance between joints of different instruments (px)")->capture_default_str();

  RenderArgs render;
  auto* c_render = app.add_subcommand("render", "Render target heatmaps from annotations");
  c_render->add_option("annotations", render.files, "Annotation files")->required();
  c_render->add_option("--out-dir", render.out_dir, "Directory for <frame>.hmap")->required();
  c_render->add_flag("--noise", render.noise, "Add uniform label noise");

  DecodeArgs decode;
  auto* c_decode = app.add_subcommand("decode", "Decode instrument poses from HMAP1 files");
  c_decode->add_option("maps", decode.files, "HMAP1 files")->required();
  c_decode->add_option("--out", decode.out, "Pose record output (default stdout)");
  c_decode->add_flag("--single", decode.single, "Single-instrument argmax decoding");

  std::vector<std::string> tv_files;
  auto* c_tv = app.add_subcommand("tv", "Report total variation per map");
  c_tv->add_option("maps", tv_files, "HMAP1 files")->required();

  std::vector<std::string> gate_files;
  auto* c_gate = app.add_subcommand("gate", "Select pseudo-labels by total variation");
  c_gate->add_option("maps", gate_files, "HMAP1 files; the stem is the frame id")->required();
  auto* o_mode = c_gate->add_option("--mode", mode, "Instrument mode (defaults to the preset's)")->check(CLI::IsMember({"single", "multi"}));

  SwapArgs swap;
  auto* c_swap = app.add_subcommand("swap", "Random-swap two annotated frames");
  c_swap->add_option("--a-image", swap.a_image, "First frame (PPM/PGM)")->required();
  c_swap->add_option("--a-ann", swap.a_ann, "First frame annotations")->required();
  c_swap->add_option("--b-image", swap.b_image, "Second frame (PPM/PGM)")->required();
  c_swap->add_option("--b-ann", swap.b_ann, "Second frame annotations")->required();
  c_swap->add_option("--out-image", swap.out_image, "Output image")->required();
  c_swap->add_option("--out-ann", swap.out_ann, "Output annotations")->required();

  EvalArgs eval;
  std::string matching;
  double min_score = 0;
  auto* c_eval = app.add_subcommand("eval", "Precision, recall, F1 and RMSE per joint");
  c_eval->add_option("--pred", eval.preds, "Pose record files (JSON lines)")->required();
  c_eval->add_option("--gt", eval.gts, "Ground-truth annotation files")->required();
  c_eval->add_option("--format", eval.format, "Output format")->capture_default_str()->check(CLI::IsMember({"table", "records", "both"}));
  auto* o_matching = c_eval->add_option("--matching", matching, "Prediction-to-truth matching rule")->check(CLI::IsMember({"optimal", "greedy"}));
  auto* o_min_score = c_eval->add_option("--min-score", min_score, "Ignore predicted joints scoring below this");

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Time multi-instrument decoding");
  c_bench->add_option("maps", bench.files, "HMAP1 files, decoded in turn")->required();
  c_bench->add_option("--iterations", bench.iterations, "Timed decodes (at least 100)")->capture_default_str();
  c_bench->add_option("--warmup", bench.warmup, "Untimed decodes first")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = RunConfig::preset(preset);
    if (!config_path.empty()) cfg = load_config_file(config_path, cfg);
    if (!skeleton_path.empty()) cfg.skeleton = load_skeleton_file(skeleton_path);
    if (o_seed->count()) cfg.seed = seed;
    if (o_threads->count()) cfg.threads = threads;
    if (o_sigma->count()) cfg.render.sigma = sigma;
    if (o_smooth->count()) cfg.decode.smooth_sigma = smooth_sigma;
    if (o_nms->count()) cfg.decode.nms_threshold = nms_threshold;
    if (o_mode->count()) cfg.pseudo_label.mode = parse_instrument_mode(mode);
    if (o_tv->count()) {
      cfg.decode.tv_boost_threshold = tv_threshold;
      (cfg.pseudo_label.mode == InstrumentMode::multi ? cfg.pseudo_label.tv_threshold_multi
                                                      : cfg.pseudo_label.tv_threshold_single) = tv_threshold;
    }
    if (o_px->count()) cfg.eval.pixel_threshold = pixel_threshold;
    if (o_matching->count()) cfg.eval.matching = parse_matching_rule(matching);
    if (o_min_score->count()) cfg.eval.min_score = min_score;
    cfg.validate();

    if (print_config) {
      out << config_to_json(cfg) << '\n';
      return 0;
    }
    if (*c_synth) return cmd_synth(cfg, synth, out);
    if (*c_render) return cmd_render(cfg, render, out);
    if (*c_decode) return cmd_decode(cfg, decode, out);
    if (*c_tv) return cmd_tv(cfg, tv_files, out);
    if (*c_gate) return cmd_gate(cfg, gate_files, out);
    if (*c_swap) return cmd_swap(cfg, swap, out);
    if (*c_eval) return cmd_eval(cfg, eval, out);
    if (*c_bench) return cmd_bench(cfg, bench, out);
    err << app.help();
    return 1;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace toolpose
