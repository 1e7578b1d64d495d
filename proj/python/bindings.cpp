#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "toolpose/assignment.hpp"
#include "toolpose/augment.hpp"
#include "toolpose/cli.hpp"
#include "toolpose/config.hpp"
#include "toolpose/error.hpp"
#include "toolpose/eval.hpp"
#include "toolpose/heatmap.hpp"
#include "toolpose/hmap_io.hpp"
#include "toolpose/nn_kernels.hpp"
#include "toolpose/pose_decode.hpp"
#include "toolpose/ssl.hpp"
#include "toolpose/synth.hpp"

namespace py = pybind11;
using namespace toolpose;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Joints = std::map<std::string, std::pair<double, double>>;

Heatmap to_heatmap(const Array& a, std::vector<std::string> names = {}) {
  if (a.ndim() == 2) {
    std::vector<double> data(a.data(), a.data() + a.size());
    return Heatmap(a.shape(0), a.shape(1), 1, std::move(data), std::move(names));
  }
  if (a.ndim() != 3) throw InvalidInput("heatmaps must be arrays of shape (H, W) or (H, W, C)");
  std::vector<double> data(a.data(), a.data() + a.size());
  return Heatmap(a.shape(0), a.shape(1), a.shape(2), std::move(data), std::move(names));
}

Array from_heatmap(const Heatmap& m) {
  Array out({m.height(), m.width(), m.channels()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

Tensor4 to_tensor(const Array& a) {
  if (a.ndim() != 4) throw InvalidInput("tensors must be arrays of shape (N, H, W, C)");
  return Tensor4(a.shape(0), a.shape(1), a.shape(2), a.shape(3), std::vector<double>(a.data(), a.data() + a.size()));
}

Array from_tensor(const Tensor4& t) {
  Array out({t.n(), t.h(), t.w(), t.c()});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

std::vector<double> to_vector(const Array& a) { return std::vector<double>(a.data(), a.data() + a.size()); }

Array from_vector(std::span<const double> v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<InstrumentAnnotation> to_annotations(const std::vector<Joints>& instruments) {
  std::vector<InstrumentAnnotation> out;
  for (const auto& joints : instruments) {
    InstrumentAnnotation a;
    for (const auto& [name, p] : joints) a.joints[name] = {p.first, p.second};
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Joints> from_annotations(std::span<const InstrumentAnnotation> anns) {
  std::vector<Joints> out;
  for (const auto& a : anns) {
    Joints j;
    for (const auto& [name, p] : a.joints) j[name] = {p.x, p.y};
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<Point> to_points(const Array& a) {
  if (a.size() == 0) return {};
  if (a.ndim() != 2 || a.shape(1) != 2) throw InvalidInput("points must be an array of shape (N, 2)");
  std::vector<Point> out(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) out[i] = {a.at(i, 0), a.at(i, 1)};
  return out;
}

py::dict pose_dict(const InstrumentPose& pose, const SkeletonSpec& sk) {
  py::dict joints;
  for (const auto& [name, j] : pose.joints) joints[py::str(name)] = py::make_tuple(j.position.x, j.position.y, j.score);
  py::list edges;
  for (const auto& e : pose.edges) edges.append(py::make_tuple(sk.edge_name(e.edge), e.score));
  py::dict d;
  d["joints"] = joints;
  d["edges"] = edges;
  d["score"] = pose.score_sum();
  return d;
}

py::dict confidence_dict(const ConfidenceReport& r) {
  py::dict d;
  d["total"] = r.total;
  d["per_channel"] = r.per_channel;
  d["boosted"] = r.boosted;
  return d;
}

py::dict metrics_dict(const MetricsTable& t) {
  py::list joints;
  for (const auto& j : t.joints) {
    py::dict d;
    d["joint"] = j.joint;
    d["tp"] = j.true_positives;
    d["fp"] = j.false_positives;
    d["fn"] = j.false_negatives;
    d["precision"] = j.precision;
    d["recall"] = j.recall;
    d["f1"] = j.f1;
    d["rmse"] = j.rmse ? py::object(py::float_(*j.rmse)) : py::object(py::none());
    joints.append(d);
  }
  py::dict d;
  d["joints"] = joints;
  d["precision"] = t.precision;
  d["recall"] = t.recall;
  d["f1"] = t.f1;
  d["rmse"] = t.rmse ? py::object(py::float_(*t.rmse)) : py::object(py::none());
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Heatmap-based surgical instrument pose estimation kernels";

  static py::exception<InvalidInput> invalid_input(m, "InvalidInput", PyExc_ValueError);
  static py::exception<FormatError> format_error(m, "FormatError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidInput& e) {
      invalid_input(e.what());
    } catch (const FormatError& e) {
      format_error(e.what());
    }
  });

  py::class_<SkeletonSpec>(m, "Skeleton")
      .def(py::init([](std::vector<std::string> joints, std::vector<std::pair<std::string, std::string>> edges) {
             SkeletonSpec sk;
             sk.joint_names = std::move(joints);
             for (const auto& [a, b] : edges) {
               const auto ia = sk.joint_index(a), ib = sk.joint_index(b);
               if (!ia || !ib) throw InvalidInput("edge " + a + "-" + b + " names an unknown joint");
               sk.edges.emplace_back(*ia, *ib);
             }
             sk.validate();
             return sk;
           }),
           py::arg("joints"), py::arg("edges"))
      .def_static("endovis", &SkeletonSpec::endovis)
      .def_static("rmit", &SkeletonSpec::rmit)
      .def_readonly("joint_names", &SkeletonSpec::joint_names)
      .def_property_readonly("edges",
                             [](const SkeletonSpec& sk) {
                               std::vector<std::pair<std::string, std::string>> out;
                               for (const auto& [a, b] : sk.edges) out.emplace_back(sk.joint_names[a], sk.joint_names[b]);
                               return out;
                             })
      .def_property_readonly("channel_names", &SkeletonSpec::channel_names)
      .def("__repr__", [](const SkeletonSpec& sk) {
        return "Skeleton(" + std::to_string(sk.joint_names.size()) + " joints, " + std::to_string(sk.edges.size()) +
               " edges)";
      });

  py::class_<DecodeConfig>(m, "DecodeConfig")
      .def(py::init<>())
      .def_readwrite("smooth_sigma", &DecodeConfig::smooth_sigma)
      .def_readwrite("nms_threshold", &DecodeConfig::nms_threshold)
      .def_readwrite("nms_window", &DecodeConfig::nms_window)
      .def_readwrite("tv_boost_threshold", &DecodeConfig::tv_boost_threshold)
      .def_readwrite("line_samples", &DecodeConfig::line_samples)
      .def_readwrite("pair_score_threshold", &DecodeConfig::pair_score_threshold)
      .def_readwrite("high_boost_k", &DecodeConfig::high_boost_k)
      .def_readwrite("high_boost_sigma", &DecodeConfig::high_boost_sigma)
      .def_readwrite("min_pose_joints", &DecodeConfig::min_pose_joints)
      .def("validate", &DecodeConfig::validate);

  // Heatmap operations.
  m.def(
      "render_targets",
      [](const std::vector<Joints>& instruments, std::size_t height, std::size_t width, const SkeletonSpec& skeleton,
         double sigma, double amplitude) {
        const auto anns = to_annotations(instruments);
        return from_heatmap(render_targets(anns, skeleton, {height, width}, RenderConfig{sigma, amplitude}));
      },
      py::arg("instruments"), py::arg("height"), py::arg("width"), py::arg("skeleton") = SkeletonSpec::endovis(),
      py::arg("sigma") = 20.0, py::arg("amplitude") = 1.0);
  m.def(
      "total_variation",
      [](const Array& maps) {
        const auto r = total_variation(to_heatmap(maps));
        return py::make_tuple(r.total, r.per_channel);
      },
      py::arg("maps"), "Returns (total, per_channel).");
  m.def(
      "gaussian_smooth", [](const Array& maps, double sigma) { return from_heatmap(gaussian_smooth(to_heatmap(maps), sigma)); },
      py::arg("maps"), py::arg("sigma"));
  m.def(
      "high_boost",
      [](const Array& maps, double k, double sigma) { return from_heatmap(high_boost(to_heatmap(maps), k, sigma)); },
      py::arg("maps"), py::arg("k") = 1.0, py::arg("sigma") = kDefaultHighBoostSigma);
  m.def(
      "add_label_noise",
      [](const Array& maps, double amplitude, std::uint64_t seed) {
        return from_heatmap(add_label_noise(to_heatmap(maps), amplitude, seed));
      },
      py::arg("maps"), py::arg("amplitude") = kDefaultLabelNoise, py::arg("seed") = 0);
  m.def(
      "gaussian_kernel", [](double sigma) { return from_vector(gaussian_kernel(sigma)); }, py::arg("sigma"));

  m.def(
      "read_hmap",
      [](const std::string& path) {
        const Heatmap h = read_hmap_file(path);
        return py::make_tuple(from_heatmap(h), h.channel_names());
      },
      py::arg("path"), "Returns (maps, channel_names).");
  m.def(
      "write_hmap",
      [](const std::string& path, const Array& maps, std::vector<std::string> names) {
        write_hmap_file(path, to_heatmap(maps, std::move(names)));
      },
      py::arg("path"), py::arg("maps"), py::arg("channel_names") = std::vector<std::string>{});

  // Decoding.
  m.def(
      "nms_candidates",
      [](const Array& maps, const DecodeConfig& cfg) {
        std::vector<std::tuple<std::size_t, double, double, double>> out;
        for (const auto& c : nms_candidates(to_heatmap(maps), cfg))
          out.emplace_back(c.channel, c.position.x, c.position.y, c.score);
        return out;
      },
      py::arg("maps"), py::arg("config") = DecodeConfig{}, "Returns (channel, x, y, score) tuples.");
  m.def(
      "line_integral_score",
      [](std::pair<double, double> p, std::pair<double, double> q, const Array& map, std::size_t channel,
         std::size_t samples) {
        return line_integral_score({p.first, p.second}, {q.first, q.second}, to_heatmap(map), channel, samples);
      },
      py::arg("p"), py::arg("q"), py::arg("maps"), py::arg("channel") = 0, py::arg("samples") = 10);
  m.def(
      "max_score_matching",
      [](const Array& scores, double threshold) {
        if (scores.ndim() != 2) throw InvalidInput("scores must be a 2-D array");
        Matrix mat(scores.shape(0), scores.shape(1));
        std::copy(scores.data(), scores.data() + scores.size(), mat.values.begin());
        std::vector<std::tuple<std::size_t, std::size_t, double>> out;
        for (const auto& p : max_score_matching(mat, threshold)) out.emplace_back(p.a, p.b, p.score);
        return out;
      },
      py::arg("scores"), py::arg("threshold") = 0.5);
  m.def(
      "min_cost_assignment",
      [](const Array& cost) {
        if (cost.ndim() != 2) throw InvalidInput("cost must be a 2-D array");
        Matrix mat(cost.shape(0), cost.shape(1));
        std::copy(cost.data(), cost.data() + cost.size(), mat.values.begin());
        return min_cost_assignment(mat);
      },
      py::arg("cost"));
  m.def(
      "parse_instruments",
      [](const Array& maps, const SkeletonSpec& skeleton, const DecodeConfig& cfg) {
        const auto res = parse_instruments(to_heatmap(maps, skeleton.channel_names()), skeleton, cfg);
        py::list poses;
        for (const auto& p : res.poses) poses.append(pose_dict(p, skeleton));
        return py::make_tuple(poses, confidence_dict(res.confidence));
      },
      py::arg("maps"), py::arg("skeleton") = SkeletonSpec::endovis(), py::arg("config") = DecodeConfig{},
      "Returns (poses, confidence).");
  m.def(
      "decode_single",
      [](const Array& maps, std::vector<std::string> joint_names, double smooth_sigma) {
        const auto pose = decode_single(to_heatmap(maps, std::move(joint_names)), smooth_sigma);
        py::dict joints;
        for (const auto& [name, j] : pose.joints) joints[py::str(name)] = py::make_tuple(j.position.x, j.position.y, j.score);
        return joints;
      },
      py::arg("maps"), py::arg("joint_names") = std::vector<std::string>{}, py::arg("smooth_sigma") = 3.0);

  // Pseudo-label selection.
  m.def(
      "gate_tv_total",
      [](double tv, const std::string& mode, std::optional<double> threshold) {
        PseudoLabelConfig cfg;
        cfg.mode = parse_instrument_mode(mode);
        if (threshold) (cfg.mode == InstrumentMode::multi ? cfg.tv_threshold_multi : cfg.tv_threshold_single) = *threshold;
        cfg.validate();
        const auto d = gate_tv_total(tv, cfg);
        return py::make_tuple(d.accept, d.tv_total, d.threshold);
      },
      py::arg("tv_total"), py::arg("mode") = "multi", py::arg("threshold") = py::none(),
      "Returns (accept, tv_total, threshold).");
  m.def(
      "gate_pseudo_label",
      [](const Array& maps, const std::string& mode, std::optional<double> threshold) {
        PseudoLabelConfig cfg;
        cfg.mode = parse_instrument_mode(mode);
        if (threshold) (cfg.mode == InstrumentMode::multi ? cfg.tv_threshold_multi : cfg.tv_threshold_single) = *threshold;
        cfg.validate();
        const auto d = gate_pseudo_label(to_heatmap(maps), cfg);
        return py::make_tuple(d.accept, d.tv_total, d.threshold);
      },
      py::arg("maps"), py::arg("mode") = "multi", py::arg("threshold") = py::none(),
      "Returns (accept, tv_total, threshold).");
  m.def(
      "ema_update",
      [](const Array& teacher, const Array& student, double alpha) {
        return from_vector(ema_update(to_vector(teacher), to_vector(student), EmaConfig{alpha}));
      },
      py::arg("teacher"), py::arg("student"), py::arg("alpha") = 0.95);

  // Augmentation.
  m.def(
      "flip_h", [](const Array& maps) { return from_heatmap(flip_h(to_heatmap(maps))); }, py::arg("maps"));
  m.def(
      "translate", [](const Array& maps, int dx, int dy) { return from_heatmap(translate(to_heatmap(maps), dx, dy)); },
      py::arg("maps"), py::arg("dx"), py::arg("dy"));
  m.def(
      "rotate", [](const Array& maps, double degrees) { return from_heatmap(rotate(to_heatmap(maps), degrees)); },
      py::arg("maps"), py::arg("degrees"));
  m.def(
      "rotate_point",
      [](std::pair<double, double> p, double degrees, std::size_t height, std::size_t width) {
        const Point r = rotate_point({p.first, p.second}, degrees, height, width);
        return std::make_pair(r.x, r.y);
      },
      py::arg("p"), py::arg("degrees"), py::arg("height"), py::arg("width"));
  m.def("mirror_joint_name", [](const std::string& s) { return mirror_joint_name(s); }, py::arg("name"));
  m.def(
      "plan_swap",
      [](std::size_t width, double xa, double xb) {
        const SwapPlan p = plan_swap(width, xa, xb);
        py::dict d;
        d["width"] = p.width;
        d["split_a"] = p.split_a;
        d["split_b"] = p.split_b;
        d["pad"] = p.pad;
        d["crop_left"] = p.crop_left;
        d["crop_right"] = p.crop_right;
        d["offset_a"] = p.offset_a();
        d["offset_b"] = p.offset_b();
        return d;
      },
      py::arg("width"), py::arg("clasper_x_a"), py::arg("clasper_x_b"));
  m.def(
      "swap_instruments",
      [](const Array& maps_a, const std::vector<Joints>& ann_a, const Array& maps_b, const std::vector<Joints>& ann_b,
         std::uint64_t seed) {
        const Heatmap ha = to_heatmap(maps_a), hb = to_heatmap(maps_b);
        const Frame fa{Image(ha.height(), ha.width(), 1), to_annotations(ann_a)};
        const Frame fb{Image(hb.height(), hb.width(), 1), to_annotations(ann_b)};
        const SwapPlan plan = plan_swap(fa, fb, seed);
        const auto anns = apply_swap(plan, fa.annotations, fb.annotations, ha.height());
        return py::make_tuple(from_heatmap(apply_swap(plan, ha, hb)), from_annotations(anns));
      },
      py::arg("maps_a"), py::arg("annotations_a"), py::arg("maps_b"), py::arg("annotations_b"), py::arg("seed") = 0,
      "Clasper-split swap applied to two heatmap stacks; returns (maps, annotations).");
  m.def(
      "bbox_from_joints",
      [](const Array& points, double alpha) {
        const BBox b = bbox_from_joints(to_points(points), alpha);
        return py::make_tuple(b.x_min, b.y_min, b.x_max, b.y_max);
      },
      py::arg("points"), py::arg("alpha") = kDefaultBBoxAlpha, "Returns (x_min, y_min, x_max, y_max).");

  // Evaluation.
  m.def(
      "match_detections",
      [](const Array& preds, const Array& gts, double threshold, const std::string& matching) {
        EvalConfig cfg;
        cfg.pixel_threshold = threshold;
        cfg.matching = parse_matching_rule(matching);
        const auto r = match_detections(to_points(preds), to_points(gts), cfg);
        std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;
        for (const auto& p : r.pairs) pairs.emplace_back(p.pred, p.gt, p.distance);
        return py::make_tuple(pairs, r.unmatched_preds, r.unmatched_gts);
      },
      py::arg("preds"), py::arg("gts"), py::arg("threshold") = 20.0, py::arg("matching") = "optimal",
      "Returns (pairs, unmatched_preds, unmatched_gts).");
  m.def(
      "evaluate",
      [](const std::map<std::string, std::vector<std::map<std::string, std::tuple<double, double, double>>>>& preds,
         const std::map<std::string, std::vector<Joints>>& truth, std::vector<std::string> joint_order,
         double threshold, const std::string& matching) {
        std::vector<FramePoses> p;
        for (const auto& [id, poses] : preds) {
          FramePoses fp{id, {}};
          for (const auto& joints : poses) {
            InstrumentPose pose;
            for (const auto& [name, j] : joints) pose.joints[name] = {{std::get<0>(j), std::get<1>(j)}, std::get<2>(j)};
            fp.poses.push_back(std::move(pose));
          }
          p.push_back(std::move(fp));
        }
        std::vector<FrameAnnotations> t;
        for (const auto& [id, insts] : truth) t.push_back({id, to_annotations(insts)});
        EvalConfig cfg;
        cfg.pixel_threshold = threshold;
        cfg.matching = parse_matching_rule(matching);
        return metrics_dict(evaluate_frames(p, t, std::move(joint_order), cfg));
      },
      py::arg("predictions"), py::arg("truth"), py::arg("joint_order") = std::vector<std::string>{},
      py::arg("threshold") = 20.0, py::arg("matching") = "optimal",
      "predictions: {frame: [{joint: (x, y, score)}]}; truth: {frame: [{joint: (x, y)}]}.");

  // Network kernels on (N, H, W, C) arrays.
  m.def(
      "attention_gate", [](const Array& f, const Array& a) { return from_tensor(attention_gate_forward(to_tensor(f), to_tensor(a))); },
      py::arg("features"), py::arg("pre_attention"));
  m.def(
      "attention_gate_backward",
      [](const Array& f, const Array& a, const Array& up) {
        const auto g = attention_gate_backward(to_tensor(f), to_tensor(a), to_tensor(up));
        return py::make_tuple(from_tensor(g.features), from_tensor(g.pre_attention));
      },
      py::arg("features"), py::arg("pre_attention"), py::arg("upstream"));
  m.def(
      "group_norm",
      [](const Array& x, const Array& gamma, const Array& beta, std::size_t groups, double eps) {
        return from_tensor(group_norm_forward(to_tensor(x), to_vector(gamma), to_vector(beta), {groups, eps}));
      },
      py::arg("x"), py::arg("gamma"), py::arg("beta"), py::arg("groups") = 8, py::arg("eps") = 1e-5);
  m.def(
      "group_norm_backward",
      [](const Array& x, const Array& gamma, const Array& up, std::size_t groups, double eps) {
        const auto g = group_norm_backward(to_tensor(x), to_vector(gamma), {groups, eps}, to_tensor(up));
        return py::make_tuple(from_tensor(g.x), from_vector(g.gamma), from_vector(g.beta));
      },
      py::arg("x"), py::arg("gamma"), py::arg("upstream"), py::arg("groups") = 8, py::arg("eps") = 1e-5);
  m.def(
      "rlrelu",
      [](const Array& x, bool train, std::uint64_t seed) {
        RlreluConfig cfg;
        cfg.mode = train ? RlreluMode::train : RlreluMode::inference;
        return from_tensor(rlrelu(to_tensor(x), cfg, seed));
      },
      py::arg("x"), py::arg("train") = false, py::arg("seed") = 0);
  m.def(
      "rlrelu_backward",
      [](const Array& x, const Array& up, bool train, std::uint64_t seed) {
        RlreluConfig cfg;
        cfg.mode = train ? RlreluMode::train : RlreluMode::inference;
        return from_tensor(rlrelu_backward(to_tensor(x), cfg, seed, to_tensor(up)));
      },
      py::arg("x"), py::arg("upstream"), py::arg("train") = false, py::arg("seed") = 0);

  // Synthetic data and the command line.
  m.def(
      "generate_scene",
      [](std::uint64_t seed, std::size_t instruments, std::size_t height, std::size_t width,
         const SkeletonSpec& skeleton, double min_separation, double margin) {
        SceneSpec spec;
        spec.seed = seed;
        spec.instruments = instruments;
        spec.frame = {height, width};
        spec.skeleton = skeleton;
        spec.min_separation = min_separation;
        spec.margin = margin;
        return from_annotations(generate_scene(spec));
      },
      py::arg("seed") = 0, py::arg("instruments") = 2, py::arg("height") = 256, py::arg("width") = 320,
      py::arg("skeleton") = SkeletonSpec::endovis(), py::arg("min_separation") = 80.0, py::arg("margin") = 10.0);
  m.def(
      "default_config", [](const std::string& preset) { return config_to_json(RunConfig::preset(preset)); },
      py::arg("preset") = "endovis", "Resolved run configuration as JSON text.");
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = run_cli(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the toolpose command line in-process; returns (exit_code, stdout, stderr).");
}
