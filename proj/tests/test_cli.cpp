#include <doctest.h>

#include <fstream>
#include <sstream>

#include "support.hpp"
#include "toolpose/cli.hpp"
#include "toolpose/hmap_io.hpp"
#include "toolpose/records.hpp"

using namespace toolpose;
using toolpose::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> files(const TempDir& dir, std::size_t n, const std::string& ext) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu%s", i, ext.c_str());
    out.push_back(dir.str(name));
  }
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("synth is deterministic per seed") {
  TempDir a("synth_a"), b("synth_b");
  REQUIRE(run({"--seed", "7", "synth", "--out-dir", a.path().string(), "--frames", "2"}).code == 0);
  REQUIRE(run({"--seed", "7", "synth", "--out-dir", b.path().string(), "--frames", "2"}).code == 0);
  for (const char* leaf : {"frame_0000.txt", "frame_0001.hmap", "frame_0001.ppm"}) {
    CHECK(slurp(a.str(leaf)) == slurp(b.str(leaf)));
    CHECK_FALSE(slurp(a.str(leaf)).empty());
  }
  CHECK(slurp(a.str("frame_0000.txt")) != slurp(a.str("frame_0001.txt")));
}

TEST_CASE("synth with zero instruments writes zero heatmaps and an empty annotation") {
  TempDir d("synth_zero");
  REQUIRE(run({"synth", "--out-dir", d.path().string(), "--instruments", "0"}).code == 0);
  const Heatmap m = read_hmap_file(d.str("frame_0000.hmap"));
  for (double v : m.data()) CHECK(v == 0.0);
  const auto anns = read_annotation_file(d.str("frame_0000.txt"));
  REQUIRE(anns.size() == 1);
  CHECK(anns[0].instruments.empty());
  const Run tv = run({"tv", d.str("frame_0000.hmap")});
  CHECK(tv.code == 0);
  CHECK(tv.out.find("frame=frame_0000 total=0 ") == 0);
}

TEST_CASE("synth, decode and eval round trip to F1 = 1") {
  TempDir d("roundtrip");
  REQUIRE(run({"--seed", "7", "synth", "--out-dir", d.path().string(), "--frames", "3"}).code == 0);
  const auto maps = files(d, 3, ".hmap");
  const std::string pred = d.str("pred.jsonl");
  REQUIRE(run(concat({"decode", "--out", pred}, maps)).code == 0);
  std::vector<std::string> args{"eval", "--pred", pred, "--format", "records"};
  for (const auto& g : files(d, 3, ".txt")) args.insert(args.end(), {"--gt", g});
  const Run e = run(args);
  REQUIRE(e.code == 0);
  std::istringstream lines(e.out);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    CHECK(line.find(" f1=1.000000 ") != std::string::npos);
    ++n;
  }
  CHECK(n == 6);
}

TEST_CASE("render reproduces synth targets from annotations") {
  TempDir d("render");
  REQUIRE(run({"--seed", "3", "synth", "--out-dir", d.path().string()}).code == 0);
  const std::string out_dir = d.str("rendered");
  REQUIRE(run({"render", d.str("frame_0000.txt"), "--out-dir", out_dir}).code == 0);
  CHECK(slurp(out_dir + "/frame_0000.hmap") == slurp(d.str("frame_0000.hmap")));
  REQUIRE(run({"render", "--noise", d.str("frame_0000.txt"), "--out-dir", out_dir}).code == 0);
  CHECK(slurp(out_dir + "/frame_0000.hmap") != slurp(d.str("frame_0000.hmap")));
}

TEST_CASE("thread count does not change output") {
  TempDir d("threads");
  REQUIRE(run({"synth", "--out-dir", d.path().string(), "--frames", "5"}).code == 0);
  const auto maps = files(d, 5, ".hmap");
  const Run one = run(concat({"decode"}, maps));
  const Run four = run(concat({"--threads", "4", "decode"}, maps));
  CHECK(one.code == 0);
  CHECK(one.out == four.out);
  CHECK(run(concat({"tv"}, maps)).out == run(concat({"--threads", "3", "tv"}, maps)).out);
}

TEST_CASE("gate prints its threshold and exits 0 when all frames are rejected") {
  TempDir d("gate");
  REQUIRE(run({"synth", "--out-dir", d.path().string(), "--instruments", "0"}).code == 0);
  const Run g = run({"gate", "--mode", "multi", d.str("frame_0000.hmap")});
  CHECK(g.code == 0);
  CHECK(g.out.find("threshold=1000") != std::string::npos);
  CHECK(g.out.find("decision=reject") != std::string::npos);
  CHECK(g.out.find("accepted=0 rejected=1") != std::string::npos);
  const Run s = run({"gate", "--mode", "single", d.str("frame_0000.hmap")});
  CHECK(s.out.find("threshold=400") != std::string::npos);
  const Run t = run({"--tv-threshold", "0", "gate", d.str("frame_0000.hmap")});
  CHECK(t.code != 0);
  const Run dup = run({"gate", d.str("frame_0000.hmap"), d.str("frame_0000.hmap")});
  CHECK(dup.code != 0);
}

TEST_CASE("swap writes a same-sized frame with in-bounds annotations") {
  TempDir d("swap");
  REQUIRE(run({"synth", "--out-dir", d.path().string(), "--frames", "2"}).code == 0);
  const Run s = run({"--seed", "5", "swap", "--a-image", d.str("frame_0000.ppm"), "--a-ann", d.str("frame_0000.txt"),
                     "--b-image", d.str("frame_0001.ppm"), "--b-ann", d.str("frame_0001.txt"), "--out-image",
                     d.str("swapped.ppm"), "--out-ann", d.str("swapped.txt")});
  REQUIRE(s.code == 0);
  CHECK(slurp(d.str("swapped.ppm")).size() == slurp(d.str("frame_0000.ppm")).size());
  for (const auto& f : read_annotation_file(d.str("swapped.txt")))
    for (const auto& inst : f.instruments)
      for (const auto& [name, p] : inst.joints) {
        CHECK(p.x >= 0);
        CHECK(p.x <= 319);
      }
}

TEST_CASE("config precedence and print-config") {
  TempDir d("config");
  const std::string cfg = d.str("run.json");
  std::ofstream(cfg) << R"({"render": {"sigma": 12}, "decode": {"nms_threshold": 0.4}})";
  const Run base = run({"--print-config"});
  CHECK(base.out.find("\"sigma\": 20.0") != std::string::npos);
  const Run file = run({"--config", cfg, "--print-config"});
  CHECK(file.out.find("\"sigma\": 12.0") != std::string::npos);
  CHECK(file.out.find("\"nms_threshold\": 0.4") != std::string::npos);
  const Run flag = run({"--config", cfg, "--sigma", "7", "--print-config"});
  CHECK(flag.out.find("\"sigma\": 7.0") != std::string::npos);
  CHECK(flag.out.find("\"nms_threshold\": 0.4") != std::string::npos);
  const Run rmit = run({"--preset", "rmit", "--print-config"});
  CHECK(rmit.out.find("\"pixel_threshold\": 15.0") != std::string::npos);
  CHECK(rmit.out.find("\"height\": 288") != std::string::npos);
}

TEST_CASE("malformed input yields a diagnostic with file and byte offset") {
  TempDir d("bad");
  const std::string path = d.str("bad.hmap");
  std::ofstream(path, std::ios::binary) << "HMAP1\n\x02";
  const Run r = run({"tv", path});
  CHECK(r.code != 0);
  CHECK(r.err == "error: " + path + ":7: truncated height\n");

  const std::string ann = d.str("bad.txt");
  std::ofstream(ann) << "f 0 head 1 2\nf 0 head\n";
  const std::string pred = d.str("pred.jsonl");
  std::ofstream(pred) << "";
  const Run e = run({"eval", "--pred", pred, "--gt", ann});
  CHECK(e.code != 0);
  CHECK(e.err.find(ann + ":13:") != std::string::npos);

  CHECK(run({"tv", d.str("missing.hmap")}).code != 0);
  CHECK(run({"nonsense"}).code != 0);
  CHECK(run({"--sigma", "-1", "--print-config"}).code != 0);
}

TEST_CASE("bench reports latency statistics") {
  TempDir d("bench");
  REQUIRE(run({"synth", "--out-dir", d.path().string()}).code == 0);
  const Run b = run({"bench", d.str("frame_0000.hmap"), "--iterations", "100", "--warmup", "2"});
  CHECK(b.code == 0);
  CHECK(b.out.find("median_ms=") != std::string::npos);
  CHECK(b.out.find("p95_ms=") != std::string::npos);
  CHECK(b.out.find("samples=100") != std::string::npos);
  CHECK(run({"bench", d.str("frame_0000.hmap"), "--iterations", "10"}).code != 0);
}
