#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "toolpose/error.hpp"
#include "toolpose/heatmap.hpp"

using namespace toolpose;
using toolpose::testing::naive_tv;
using toolpose::testing::random_map;

namespace {

SkeletonSpec one_joint() { return SkeletonSpec{{"tip"}, {}}; }

Heatmap single_blob(Point p, double sigma, FrameSize frame = {100, 120}) {
  const InstrumentAnnotation a{{{"tip", p}}};
  return render_targets(std::span(&a, 1), one_joint(), frame, RenderConfig{sigma, 1.0});
}

}  // namespace

TEST_CASE("heatmap construction enforces its invariants") {
  CHECK_THROWS_AS(Heatmap(1, 4, 1), InvalidInput);
  CHECK_THROWS_AS(Heatmap(4, 1, 1), InvalidInput);
  CHECK_THROWS_AS(Heatmap(4, 4, 0), InvalidInput);
  CHECK_THROWS_AS(Heatmap(2, 2, 1, std::vector<double>(3)), InvalidInput);
  const Heatmap m(2, 3, 2);
  CHECK(m.channel_names() == std::vector<std::string>{"c0", "c1"});
  CHECK(m.data().size() == 12);
}

TEST_CASE("render_targets: Gaussian centre and closed-form value") {
  const Heatmap m = single_blob({50, 50}, 20.0);
  CHECK(m.at(50, 50, 0) == doctest::Approx(1.0).epsilon(1e-12));
  // (x=50, y=70): 20 px below the centre.
  CHECK(std::abs(m.at(70, 50, 0) - 0.6065306597126334) < 1e-6);
  CHECK(RenderConfig{}.sigma == 20.0);
  for (double v : m.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("render_targets: edge channel follows the distance to the closed segment") {
  const SkeletonSpec sk{{"a", "b"}, {{0, 1}}};
  const InstrumentAnnotation inst{{{"a", {20, 30}}, {"b", {80, 30}}}};
  const Heatmap m = render_targets(std::span(&inst, 1), sk, {60, 100}, RenderConfig{10.0, 1.0});
  REQUIRE(m.channels() == 3);
  CHECK(m.channel_names()[2] == "a-b");
  CHECK(m.at(30, 50, 2) == doctest::Approx(1.0));
  // 10 px above the segment interior.
  CHECK(m.at(20, 50, 2) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
  // Beyond endpoint b by (6, 8): distance 10 to the endpoint.
  CHECK(m.at(38, 86, 2) == doctest::Approx(std::exp(-0.5)).epsilon(1e-9));
}

TEST_CASE("render_targets: missing joints and bad input") {
  const SkeletonSpec sk{{"a", "b"}, {{0, 1}}};
  const InstrumentAnnotation only_a{{{"a", {10, 10}}}};
  const Heatmap m = render_targets(std::span(&only_a, 1), sk, {40, 40});
  for (std::size_t r = 0; r < 40; ++r)
    for (std::size_t c = 0; c < 40; ++c) CHECK(m.at(r, c, 2) == 0.0);

  const InstrumentAnnotation outside{{{"a", {40, 10}}}};
  CHECK_THROWS_AS(render_targets(std::span(&outside, 1), sk, {40, 40}), InvalidInput);
  const InstrumentAnnotation unknown{{{"zz", {4, 4}}}};
  CHECK_THROWS_AS(render_targets(std::span(&unknown, 1), sk, {40, 40}), InvalidInput);
  CHECK_THROWS_AS(render_targets(std::span(&only_a, 1), sk, {40, 40}, RenderConfig{0.0, 1.0}),
                  InvalidInput);
}

TEST_CASE("render_targets is symmetric under instrument order") {
  const auto sk = SkeletonSpec::endovis();
  std::vector<InstrumentAnnotation> insts{
      {{{"left_clasper", {40, 40}}, {"right_clasper", {80, 30}}, {"head", {70, 80}},
        {"shaft", {120, 120}}, {"end", {200, 180}}}},
      {{{"left_clasper", {300, 40}}, {"right_clasper", {250, 60}}, {"head", {260, 110}},
        {"shaft", {230, 160}}, {"end", {180, 230}}}}};
  const Heatmap fwd = render_targets(insts, sk, {256, 320});
  std::swap(insts[0], insts[1]);
  CHECK(render_targets(insts, sk, {256, 320}) == fwd);
}

TEST_CASE("skeleton validation") {
  CHECK_NOTHROW(SkeletonSpec::endovis().validate());
  CHECK_NOTHROW(SkeletonSpec::rmit().validate());
  CHECK(SkeletonSpec::endovis().channel_count() == 9);
  CHECK(SkeletonSpec::rmit().channel_count() == 7);
  CHECK_THROWS_AS((SkeletonSpec{{"a", "b"}, {{0, 0}}}.validate()), InvalidInput);
  CHECK_THROWS_AS((SkeletonSpec{{"a", "b"}, {{0, 2}}}.validate()), InvalidInput);
  CHECK_THROWS_AS((SkeletonSpec{{"a", "b"}, {{0, 1}, {1, 0}}}.validate()), InvalidInput);
}

TEST_CASE("total_variation: worked examples") {
  CHECK(total_variation(Heatmap(2, 2, 1, {0, 1, 0, 0})).total == 2.0);
  CHECK(total_variation(Heatmap(7, 5, 3, std::vector<double>(105, 0.37))).total == 0.0);
  const auto r = total_variation(Heatmap(2, 2, 2, {0, 5, 1, 5, 0, 5, 0, 5}));
  // Channel 0 is [[0,1],[0,0]]; channel 1 is constant.
  CHECK(r.per_channel == std::vector<double>{2.0, 0.0});
}

TEST_CASE("total_variation matches the naive oracle and its symmetries") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const Heatmap m = random_map(rng);
    const auto r = total_variation(m);
    const double oracle = naive_tv(m);
    CHECK(std::abs(r.total - oracle) <= 1e-9 * std::max(1.0, oracle));
    double sum = 0.0;
    for (double v : r.per_channel) sum += v;
    CHECK(sum == doctest::Approx(r.total).epsilon(1e-12));

    const double a = uniform(rng, -3.0, 3.0);
    const double shift = uniform(rng, -5.0, 5.0);
    Heatmap scaled = m, shifted = m;
    for (double& v : scaled.data()) v *= a;
    for (double& v : shifted.data()) v += shift;
    CHECK(total_variation(scaled).total == doctest::Approx(std::abs(a) * r.total).epsilon(1e-9));
    CHECK(total_variation(shifted).total == doctest::Approx(r.total).epsilon(1e-9));
  }
}

TEST_CASE("total_variation: wider peak-normalised blobs vary more, smoothing varies less") {
  // A unit-peak Gaussian has TV close to 2 * sqrt(2 pi) * sigma per axis.
  const Heatmap sharp = single_blob({160, 128}, 5.0, {256, 320});
  double previous = 0.0;
  for (double sigma : {5.0, 10.0, 20.0}) {
    const double tv = total_variation(single_blob({160, 128}, sigma, {256, 320})).total;
    CHECK(tv == doctest::Approx(4.0 * std::sqrt(2.0 * M_PI) * sigma).epsilon(0.01));
    CHECK(tv > previous);
    previous = tv;
  }
  previous = std::numeric_limits<double>::infinity();
  for (double s : {0.0, 5.0, 10.0, 20.0}) {
    const double tv = total_variation(s == 0.0 ? sharp : gaussian_smooth(sharp, s)).total;
    CHECK(tv < previous);
    previous = tv;
  }
}

TEST_CASE("gaussian_smooth: impulse response is the sampled normalised kernel") {
  Heatmap m(21, 21, 1);
  m.at(10, 10, 0) = 1.0;
  const auto k1 = gaussian_kernel(1.0);
  REQUIRE(k1.size() == 7);
  // Independent construction of the 2D kernel.
  double norm = 0.0;
  for (int d = -3; d <= 3; ++d) norm += std::exp(-0.5 * d * d);
  const Heatmap s = gaussian_smooth(m, 1.0);
  for (int dy = -3; dy <= 3; ++dy)
    for (int dx = -3; dx <= 3; ++dx) {
      const double expect = std::exp(-0.5 * (dx * dx + dy * dy)) / (norm * norm);
      CHECK(std::abs(s.at(10 + dy, 10 + dx, 0) - expect) < 1e-6);
    }
  CHECK(s.at(10, 14, 0) == 0.0);
  CHECK_THROWS_AS(gaussian_smooth(m, 0.0), InvalidInput);
}

TEST_CASE("gaussian_smooth: constants, mean preservation and TV reduction") {
  const Heatmap flat(30, 40, 2, std::vector<double>(2400, 0.42));
  const Heatmap s = gaussian_smooth(flat, 2.5);
  for (double v : s.data()) CHECK(std::abs(v - 0.42) < 1e-9);

  const Heatmap blob = single_blob({60, 50}, 6.0);
  const Heatmap sb = gaussian_smooth(blob, 3.0);
  double m0 = 0.0, m1 = 0.0;
  for (double v : blob.data()) m0 += v;
  for (double v : sb.data()) m1 += v;
  CHECK(std::abs(m1 - m0) <= 1e-6 * m0);

  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const Heatmap m = random_map(rng, 24, 3);
    CHECK(total_variation(gaussian_smooth(m, 1.5)).total < total_variation(m).total);
  }
}

TEST_CASE("gaussian_smooth only touches the selected channels") {
  Rng rng(3);
  const Heatmap m = random_map(rng, 16, 3);
  const std::size_t ch[] = {0};
  const Heatmap s = gaussian_smooth(m, 1.0, ch);
  for (std::size_t c = 1; c < m.channels(); ++c) CHECK(s.plane(c) == m.plane(c));
}

TEST_CASE("high_boost") {
  const Heatmap blob = single_blob({60, 50}, 8.0);
  CHECK(high_boost(blob, 0.0) == blob);
  const Heatmap flat(20, 20, 1, std::vector<double>(400, 0.3));
  const Heatmap hb_flat = high_boost(flat, 3.0);
  for (double v : hb_flat.data()) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));

  const Heatmap hb = high_boost(blob, 1.0);
  const auto contrast = [](const Heatmap& m) { return m.at(50, 60, 0) - m.at(50, 76, 0); };
  CHECK(contrast(hb) > contrast(blob));
  for (double v : hb.data()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(high_boost(blob, -1.0), InvalidInput);
}

TEST_CASE("add_label_noise") {
  CHECK(kDefaultLabelNoise == 0.01);
  const Heatmap base(1000, 1000, 1, std::vector<double>(1000000, 0.5));
  const Heatmap noisy = add_label_noise(base, 0.01, 9);
  double max_dev = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < base.data().size(); ++i) {
    const double d = noisy.data()[i] - base.data()[i];
    max_dev = std::max(max_dev, std::abs(d));
    sum += d;
  }
  CHECK(max_dev <= 0.01);
  CHECK(max_dev > 0.009);
  CHECK(std::abs(sum / 1e6) < 1e-4);
  CHECK(add_label_noise(base, 0.01, 9) == noisy);
  CHECK_FALSE(add_label_noise(base, 0.01, 10) == noisy);
  CHECK(add_label_noise(base, 0.0, 9) == base);
  CHECK_THROWS_AS(add_label_noise(base, -0.1, 9), InvalidInput);
}
