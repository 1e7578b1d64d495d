#include <doctest.h>

#include <cmath>
#include <functional>

#include "support.hpp"
#include "toolpose/error.hpp"
#include "toolpose/nn_kernels.hpp"

using namespace toolpose;

namespace {

Tensor4 random_tensor(Rng& rng, std::size_t n, std::size_t h, std::size_t w, std::size_t c,
                      double lo = -2.0, double hi = 2.0) {
  Tensor4 t(n, h, w, c);
  for (double& v : t.data()) v = uniform(rng, lo, hi);
  return t;
}

double dot(const Tensor4& a, const Tensor4& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * b.data()[i];
  return s;
}

// Central differences of L(x) = <upstream, f(x)> with respect to every entry of x.
std::vector<double> numeric_grad(Tensor4 x, const std::function<double(const Tensor4&)>& loss,
                                 double step = 1e-4) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + step;
    const double up = loss(x);
    x.data()[i] = keep - step;
    const double down = loss(x);
    x.data()[i] = keep;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

// Relative error with an absolute floor so gradients near zero are judged on
// the scale of the whole gradient vector.
bool grad_close(std::span<const double> analytic, std::span<const double> numeric, double tol = 1e-4) {
  double scale = 0.0;
  for (double v : numeric) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3 * scale, 1e-8});
    if (std::abs(analytic[i] - numeric[i]) / denom > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("tensor shape checks") {
  CHECK_THROWS_AS(Tensor4(0, 1, 1, 1), InvalidInput);
  CHECK_THROWS_AS(Tensor4(1, 2, 2, 1, std::vector<double>(3)), InvalidInput);
  const Heatmap m(2, 3, 2, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  const Tensor4 t = Tensor4::from_heatmap(m);
  CHECK(t(0, 1, 2, 1) == 12.0);
}

TEST_CASE("attention gate forward") {
  Rng rng(1);
  const Tensor4 f = random_tensor(rng, 1, 4, 4, 3);
  const Tensor4 half = attention_gate_forward(f, Tensor4(1, 4, 4, 1, 0.0));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(half.data()[i] == 0.5 * f.data()[i]);
  const Tensor4 open = attention_gate_forward(f, Tensor4(1, 4, 4, 1, 50.0));
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::abs(open.data()[i] - f.data()[i]) < 1e-9);

  const Tensor4 a = random_tensor(rng, 1, 4, 4, 1);
  const Tensor4 out = attention_gate_forward(f, a);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      for (std::size_t c = 0; c < 3; ++c)
        CHECK(out(0, y, x, c) == doctest::Approx(f(0, y, x, c) / (1.0 + std::exp(-a(0, y, x, 0)))).epsilon(1e-14));

  Tensor4 scaled = f;
  for (double& v : scaled.data()) v *= -3.0;
  const Tensor4 so = attention_gate_forward(scaled, a);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(so.data()[i] == doctest::Approx(-3.0 * out.data()[i]));

  CHECK_THROWS_AS(attention_gate_forward(f, Tensor4(1, 4, 4, 2)), InvalidInput);
  CHECK_THROWS_AS(attention_gate_forward(f, Tensor4(1, 4, 3, 1)), InvalidInput);
}

TEST_CASE("attention gate backward matches finite differences") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor4 f = random_tensor(rng, 1, 3, 3, 2);
    const Tensor4 a = random_tensor(rng, 1, 3, 3, 1);
    const Tensor4 up = random_tensor(rng, 1, 3, 3, 2);
    const auto g = attention_gate_backward(f, a, up);
    const auto nf = numeric_grad(f, [&](const Tensor4& x) { return dot(up, attention_gate_forward(x, a)); });
    const auto na = numeric_grad(a, [&](const Tensor4& x) { return dot(up, attention_gate_forward(f, x)); });
    CHECK(grad_close(g.features.data(), nf));
    CHECK(grad_close(g.pre_attention.data(), na));
  }
  const Tensor4 f(1, 2, 2, 2, 0.0), a(1, 2, 2, 1, 0.3), up(1, 2, 2, 2, 1.0);
  const auto at_zero = attention_gate_backward(f, a, up);
  for (double v : at_zero.pre_attention.data()) CHECK(v == 0.0);
  const auto zero = attention_gate_backward(Tensor4(1, 2, 2, 2, 1.0), a, Tensor4(1, 2, 2, 2));
  for (double v : zero.features.data()) CHECK(v == 0.0);
  for (double v : zero.pre_attention.data()) CHECK(v == 0.0);
}

TEST_CASE("group norm forward") {
  GroupNormConfig cfg{2, 1e-5};
  const std::vector<double> ones(4, 1.0), zeros(4, 0.0);
  const Tensor4 flat = group_norm_forward(Tensor4(1, 3, 3, 4, 2.5), ones, zeros, cfg);
  for (double v : flat.data()) CHECK(v == 0.0);

  Rng rng(3);
  const Tensor4 x = random_tensor(rng, 2, 5, 5, 4, -3, 7);
  const Tensor4 y = group_norm_forward(x, ones, zeros, cfg);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t g = 0; g < 2; ++g) {
      double s = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
          for (std::size_t c = 2 * g; c < 2 * g + 2; ++c) {
            s += y(n, i, j, c);
            sq += y(n, i, j, c) * y(n, i, j, c);
          }
      CHECK(std::abs(s / 50.0) < 1e-6);
      CHECK(std::abs(sq / 50.0 - 1.0) < 1e-4);
    }

  // groups = 1 against a two-pass layer normalisation oracle.
  const Tensor4 l = group_norm_forward(x, ones, zeros, {1, 1e-5});
  for (std::size_t n = 0; n < 2; ++n) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 100; ++i) mean += x.data()[n * 100 + i];
    mean /= 100.0;
    double var = 0.0;
    for (std::size_t i = 0; i < 100; ++i) var += std::pow(x.data()[n * 100 + i] - mean, 2);
    var /= 100.0;
    for (std::size_t i = 0; i < 100; ++i)
      CHECK(l.data()[n * 100 + i] == doctest::Approx((x.data()[n * 100 + i] - mean) / std::sqrt(var + 1e-5)));
  }

  // Invariance to s * x + t within each group.
  Tensor4 moved = x;
  for (double& v : moved.data()) v = 2.5 * v + 4.0;
  const Tensor4 ym = group_norm_forward(moved, ones, zeros, cfg);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(ym.data()[i] - y.data()[i]) < 1e-5);

  const std::vector<double> three(3, 1.0);
  CHECK_THROWS_AS(group_norm_forward(Tensor4(1, 2, 2, 3), three, three, GroupNormConfig{}), InvalidInput);
  CHECK_THROWS_AS(group_norm_forward(x, three, zeros, cfg), InvalidInput);
  CHECK(GroupNormConfig{}.groups == 8);
  CHECK(GroupNormConfig{}.epsilon == 1e-5);
}

TEST_CASE("group norm backward matches finite differences") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t groups = 1 + uniform_index(rng, 2);
    const Tensor4 x = random_tensor(rng, 1 + uniform_index(rng, 2), 3, 3, 2 * groups);
    std::vector<double> gamma(x.c()), beta(x.c());
    for (auto& v : gamma) v = uniform(rng, 0.5, 1.5);
    for (auto& v : beta) v = uniform(rng, -1, 1);
    const Tensor4 up = random_tensor(rng, x.n(), x.h(), x.w(), x.c());
    const GroupNormConfig cfg{groups, 1e-5};
    const auto g = group_norm_backward(x, gamma, cfg, up);
    const auto nx = numeric_grad(x, [&](const Tensor4& t) { return dot(up, group_norm_forward(t, gamma, beta, cfg)); });
    CHECK(grad_close(g.x.data(), nx));
    const Tensor4 gt(1, 1, 1, x.c(), gamma);
    const auto ngamma = numeric_grad(gt, [&](const Tensor4& t) {
      return dot(up, group_norm_forward(x, t.data(), beta, cfg));
    });
    CHECK(grad_close(g.gamma, ngamma));
  }
}

TEST_CASE("rlrelu") {
  const Tensor4 x(1, 1, 1, 1, -2.0);
  CHECK(rlrelu(x, {}, 0).data()[0] == doctest::Approx(-0.4583333333333333).epsilon(1e-12));
  const Tensor4 pos(1, 2, 2, 1, std::vector<double>{0.0, 1.0, 2.5, 1e-9});
  CHECK(rlrelu(pos, {}, 0).data()[0] == 0.0);
  RlreluConfig train;
  train.mode = RlreluMode::train;
  for (std::size_t i = 0; i < 4; ++i) CHECK(rlrelu(pos, train, 7).data()[i] == pos.data()[i]);

  const Tensor4 neg(1, 100, 100, 10, -3.0);
  const Tensor4 out = rlrelu(neg, train, 11);
  for (double v : out.data()) {
    CHECK(v >= train.upper * -3.0);
    CHECK(v <= train.lower * -3.0);
  }
  CHECK(rlrelu(neg, train, 11).data()[42] == out.data()[42]);
  CHECK_THROWS_AS(rlrelu(x, RlreluConfig{0.5, 0.2, RlreluMode::train}, 0), InvalidInput);
  CHECK_THROWS_AS(rlrelu(x, RlreluConfig{0.0, 0.2, RlreluMode::train}, 0), InvalidInput);
}

TEST_CASE("rlrelu backward and monotonicity") {
  Rng rng(5);
  RlreluConfig train;
  train.mode = RlreluMode::train;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor4 x = random_tensor(rng, 1, 3, 4, 2);
    // Keep samples away from the kink so central differences are valid.
    for (double& v : x.data())
      if (std::abs(v) < 1e-2) v = 0.5;
    const Tensor4 up = random_tensor(rng, 1, 3, 4, 2);
    for (const auto& cfg : {RlreluConfig{}, train}) {
      const auto g = rlrelu_backward(x, cfg, 13, up);
      const auto n = numeric_grad(x, [&](const Tensor4& t) { return dot(up, rlrelu(t, cfg, 13)); });
      CHECK(grad_close(g.data(), n));
    }
  }
  const auto slopes = rlrelu_slopes(1, train, 3);
  double prev = -1e9;
  for (double v = -5.0; v <= 5.0; v += 0.25) {
    const double y = rlrelu(Tensor4(1, 1, 1, 1, v), train, 3).data()[0];
    CHECK(y >= prev);
    prev = y;
    if (v < 0) CHECK(y == doctest::Approx(slopes[0] * v));
  }
}

TEST_CASE("attention U-Net shape walk") {
  const auto shapes = attention_unet_shapes(256, 320, 3, 32, 4, 9);
  CHECK(shapes.front().name == "input");
  CHECK(shapes.back().name == "output");
  CHECK(shapes.back().height == 256);
  CHECK(shapes.back().width == 320);
  CHECK(shapes.back().channels == 9);
  std::size_t attention_maps = 0;
  for (const auto& s : shapes) {
    if (s.name == "down4/conv") {
      CHECK(s.height == 32);
      CHECK(s.width == 40);
      CHECK(s.channels == 256);
    }
    if (s.name.ends_with("/attention")) {
      ++attention_maps;
      CHECK(s.channels == 1);
    }
    if (s.name == "up1/concat") CHECK(s.channels == 64);
  }
  CHECK(attention_maps == 3);
  CHECK_THROWS_AS(attention_unet_shapes(250, 320, 3, 32, 4, 9), InvalidInput);
}
