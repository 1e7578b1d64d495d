#pragma once

// Independent reference implementations and generators shared by the tests.
// The oracles are written the slow, obvious way on purpose and do not call
// into the library code they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

#include "toolpose/heatmap.hpp"
#include "toolpose/rng.hpp"

namespace toolpose::testing {

inline Heatmap random_map(Rng& rng, std::size_t max_side = 32, std::size_t max_channels = 4,
                          double lo = 0.0, double hi = 1.0) {
  const std::size_t h = 2 + uniform_index(rng, max_side - 1);
  const std::size_t w = 2 + uniform_index(rng, max_side - 1);
  const std::size_t c = 1 + uniform_index(rng, max_channels);
  std::vector<double> data(h * w * c);
  for (double& v : data) v = uniform(rng, lo, hi);
  return Heatmap(h, w, c, std::move(data));
}

// Four nested loops over the literal index ranges of the double sum.
inline double naive_tv(const Heatmap& m) {
  double total = 0.0;
  for (std::size_t c = 0; c < m.channels(); ++c) {
    for (std::size_t i = 0; i < m.height(); ++i) {
      for (std::size_t j = 0; j < m.width(); ++j) {
        if (i + 1 < m.height()) total += std::abs(m.at(i + 1, j, c) - m.at(i, j, c));
        if (j + 1 < m.width()) total += std::abs(m.at(i, j + 1, c) - m.at(i, j, c));
      }
    }
  }
  return total;
}

struct BruteAssignment {
  double best = 0.0;
  std::size_t cardinality = 0;
};

// Enumerates every partial one-to-one assignment of rows to columns. `allowed`
// filters pairs; `value` scores them. Returns the best value under the given
// ordering: maximise value (maximize = true) or, for distance problems, first
// maximise the number of pairs and then minimise their summed value.
template <typename Allowed, typename Value>
BruteAssignment brute_force_assignment(std::size_t rows, std::size_t cols, Allowed allowed,
                                       Value value, bool maximize) {
  BruteAssignment best{maximize ? 0.0 : std::numeric_limits<double>::infinity(), 0};
  std::vector<char> used(cols, 0);
  const auto better = [&](double v, std::size_t k) {
    if (maximize) return v > best.best;
    return k > best.cardinality || (k == best.cardinality && v < best.best);
  };
  const auto rec = [&](auto&& self, std::size_t r, double acc, std::size_t k) -> void {
    if (r == rows) {
      if (better(acc, k)) best = {acc, k};
      return;
    }
    self(self, r + 1, acc, k);
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c] || !allowed(r, c)) continue;
      used[c] = 1;
      self(self, r + 1, acc + value(r, c), k + 1);
      used[c] = 0;
    }
  };
  rec(rec, 0, 0.0, 0);
  if (!maximize && best.cardinality == 0) best.best = 0.0;
  return best;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-8});
  return std::abs(a - b) / scale;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("toolpose_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace toolpose::testing
