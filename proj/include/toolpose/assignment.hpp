#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace toolpose {

// Dense row-major matrix of assignment costs or scores.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Minimum-cost assignment (Hungarian method with potentials, O(n^2 m)).
// Every row is assigned when rows <= cols, every column otherwise. Entry r
// of the result is the column given to row r, or nullopt.
std::vector<std::optional<std::size_t>> min_cost_assignment(const Matrix& cost);

}  // namespace toolpose
