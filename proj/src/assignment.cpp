#include "toolpose/assignment.hpp"

#include <limits>

namespace toolpose {

namespace {

// Requires n <= m. Returns assigned column for each row.
std::vector<std::size_t> solve_wide(const Matrix& a) {
  const std::size_t n = a.rows, m = a.cols;
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; index 0 is the virtual start column.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> row_to_col(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  }
  return row_to_col;
}

}  // namespace

std::vector<std::optional<std::size_t>> min_cost_assignment(const Matrix& cost) {
  std::vector<std::optional<std::size_t>> result(cost.rows);
  if (cost.rows == 0 || cost.cols == 0) return result;
  if (cost.rows <= cost.cols) {
    const auto cols = solve_wide(cost);
    for (std::size_t r = 0; r < cost.rows; ++r) result[r] = cols[r];
    return result;
  }
  Matrix t(cost.cols, cost.rows);
  for (std::size_t r = 0; r < cost.rows; ++r)
    for (std::size_t c = 0; c < cost.cols; ++c) t(c, r) = cost(r, c);
  const auto rows = solve_wide(t);
  for (std::size_t c = 0; c < rows.size(); ++c) result[rows[c]] = c;
  return result;
}

}  // namespace toolpose
