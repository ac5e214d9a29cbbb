#include "ptk/hungarian.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace ptk {

// Potential-based shortest augmenting path formulation (O(n^3)) on the
// square-padded cost matrix, cost = -score.
std::vector<int> hungarian_max(const std::vector<std::vector<double>>& score) {
  const int rows = static_cast<int>(score.size());
  if (rows == 0) return {};
  const int cols = static_cast<int>(score[0].size());
  for (const auto& r : score)
    if (static_cast<int>(r.size()) != cols)
      throw std::invalid_argument("hungarian_max: ragged score matrix");
  const int n = std::max(rows, cols);

  auto cost = [&](int i, int j) -> double {
    if (i < rows && j < cols) return -score[i][j];
    return 0.0;  // padding
  };

  const double inf = std::numeric_limits<double>::infinity();
  // 1-indexed potentials/matching per the classic formulation
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> assignment(rows, -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[j];
    if (i >= 1 && i <= rows && j <= cols) assignment[i - 1] = j - 1;
  }
  return assignment;
}

}  // namespace ptk
