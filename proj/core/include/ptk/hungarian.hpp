#pragma once

#include <vector>

namespace ptk {

/// Maximum-total-score one-to-one assignment over a (possibly rectangular)
/// score matrix. Returns, per row, the assigned column or -1. Unassignable
/// entries may be marked with very negative scores.
std::vector<int> hungarian_max(const std::vector<std::vector<double>>& score);

}  // namespace ptk
