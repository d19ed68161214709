#pragma once

#include <vector>

namespace feedlab::stats {

struct MannWhitneyResult {
    double u = 0;          // wins of x over y, ties counting half
    double p_two_sided = 1;
    bool exact = false;
};

// U via midranks. Exact two-sided p by enumerating all group labelings
// when n_x + n_y <= 12 and there are no ties; otherwise the normal
// approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y);

} // namespace feedlab::stats
