#include "feedlab/stats/mann_whitney.hpp"

#include <algorithm>
#include <cmath>

#include "feedlab/errors.hpp"
#include "feedlab/stats/linreg.hpp"

namespace feedlab::stats {

namespace {

// Wins of the subset over its complement, ties counting half.
double u_statistic(const std::vector<double>& values, const std::vector<int>& in_x) {
    double u = 0;
    const int n = int(values.size());
    for (int i = 0; i < n; ++i) {
        if (!in_x[i]) continue;
        for (int j = 0; j < n; ++j) {
            if (in_x[j]) continue;
            if (values[i] > values[j]) u += 1.0;
            else if (values[i] == values[j]) u += 0.5;
        }
    }
    return u;
}

} // namespace

MannWhitneyResult mann_whitney_u(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.empty() || y.empty()) throw EmptySample();
    const int nx = int(x.size()), ny = int(y.size()), n = nx + ny;

    std::vector<double> values;
    values.reserve(n);
    values.insert(values.end(), x.begin(), x.end());
    values.insert(values.end(), y.begin(), y.end());
    std::vector<int> in_x(n, 0);
    std::fill(in_x.begin(), in_x.begin() + nx, 1);

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    bool ties = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();

    MannWhitneyResult result;
    result.u = u_statistic(values, in_x);
    const double mu = double(nx) * ny / 2.0;

    if (n <= 12 && !ties) {
        // Enumerate every labeling of nx positions as group x.
        result.exact = true;
        const double observed_dev = std::abs(result.u - mu);
        long long total = 0, extreme = 0;
        std::vector<int> pick(nx);
        for (int i = 0; i < nx; ++i) pick[i] = i;
        std::vector<int> mask(n);
        for (;;) {
            std::fill(mask.begin(), mask.end(), 0);
            for (int i : pick) mask[i] = 1;
            ++total;
            if (std::abs(u_statistic(values, mask) - mu) >= observed_dev - 1e-12) ++extreme;
            // next combination
            int i = nx - 1;
            while (i >= 0 && pick[i] == n - nx + i) --i;
            if (i < 0) break;
            ++pick[i];
            for (int j = i + 1; j < nx; ++j) pick[j] = pick[j - 1] + 1;
        }
        result.p_two_sided = double(extreme) / double(total);
        return result;
    }

    // Normal approximation with tie correction and continuity correction.
    double tie_sum = 0;
    for (size_t i = 0; i < sorted.size();) {
        size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = double(j - i);
        tie_sum += t * t * t - t;
        i = j;
    }
    const double var =
        (double(nx) * ny / 12.0) * (double(n + 1) - tie_sum / (double(n) * (n - 1)));
    if (var <= 0) {
        result.p_two_sided = 1.0;
        return result;
    }
    const double diff = result.u - mu;
    const double cc = diff > 0 ? 0.5 : (diff < 0 ? -0.5 : 0.0);
    const double z = (diff - cc) / std::sqrt(var);
    result.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
    return result;
}

} // namespace feedlab::stats
