#include "feedlab/stats/fdr.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "feedlab/errors.hpp"

namespace feedlab::stats {

namespace {

// BH rejection count at level alpha for p sorted ascending.
int bh_rejections(const std::vector<double>& sorted_p, double alpha) {
    const int m = int(sorted_p.size());
    int k = 0;
    for (int i = 1; i <= m; ++i) {
        if (sorted_p[i - 1] <= alpha * double(i) / double(m)) k = i;
    }
    return k;
}

} // namespace

std::vector<double> sharpened_fdr(const std::vector<double>& pvals) {
    const int m = int(pvals.size());
    for (double p : pvals) {
        if (!(p >= 0.0 && p <= 1.0)) throw InvalidP(std::to_string(p));
    }
    if (m == 0) return {};

    std::vector<int> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return pvals[a] < pvals[b]; });
    std::vector<double> sorted_p(m);
    for (int i = 0; i < m; ++i) sorted_p[i] = pvals[order[i]];

    // Rejection counts are nondecreasing in q, so each sorted test picks up
    // the first grid level that reaches its rank.
    std::vector<double> q_sorted(m, 1.0);
    int covered = 0;
    const int steps = int(std::lround(1.0 / kFdrGridStep));
    for (int step = 1; step <= steps && covered < m; ++step) {
        const double q = double(step) * kFdrGridStep;
        const int r1 = bh_rejections(sorted_p, q / (1.0 + q));
        const int k = r1 >= m ? m : bh_rejections(sorted_p, q * double(m) / double(m - r1));
        for (int i = covered; i < k; ++i) q_sorted[i] = q;
        covered = std::max(covered, k);
    }
    // Monotone by construction; enforce anyway against grid-edge rounding.
    for (int i = 1; i < m; ++i) q_sorted[i] = std::max(q_sorted[i], q_sorted[i - 1]);

    std::vector<double> out(m);
    for (int i = 0; i < m; ++i) out[order[i]] = q_sorted[i];
    return out;
}

namespace {

void sharpen_pool(const std::vector<const std::map<std::string, double>*>& tiers,
                  const std::map<std::string, double>& wanted,
                  std::map<std::string, double>& out) {
    std::vector<std::string> ids;
    std::vector<double> ps;
    for (const auto* tier : tiers) {
        for (const auto& [id, p] : *tier) {
            ids.push_back(id);
            ps.push_back(p);
        }
    }
    const std::vector<double> qs = sharpened_fdr(ps);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (wanted.count(ids[i])) out[ids[i]] = qs[i];
    }
}

} // namespace

std::map<std::string, double> adjust_outcome_tiers(
    const std::map<std::string, double>& primary,
    const std::map<std::string, double>& secondary,
    const std::map<std::string, double>& tertiary) {
    for (const auto& [id, p] : secondary) {
        if (primary.count(id)) throw OverlappingTiers(id);
    }
    for (const auto& [id, p] : tertiary) {
        if (primary.count(id) || secondary.count(id)) throw OverlappingTiers(id);
    }

    std::map<std::string, double> out = primary; // not adjusted
    if (!secondary.empty()) sharpen_pool({&primary, &secondary}, secondary, out);
    if (!tertiary.empty()) sharpen_pool({&primary, &secondary, &tertiary}, tertiary, out);
    return out;
}

std::vector<double> adjust_hte(const std::vector<double>& interaction_pvals) {
    return sharpened_fdr(interaction_pvals);
}

} // namespace feedlab::stats
