#include "feedlab/stats/ri.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "feedlab/errors.hpp"
#include "feedlab/stats/linreg.hpp"

namespace feedlab::stats {

Randomizer bernoulli_randomizer(size_t n, double p) {
    return [n, p](Rng& rng) {
        std::vector<int> out(n);
        for (auto& t : out) t = rng.bernoulli(p) ? 1 : 0;
        return out;
    };
}

Randomizer permutation_randomizer(std::vector<int> observed) {
    return [observed](Rng& rng) {
        std::vector<int> out = observed;
        for (size_t i = out.size(); i > 1; --i) {
            std::swap(out[i - 1], out[rng.index(i)]);
        }
        return out;
    };
}

double welch_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return 0.0;
    auto moments = [](const std::vector<double>& v) {
        double mean = 0;
        for (double x : v) mean += x;
        mean /= double(v.size());
        double var = 0;
        for (double x : v) var += (x - mean) * (x - mean);
        var = v.size() > 1 ? var / double(v.size() - 1) : 0.0;
        return std::pair<double, double>{mean, var};
    };
    const auto [ma, va] = moments(a);
    const auto [mb, vb] = moments(b);
    const double se2 = va / double(a.size()) + vb / double(b.size());
    const double diff = ma - mb;
    if (se2 <= 0.0) {
        if (diff == 0.0) return 0.0;
        return diff > 0 ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
    }
    return diff / std::sqrt(se2);
}

namespace {

// Robust Wald statistic for H0: a block of coefficients is zero.
double robust_wald(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, int block_start,
                   int block_len) {
    const RegressionResult fit = fit_ols(X, y, std::vector<std::string>(X.cols(), "c"));
    Eigen::VectorXd beta(block_len);
    for (int j = 0; j < block_len; ++j) beta(j) = fit.coefficients[block_start + j].estimate;
    const Eigen::MatrixXd V = hc2_covariance(X, y);
    const Eigen::MatrixXd Vb = V.block(block_start, block_start, block_len, block_len);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Vb);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any()) {
        return std::numeric_limits<double>::infinity();
    }
    return beta.dot(ldlt.solve(beta));
}

Eigen::MatrixXd drop_constant_columns(const Eigen::MatrixXd& covariates,
                                      std::vector<int>& dropped) {
    std::vector<int> keep;
    for (int j = 0; j < covariates.cols(); ++j) {
        const double mean = covariates.col(j).mean();
        const double var = (covariates.col(j).array() - mean).square().sum();
        if (var < 1e-12) dropped.push_back(j);
        else keep.push_back(j);
    }
    Eigen::MatrixXd out(covariates.rows(), keep.size());
    for (size_t j = 0; j < keep.size(); ++j) out.col(j) = covariates.col(keep[j]);
    return out;
}

double ri_p_value(double observed, int n_draws, uint64_t seed,
                  const std::function<double(Rng&)>& draw_statistic) {
    int at_least = 0;
    for (int d = 0; d < n_draws; ++d) {
        Rng rng(derive_seed(seed, "ri_draw", uint64_t(d)));
        if (draw_statistic(rng) >= observed) ++at_least;
    }
    return double(1 + at_least) / double(1 + n_draws);
}

} // namespace

RITestResult ri_covariate_balance(const Eigen::MatrixXd& covariates,
                                  const std::vector<int>& treatment,
                                  const Randomizer& randomizer, int n_draws, uint64_t seed) {
    RITestResult result;
    result.n_draws = n_draws;
    result.seed = seed;
    const Eigen::MatrixXd covs = drop_constant_columns(covariates, result.dropped_covariates);
    if (covs.cols() == 0) throw AllCovariatesDropped();

    const int n = int(covs.rows());
    Eigen::MatrixXd X(n, covs.cols() + 1);
    X.col(0).setOnes();
    X.rightCols(covs.cols()) = covs;

    auto statistic = [&](const std::vector<int>& treat) {
        Eigen::VectorXd y(n);
        for (int i = 0; i < n; ++i) y(i) = treat[i];
        return robust_wald(X, y, 1, int(covs.cols()));
    };

    result.observed = statistic(treatment);
    result.p = ri_p_value(result.observed, n_draws, seed, [&](Rng& rng) {
        try {
            return statistic(randomizer(rng));
        } catch (const Error&) {
            return 0.0; // degenerate reassignment carries no evidence
        }
    });
    return result;
}

RITestResult ri_attrition_rate(const std::vector<int>& attrition,
                               const std::vector<int>& treatment, const Randomizer& randomizer,
                               int n_draws, uint64_t seed) {
    const size_t n = attrition.size();
    auto statistic = [&](const std::vector<int>& treat) {
        std::vector<double> treated, control;
        for (size_t i = 0; i < n; ++i) {
            (treat[i] ? treated : control).push_back(attrition[i]);
        }
        return std::abs(welch_t(treated, control));
    };

    bool any_treated = false, any_control = false;
    for (int t : treatment) (t ? any_treated : any_control) = true;
    if (!any_treated || !any_control) throw DegenerateArm();

    RITestResult result;
    result.n_draws = n_draws;
    result.seed = seed;
    result.observed = statistic(treatment);
    if (result.observed == 0.0) {
        bool constant = true;
        for (int a : attrition) constant = constant && a == attrition.front();
        if (constant) {
            // No variance anywhere: the statistic is undefined under every
            // relabeling; p = 1 by convention.
            result.p = 1.0;
            return result;
        }
    }
    result.p = ri_p_value(result.observed, n_draws, seed,
                          [&](Rng& rng) { return statistic(randomizer(rng)); });
    return result;
}

RITestResult ri_attrition_pattern(const Eigen::MatrixXd& covariates,
                                  const std::vector<int>& treatment,
                                  const std::vector<int>& attrition,
                                  const Randomizer& randomizer, int n_draws, uint64_t seed) {
    RITestResult result;
    result.n_draws = n_draws;
    result.seed = seed;
    const Eigen::MatrixXd covs = drop_constant_columns(covariates, result.dropped_covariates);
    const int k = int(covs.cols());
    if (k == 0) throw RankDeficient("no covariates to interact with treatment");

    const int n = int(covs.rows());
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = attrition[i];

    // Design: [1, treat, covs, treat x covs]; the robust F is the Wald
    // statistic on the interaction block divided by its dimension.
    auto statistic = [&](const std::vector<int>& treat) {
        Eigen::MatrixXd X(n, 2 + 2 * k);
        X.col(0).setOnes();
        for (int i = 0; i < n; ++i) X(i, 1) = treat[i];
        X.block(0, 2, n, k) = covs;
        for (int i = 0; i < n; ++i) X.row(i).segment(2 + k, k) = covs.row(i) * double(treat[i]);
        return robust_wald(X, y, 2 + k, k) / double(k);
    };

    result.observed = statistic(treatment);
    result.p = ri_p_value(result.observed, n_draws, seed, [&](Rng& rng) {
        try {
            return statistic(randomizer(rng));
        } catch (const Error&) {
            return 0.0;
        }
    });
    return result;
}

} // namespace feedlab::stats
