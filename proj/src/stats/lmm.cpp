#include "feedlab/stats/lmm.hpp"

#include <cmath>

#include "feedlab/errors.hpp"

namespace feedlab::stats {

namespace {

constexpr double kZ95 = 1.959963984540054;
constexpr double kLogRatioLo = -12.0;
constexpr double kLogRatioHi = 12.0;
constexpr double kGoldenTol = 1e-8;

// Per-group sufficient statistics; everything the profiled deviance needs
// is O(G p^2) per evaluation.
struct GroupStats {
    std::vector<int> sizes;
    std::vector<Eigen::VectorXd> x_sums; // X_i' 1
    std::vector<double> y_sums;          // 1' y_i
    Eigen::MatrixXd xtx;
    Eigen::VectorXd xty;
    double yty = 0;
    int n = 0;
    int p = 0;
};

GroupStats collect(const std::vector<int>& group, const Eigen::MatrixXd& X,
                   const Eigen::VectorXd& y) {
    GroupStats s;
    s.n = int(X.rows());
    s.p = int(X.cols());
    int n_groups = 0;
    for (int g : group) n_groups = std::max(n_groups, g + 1);
    s.sizes.assign(n_groups, 0);
    s.x_sums.assign(n_groups, Eigen::VectorXd::Zero(s.p));
    s.y_sums.assign(n_groups, 0.0);
    for (int i = 0; i < s.n; ++i) {
        const int g = group[i];
        s.sizes[g] += 1;
        s.x_sums[g] += X.row(i).transpose();
        s.y_sums[g] += y(i);
    }
    s.xtx = X.transpose() * X;
    s.xty = X.transpose() * y;
    s.yty = y.squaredNorm();
    return s;
}

struct Profile {
    double deviance = 0; // -2 restricted log-likelihood + const
    Eigen::VectorXd beta;
    Eigen::MatrixXd a_inv; // (X' Sigma^-1 X)^-1
    double quad = 0;       // r' Sigma^-1 r
    double ok = true;
};

Profile evaluate(const GroupStats& s, double lambda) {
    Profile out;
    Eigen::MatrixXd A = s.xtx;
    Eigen::VectorXd b = s.xty;
    double log_det_sigma = 0;
    for (size_t g = 0; g < s.sizes.size(); ++g) {
        const double ni = s.sizes[g];
        if (ni == 0) continue;
        const double c = lambda / (1.0 + lambda * ni);
        A -= c * (s.x_sums[g] * s.x_sums[g].transpose());
        b -= c * s.y_sums[g] * s.x_sums[g];
        log_det_sigma += std::log1p(lambda * ni);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0).any()) {
        out.ok = false;
        out.deviance = std::numeric_limits<double>::infinity();
        return out;
    }
    out.beta = ldlt.solve(b);
    out.a_inv = ldlt.solve(Eigen::MatrixXd::Identity(s.p, s.p));

    // r' Sigma^-1 r from the aggregates.
    double quad = s.yty - 2.0 * out.beta.dot(s.xty) + out.beta.dot(s.xtx * out.beta);
    for (size_t g = 0; g < s.sizes.size(); ++g) {
        const double ni = s.sizes[g];
        if (ni == 0) continue;
        const double c = lambda / (1.0 + lambda * ni);
        const double rsum = s.y_sums[g] - s.x_sums[g].dot(out.beta);
        quad -= c * rsum * rsum;
    }
    out.quad = std::max(quad, 1e-300);

    const double log_det_a = ldlt.vectorD().array().log().sum();
    out.deviance = double(s.n - s.p) * std::log(out.quad) + log_det_sigma + log_det_a;
    return out;
}

} // namespace

double reml_deviance(const std::vector<int>& group, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y, double variance_ratio) {
    return evaluate(collect(group, X, y), variance_ratio).deviance;
}

RegressionResult fit_random_intercept(const std::vector<int>& group, const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const std::vector<std::string>& names) {
    if (X.rows() != Eigen::Index(group.size()) || X.rows() != y.size())
        throw DegenerateDesign("row count mismatch");
    const GroupStats stats = collect(group, X, y);
    int n_groups = 0;
    for (int sz : stats.sizes) n_groups += sz > 0;
    if (n_groups < 2) throw DegenerateDesign("need responses from at least 2 participants");
    if (stats.n <= stats.p) throw DegenerateDesign("not enough observations");
    {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
        qr.setThreshold(1e-9);
        if (qr.rank() < X.cols()) throw RankDeficient("fixed-effect design");
    }

    // Golden section on t = log(lambda).
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = kLogRatioLo, hi = kLogRatioHi;
    double t1 = hi - phi * (hi - lo), t2 = lo + phi * (hi - lo);
    double f1 = evaluate(stats, std::exp(t1)).deviance;
    double f2 = evaluate(stats, std::exp(t2)).deviance;
    while (hi - lo > kGoldenTol) {
        if (f1 <= f2) {
            hi = t2;
            t2 = t1;
            f2 = f1;
            t1 = hi - phi * (hi - lo);
            f1 = evaluate(stats, std::exp(t1)).deviance;
        } else {
            lo = t1;
            t1 = t2;
            f1 = f2;
            t2 = lo + phi * (hi - lo);
            f2 = evaluate(stats, std::exp(t2)).deviance;
        }
    }
    double lambda = std::exp(0.5 * (lo + hi));
    Profile best = evaluate(stats, lambda);

    // The boundary lambda = 0 (no participant variance) competes with the
    // interior optimum.
    Profile at_zero = evaluate(stats, 0.0);
    if (at_zero.ok && at_zero.deviance <= best.deviance) {
        lambda = 0.0;
        best = at_zero;
    }
    if (!best.ok) throw NonConvergence("REML profile not positive definite");

    const double dof = double(stats.n - stats.p);
    const double sigma2_eps = best.quad / dof;
    const double sigma2_u = lambda * sigma2_eps;

    // Cluster-robust (CR0) covariance as the robust column.
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(stats.p, stats.p);
    {
        // Recompute per-group score contributions m_i = X_i' Sigma_i^-1 r_i.
        // Done from raw rows to keep this independent of the aggregates.
        std::vector<Eigen::VectorXd> m(stats.sizes.size(), Eigen::VectorXd::Zero(stats.p));
        std::vector<double> rsum(stats.sizes.size(), 0.0);
        Eigen::VectorXd resid = y - X * best.beta;
        for (int i = 0; i < stats.n; ++i) {
            m[group[i]] += X.row(i).transpose() * resid(i);
            rsum[group[i]] += resid(i);
        }
        for (size_t g = 0; g < stats.sizes.size(); ++g) {
            if (stats.sizes[g] == 0) continue;
            const double c = lambda / (1.0 + lambda * stats.sizes[g]);
            const Eigen::VectorXd mg = m[g] - c * rsum[g] * stats.x_sums[g];
            meat += mg * mg.transpose();
        }
    }
    const Eigen::MatrixXd robust = best.a_inv * meat * best.a_inv;

    RegressionResult result;
    result.n_obs = stats.n;
    result.n_groups = n_groups;
    result.sigma2_u = sigma2_u;
    result.sigma2_eps = sigma2_eps;
    result.log_restricted_likelihood = -0.5 * best.deviance;
    for (int j = 0; j < stats.p; ++j) {
        Coefficient c;
        c.name = names[j];
        c.estimate = best.beta(j);
        c.se = std::sqrt(std::max(0.0, sigma2_eps * best.a_inv(j, j)));
        c.se_robust = std::sqrt(std::max(0.0, robust(j, j)));
        c.ci_low = c.estimate - kZ95 * c.se;
        c.ci_high = c.estimate + kZ95 * c.se;
        const double z = c.se > 0 ? c.estimate / c.se : 0.0;
        c.p_value = c.se > 0 ? 2.0 * (1.0 - normal_cdf(std::abs(z))) : 1.0;
        result.coefficients.push_back(c);
    }
    return result;
}

RegressionResult lmm_ate(const std::vector<InFeedRow>& responses,
                         const std::map<std::string, int>& treatment,
                         const std::map<std::string, double>& baseline_mean,
                         const std::map<std::string, int>& platform) {
    if (responses.empty()) throw DegenerateDesign("no responses");

    std::map<std::string, int> group_of;
    for (const auto& row : responses) {
        group_of.try_emplace(row.participant_id, int(group_of.size()));
    }

    const int n = int(responses.size());
    const bool with_platform = !platform.empty();
    const int p = with_platform ? 4 : 3;
    Eigen::MatrixXd X(n, p);
    Eigen::VectorXd y(n);
    std::vector<int> group(n);
    for (int i = 0; i < n; ++i) {
        const auto& row = responses[i];
        group[i] = group_of.at(row.participant_id);
        y(i) = row.value;
        X(i, 0) = 1.0;
        X(i, 1) = treatment.at(row.participant_id);
        X(i, 2) = baseline_mean.at(row.participant_id);
        if (with_platform) X(i, 3) = platform.at(row.participant_id);
    }
    std::vector<std::string> names{"(intercept)", "treatment", "baseline_mean"};
    if (with_platform) names.push_back("platform");
    return fit_random_intercept(group, X, y, names);
}

} // namespace feedlab::stats
