#include "feedlab/stats/linreg.hpp"

#include <cmath>
#include <set>

#include "feedlab/errors.hpp"

namespace feedlab::stats {

namespace {
constexpr double kZ95 = 1.959963984540054; // Phi^-1(0.975)
constexpr double kRankEps = 1e-9;
} // namespace

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

const Coefficient& RegressionResult::coef(const std::string& name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return c;
    }
    throw Error("UnknownCoefficient", name);
}

bool RegressionResult::has_coef(const std::string& name) const {
    for (const auto& c : coefficients) {
        if (c.name == name) return true;
    }
    return false;
}

namespace {

Eigen::VectorXd solve_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    qr.setThreshold(kRankEps);
    if (qr.rank() < X.cols()) throw RankDeficient("design rank " + std::to_string(qr.rank()) +
                                                  " < " + std::to_string(X.cols()));
    return qr.solve(y);
}

} // namespace

Eigen::MatrixXd hc2_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::VectorXd beta = solve_ols(X, y);
    const Eigen::VectorXd resid = y - X * beta;
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).ldlt().solve(
        Eigen::MatrixXd::Identity(X.cols(), X.cols()));
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const Eigen::VectorXd xi = X.row(i).transpose();
        const double h = (xi.transpose() * xtx_inv * xi)(0);
        const double denom = std::max(1.0 - h, 1e-8);
        meat += xi * xi.transpose() * (resid(i) * resid(i) / denom);
    }
    return xtx_inv * meat * xtx_inv;
}

RegressionResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::vector<std::string>& names) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (n < p) throw RankDeficient("more parameters than observations");
    const Eigen::VectorXd beta = solve_ols(X, y);
    const Eigen::VectorXd resid = y - X * beta;
    const double dof = double(n - p);
    const double sigma2 = dof > 0 ? resid.squaredNorm() / dof : 0.0;

    const Eigen::MatrixXd xtx_inv =
        (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd robust = hc2_covariance(X, y);

    RegressionResult result;
    result.n_obs = int(n);
    result.sigma2_eps = sigma2;
    for (Eigen::Index j = 0; j < p; ++j) {
        Coefficient c;
        c.name = names[j];
        c.estimate = beta(j);
        c.se = std::sqrt(std::max(0.0, sigma2 * xtx_inv(j, j)));
        c.se_robust = std::sqrt(std::max(0.0, robust(j, j)));
        c.ci_low = c.estimate - kZ95 * c.se;
        c.ci_high = c.estimate + kZ95 * c.se;
        const double z = c.se > 0 ? c.estimate / c.se : 0.0;
        c.p_value = c.se > 0 ? 2.0 * (1.0 - normal_cdf(std::abs(z))) : 1.0;
        result.coefficients.push_back(c);
    }
    return result;
}

namespace {

Eigen::MatrixXd build_design(size_t n, const std::vector<const std::vector<double>*>& columns) {
    Eigen::MatrixXd X(n, columns.size() + 1);
    X.col(0).setOnes();
    for (size_t j = 0; j < columns.size(); ++j) {
        for (size_t i = 0; i < n; ++i) X(i, j + 1) = (*columns[j])[i];
    }
    return X;
}

std::vector<double> to_double(const std::vector<int>& v) {
    return std::vector<double>(v.begin(), v.end());
}

} // namespace

RegressionResult ols_ate(const std::vector<double>& outcome, const std::vector<int>& treatment,
                         const std::vector<double>* pre_survey,
                         const std::vector<int>* platform) {
    const size_t n = outcome.size();
    if (n < 4) throw DegenerateDesign("need at least 4 observations");
    if (treatment.size() != n) throw DegenerateDesign("treatment length mismatch");

    std::vector<double> treat_d = to_double(treatment);
    std::vector<const std::vector<double>*> cols{&treat_d};
    std::vector<std::string> names{"(intercept)", "treatment"};
    std::vector<double> platform_d;
    if (pre_survey) {
        cols.push_back(pre_survey);
        names.push_back("pre_survey");
    }
    if (platform) {
        platform_d = to_double(*platform);
        cols.push_back(&platform_d);
        names.push_back("platform");
    }
    const Eigen::MatrixXd X = build_design(n, cols);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outcome.data(), n);
    return fit_ols(X, y, names);
}

double impute_baseline(double target_pre_survey,
                       const std::vector<std::pair<double, double>>& others) {
    if (others.size() < 2) throw InsufficientData("need at least 2 donors");
    std::vector<double> pre, baseline;
    for (const auto& [p, b] : others) {
        pre.push_back(p);
        baseline.push_back(b);
    }
    Eigen::MatrixXd X = build_design(others.size(), {&pre});
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(baseline.data(), baseline.size());
    RegressionResult fit;
    try {
        fit = fit_ols(X, y, {"(intercept)", "pre_survey"});
    } catch (const RankDeficient&) {
        throw InsufficientData("donor pre-survey answers are constant");
    }
    return fit.coef("(intercept)").estimate + fit.coef("pre_survey").estimate * target_pre_survey;
}

RegressionResult hte(const std::vector<double>& outcome, const std::vector<int>& treatment,
                     const std::vector<double>& moderator, const std::vector<double>* pre_survey,
                     const std::vector<int>* platform) {
    const size_t n = outcome.size();
    std::set<double> levels_treated, levels_control;
    for (size_t i = 0; i < n; ++i) {
        (treatment[i] ? levels_treated : levels_control).insert(moderator[i]);
    }
    if (levels_treated.size() < 2 || levels_control.size() < 2) {
        throw DegenerateModerator("moderator must vary within both arms");
    }

    std::vector<double> treat_d = to_double(treatment), interaction(n);
    for (size_t i = 0; i < n; ++i) interaction[i] = treat_d[i] * moderator[i];
    std::vector<const std::vector<double>*> cols{&treat_d, &moderator, &interaction};
    std::vector<std::string> names{"(intercept)", "treatment", "moderator",
                                   "treatment:moderator"};
    std::vector<double> platform_d;
    if (pre_survey) {
        cols.push_back(pre_survey);
        names.push_back("pre_survey");
    }
    if (platform) {
        platform_d = to_double(*platform);
        cols.push_back(&platform_d);
        names.push_back("platform");
    }
    const Eigen::MatrixXd X = build_design(n, cols);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(outcome.data(), n);
    return fit_ols(X, y, names);
}

std::array<std::optional<RegressionResult>, kFactorCount> factor_contribution(
    const std::vector<double>& post_rating, const std::vector<double>& pre_rating,
    const std::vector<std::array<double, kFactorCount>>& fractions) {
    const size_t n = post_rating.size();
    std::array<std::optional<RegressionResult>, kFactorCount> out;
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(post_rating.data(), n);
    for (int f = 0; f < kFactorCount; ++f) {
        std::vector<double> dose(n);
        for (size_t i = 0; i < n; ++i) dose[i] = fractions[i][f];
        const Eigen::MatrixXd X = build_design(n, {&pre_rating, &dose});
        try {
            out[f] = fit_ols(X, y, {"(intercept)", "pre_rating",
                                    std::string("fraction_") + kFactorNames[f]});
        } catch (const RankDeficient&) {
            out[f] = std::nullopt;
        }
    }
    return out;
}

Eigen::MatrixXd factor_cooccurrence(const std::vector<AapaScore>& scores) {
    if (scores.size() < 2) throw InsufficientData("need at least 2 scored posts");
    const size_t n = scores.size();
    Eigen::MatrixXd F(n, kFactorCount);
    for (size_t i = 0; i < n; ++i) {
        for (int f = 0; f < kFactorCount; ++f) F(i, f) = scores[i].factors[f] ? 1.0 : 0.0;
    }
    const Eigen::RowVectorXd mean = F.colwise().mean();
    const Eigen::MatrixXd centered = F.rowwise() - mean;
    const Eigen::VectorXd sd =
        (centered.array().square().colwise().sum() / double(n)).sqrt().transpose();

    Eigen::MatrixXd corr(kFactorCount, kFactorCount);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (int a = 0; a < kFactorCount; ++a) {
        for (int b = 0; b < kFactorCount; ++b) {
            if (sd(a) <= 0 || sd(b) <= 0) {
                corr(a, b) = nan;
                continue;
            }
            corr(a, b) = (centered.col(a).dot(centered.col(b)) / double(n)) / (sd(a) * sd(b));
        }
    }
    return corr;
}

} // namespace feedlab::stats
