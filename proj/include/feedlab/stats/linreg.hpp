#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedlab/domain.hpp"

namespace feedlab::stats {

struct Coefficient {
    std::string name;
    double estimate = 0;
    double se = 0;        // classical
    double se_robust = 0; // HC2
    double ci_low = 0;    // estimate ± 1.96 * se
    double ci_high = 0;
    double p_value = 0;   // normal approximation, classical SE
};

struct RegressionResult {
    std::vector<Coefficient> coefficients;
    int n_obs = 0;
    int n_groups = 0;      // mixed models only
    double sigma2_u = 0;   // mixed models only
    double sigma2_eps = 0; // residual variance
    double log_restricted_likelihood = 0; // mixed models only

    const Coefficient& coef(const std::string& name) const;
    bool has_coef(const std::string& name) const;
};

double normal_cdf(double x);

// Least-squares fit with classical and HC2 standard errors. Throws
// RankDeficient when the design is not full column rank.
RegressionResult fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                         const std::vector<std::string>& names);

// HC2 covariance of an OLS fit (needed standalone by the RI tests).
Eigen::MatrixXd hc2_covariance(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

// outcome ~ 1 + treatment [+ pre_survey] [+ platform]
RegressionResult ols_ate(const std::vector<double>& outcome, const std::vector<int>& treatment,
                         const std::vector<double>* pre_survey = nullptr,
                         const std::vector<int>* platform = nullptr);

// Fits baseline_mean ~ 1 + pre_survey on the other participants and
// predicts the target's baseline. Throws InsufficientData (< 2 others or a
// constant pre-survey column).
double impute_baseline(double target_pre_survey,
                       const std::vector<std::pair<double, double>>& others);

// Main specification plus treatment x moderator. The moderator must take
// at least two distinct values inside each arm.
RegressionResult hte(const std::vector<double>& outcome, const std::vector<int>& treatment,
                     const std::vector<double>& moderator,
                     const std::vector<double>* pre_survey = nullptr,
                     const std::vector<int>* platform = nullptr);

// One regression per factor: post_rating ~ 1 + pre_rating + fraction_vn.
// A factor whose dose column is constant yields nullopt (rank deficient).
std::array<std::optional<RegressionResult>, kFactorCount> factor_contribution(
    const std::vector<double>& post_rating, const std::vector<double>& pre_rating,
    const std::vector<std::array<double, kFactorCount>>& fractions);

// Pearson correlation of the eight binary indicators across posts.
// Constant factors produce NaN rows/columns. Requires >= 2 posts.
Eigen::MatrixXd factor_cooccurrence(const std::vector<AapaScore>& scores);

} // namespace feedlab::stats
