#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "feedlab/stats/linreg.hpp"

namespace feedlab::stats {

// Random-intercept linear mixed model
//   y_ij = x_ij' beta + u_i + eps_ij,  u_i ~ N(0, s2_u), eps ~ N(0, s2_e).
// The variance ratio s2_u/s2_e is profiled out of the REML deviance and
// optimized by golden section over its log in [-12, 12] (tolerance 1e-8),
// with the s2_u = 0 boundary checked explicitly. Fixed effects at the
// optimum come from GLS; Wald CIs use the normal approximation.
RegressionResult fit_random_intercept(const std::vector<int>& group, const Eigen::MatrixXd& X,
                                      const Eigen::VectorXd& y,
                                      const std::vector<std::string>& names);

// REML criterion (-2 restricted log-likelihood up to an additive constant)
// at a given variance ratio. Exposed for the likelihood-ordering checks.
double reml_deviance(const std::vector<int>& group, const Eigen::MatrixXd& X,
                     const Eigen::VectorXd& y, double variance_ratio);

// In-feed ATE: repeated responses regressed on treatment, the baseline-
// period mean of the same question, and the recruitment platform; one
// random intercept per participant.
struct InFeedRow {
    std::string participant_id;
    double value = 0;
};

RegressionResult lmm_ate(const std::vector<InFeedRow>& responses,
                         const std::map<std::string, int>& treatment,
                         const std::map<std::string, double>& baseline_mean,
                         const std::map<std::string, int>& platform);

} // namespace feedlab::stats
