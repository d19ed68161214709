#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "feedlab/rng.hpp"

namespace feedlab::stats {

// Draws one treatment assignment (0/1 per unit) with the study's actual
// randomization procedure.
using Randomizer = std::function<std::vector<int>(Rng&)>;

Randomizer bernoulli_randomizer(size_t n, double p = 0.5);
// Permutes the observed labels, preserving the treated count.
Randomizer permutation_randomizer(std::vector<int> observed);

struct RITestResult {
    double observed = 0;
    int n_draws = 0;
    double p = 1.0; // (1 + #{T* >= T}) / (1 + n_draws)
    uint64_t seed = 0;
    std::vector<int> dropped_covariates; // zero-variance columns removed
};

// Omnibus balance test: regress treatment on all covariates and compare the
// heteroskedasticity-robust Wald statistic (all slopes = 0) against its
// reassignment distribution.
RITestResult ri_covariate_balance(const Eigen::MatrixXd& covariates,
                                  const std::vector<int>& treatment,
                                  const Randomizer& randomizer, int n_draws = 10000,
                                  uint64_t seed = 0);

// Welch t statistic for attrition by arm vs. its reassignment distribution,
// two-sided.
RITestResult ri_attrition_rate(const std::vector<int>& attrition,
                               const std::vector<int>& treatment, const Randomizer& randomizer,
                               int n_draws = 10000, uint64_t seed = 0);

// Attrition regressed on treatment, covariates, and their interactions;
// robust F on the interaction block vs. its reassignment distribution.
RITestResult ri_attrition_pattern(const Eigen::MatrixXd& covariates,
                                  const std::vector<int>& treatment,
                                  const std::vector<int>& attrition,
                                  const Randomizer& randomizer, int n_draws = 10000,
                                  uint64_t seed = 0);

// Welch unequal-variances t statistic; 0 when there is no variance and no
// mean difference, +/-inf when means differ but variances are zero.
double welch_t(const std::vector<double>& a, const std::vector<double>& b);

} // namespace feedlab::stats
