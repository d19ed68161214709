#include "feedlab/stats/power.hpp"

#include <vector>

#include <Eigen/Dense>

#include "feedlab/errors.hpp"
#include "feedlab/rng.hpp"
#include "feedlab/stats/lmm.hpp"
#include "feedlab/stats/linreg.hpp"

namespace feedlab::stats {

double power_simulation(double effect, int n_participants, const PowerParams& params,
                        int n_sims, double alpha, uint64_t seed) {
    if (n_sims < 1) throw DegenerateDesign("n_sims must be positive");
    const int m = std::max(1, params.obs_per_participant);

    int rejections = 0;
    for (int sim = 0; sim < n_sims; ++sim) {
        const uint64_t sim_seed = derive_seed(seed, "power_sim", uint64_t(sim));

        std::vector<int> treat(n_participants);
        std::vector<double> baseline(n_participants), intercepts(n_participants);
        int treated = 0;
        for (int i = 0; i < n_participants; ++i) {
            // One stream per participant index: prefixes agree across n, so
            // larger samples extend smaller ones (common random numbers).
            Rng prng(derive_seed(sim_seed, "participant", uint64_t(i)));
            treat[i] = prng.bernoulli(0.5) ? 1 : 0;
            treated += treat[i];
            baseline[i] = prng.normal(params.baseline_mean, params.baseline_sd);
            intercepts[i] = prng.normal(0.0, params.sigma_u);
        }
        if (treated == 0) treat[0] = 1;
        else if (treated == n_participants) treat[0] = 0;

        const int rows = n_participants * m;
        Eigen::MatrixXd X(rows, 3);
        Eigen::VectorXd y(rows);
        std::vector<int> group(rows);
        int r = 0;
        for (int i = 0; i < n_participants; ++i) {
            Rng erng(derive_seed(sim_seed, "eps", uint64_t(i)));
            for (int j = 0; j < m; ++j, ++r) {
                group[r] = i;
                X(r, 0) = 1.0;
                X(r, 1) = treat[i];
                X(r, 2) = baseline[i];
                y(r) = params.intercept + effect * treat[i] +
                       params.baseline_coef * baseline[i] + intercepts[i] +
                       erng.normal(0.0, params.sigma_eps);
            }
        }

        const std::vector<std::string> names{"(intercept)", "treatment", "baseline"};
        RegressionResult fit = m == 1 ? fit_ols(X, y, names)
                                      : fit_random_intercept(group, X, y, names);
        if (fit.coef("treatment").p_value < alpha) ++rejections;
    }
    return double(rejections) / double(n_sims);
}

} // namespace feedlab::stats
