#pragma once

#include <cstdint>

namespace feedlab::stats {

// Generative model for the power simulations: the in-feed random-intercept
// specification (or plain OLS when obs_per_participant == 1).
struct PowerParams {
    double sigma_u = 6.5;         // participant intercept SD
    double sigma_eps = 10.0;      // residual SD
    int obs_per_participant = 10; // responses per participant
    double baseline_mean = 50.0;
    double baseline_sd = 20.0;
    double baseline_coef = 0.85;
    double intercept = 2.0;
};

// Share of n_sims replications whose treatment coefficient rejects at
// alpha. Per-simulation seeds derive from (seed, sim index), so calls with
// different n or effect share randomness and power is monotone.
double power_simulation(double effect, int n_participants, const PowerParams& params,
                        int n_sims, double alpha = 0.05, uint64_t seed = 0);

} // namespace feedlab::stats
