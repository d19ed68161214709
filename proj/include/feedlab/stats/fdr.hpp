#pragma once

#include <map>
#include <string>
#include <vector>

namespace feedlab::stats {

constexpr double kFdrGridStep = 1e-4;

// Two-stage sharpened FDR q-values. For each level q on the grid
// {1e-4, 2e-4, ..., 1.0}: stage 1 runs Benjamini-Hochberg at q/(1+q) to
// estimate the number of true nulls m - r1; stage 2 runs BH at
// q * m / (m - r1) and its rejections are the procedure's rejections. The
// q-value of a test is the smallest grid level at which it is rejected
// (1.0 if never). Output order matches input order; monotone in p.
std::vector<double> sharpened_fdr(const std::vector<double>& pvals);

// Tier routing: primary outcomes stay raw; secondary q-values come from
// sharpening the pooled primary+secondary p-values; tertiary from pooling
// all three tiers. Ids must be disjoint across tiers.
std::map<std::string, double> adjust_outcome_tiers(
    const std::map<std::string, double>& primary,
    const std::map<std::string, double>& secondary,
    const std::map<std::string, double>& tertiary);

// Heterogeneity tests are sharpened together over their L x K hypotheses.
std::vector<double> adjust_hte(const std::vector<double>& interaction_pvals);

} // namespace feedlab::stats
