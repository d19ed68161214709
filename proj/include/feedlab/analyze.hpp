#pragma once

#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "feedlab/store.hpp"

namespace feedlab {

struct AnalyzeOptions {
    int ri_draws = 2000;
    uint64_t ri_seed = 7;
    std::optional<Experiment> only_experiment;
};

// Deterministic analysis output: CSV tables keyed by filename plus a JSON
// summary. Identical bundles produce byte-identical tables.
struct AnalysisTables {
    std::map<std::string, std::string> csv;
    Json summary;
};

AnalysisTables analyze_bundle(const sim::Bundle& bundle, const AnalyzeOptions& options = {});
void write_tables(const AnalysisTables& tables, const std::string& out_dir);

// "%.10g"; NaN renders as NA.
std::string format_double(double v);

} // namespace feedlab
