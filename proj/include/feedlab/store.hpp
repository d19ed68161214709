#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "feedlab/sim.hpp"

namespace feedlab {

// Append-only JSON Lines IO.
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows);
std::vector<nlohmann::json> read_jsonl(const std::string& path);
void append_jsonl(const std::string& path, const nlohmann::json& row);

} // namespace feedlab

namespace feedlab::sim {

// Serializes a run to a bundle directory: manifest.json plus JSONL logs
// (participants, assignments, events, prompts, responses, scores,
// post-surveys, rerank log) and ground_truth.json.
void write_bundle(const RunArtifacts& artifacts, const std::string& dir);

// Analysis-ready view of a persisted bundle.
struct Bundle {
    uint64_t seed = 0;
    uint64_t config_hash = 0;
    int total_days = 10;
    int baseline_days = 3;
    int min_feed_loads = 10;
    std::vector<Participant> participants;
    std::vector<Assignment> assignments;
    std::vector<EngagementEvent> events;
    std::vector<PromptRecord> prompts;
    std::vector<ResponseRecord> responses;
    std::map<std::string, AapaScore> scores;
    std::map<std::string, std::map<std::string, double>> post_surveys;
    std::vector<RerankRecord> rerank_log;
    GroundTruth ground_truth;
    bool has_ground_truth = false;
};

Bundle read_bundle(const std::string& dir);
Bundle bundle_from_artifacts(const RunArtifacts& artifacts);

} // namespace feedlab::sim
