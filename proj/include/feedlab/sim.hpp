#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feedlab/domain.hpp"
#include "feedlab/experiment.hpp"
#include "feedlab/lexicon.hpp"
#include "feedlab/rerank.hpp"
#include "feedlab/rng.hpp"
#include "feedlab/scoring.hpp"

namespace feedlab::sim {

struct SimConfig {
    int n_participants = 1100;
    double democrat_fraction = 0.661;
    double bovitz_fraction = 0.62;

    // Feed composition.
    int batch_size = 35;
    int ads_per_batch = 5;
    double political_fraction = 0.32;
    double aapa_given_political = 0.331;
    // Relative marginal weights for which factors appear (v1..v8); social
    // distance, biased evaluation and partisan animosity lead.
    std::array<double, kFactorCount> factor_weights = {1.6, 0.7, 0.5, 0.6, 0.9, 1.1, 1.9, 1.7};

    // Behavior.
    double extra_sessions_per_day = 0.6;  // sessions = 1 + Poisson(this), capped at 8
    double loads_per_session_base = 1.5;  // loads = 1 + Geom(mean base * activity)
    double activity_mean = 2.0;           // lognormal participant multiplier
    double activity_sigma = 1.0;
    double scroll_depth_mean = 28.0;      // 5 + geometric, capped at feed length
    double favorite_rate = 0.0429;
    double repost_rate = 0.00484;
    double reply_rate = 0.008;
    double political_multiplier = 1.4;    // engagement boost on political posts

    // Response model.
    double latent_thermo_mean = 35.0;
    double latent_thermo_sd = 15.0;
    double response_noise_sd = 7.0;
    double post_survey_noise_sd = 8.0;
    double dose_coefficient = 0.0;        // thermometer shift per recent AAPA view
    double answer_probability = 0.9;
    double platform_effect = -1.5;        // CloudResearch shift on the post thermometer

    // Injected truth.
    double ate_thermometer_reduce = 2.11;
    double ate_thermometer_increase = -2.48;
    double ate_negative_emotion_reduce = -5.0;
    double ate_negative_emotion_increase = 5.0;
    std::array<double, kFactorCount> factor_dose_slopes = {0, 0, 0, 0, 0, 0, 0, 0};

    // Attrition injection (off by default; used to exercise the RI tests).
    double attrition_rate_treatment = 0.0;
    double attrition_rate_control = 0.0;

    StudyConfig study; // quotas, phase boundaries, min feed loads
    uint64_t master_seed = 42;
};

// Reads the flat TOML subset used by sim configs ([section] headers plus
// key = value lines).
SimConfig load_sim_config(const std::string& path);
uint64_t config_hash(const SimConfig& config);

struct GroundTruth {
    double ate_thermometer_reduce = 0;
    double ate_thermometer_increase = 0;
    double ate_negative_emotion_reduce = 0;
    double ate_negative_emotion_increase = 0;
    double dose_coefficient = 0;
    std::array<double, kFactorCount> factor_dose_slopes{};
};

// Latent per-participant state driving behavior and responses.
struct LatentState {
    double thermometer = 50;
    std::array<double, 4> emotion = {10, 9, 13, 18}; // angry, sad, excited, calm
    double activity = 1.0;
    bool attrited = false;
    int dropout_day = 0;
};

extern const std::array<const char*, 4> kEmotionNames; // angry, sad, excited, calm

struct PromptRecord {
    std::string participant_id;
    int day = 0;
    SurveyPrompt prompt;
};

struct ResponseRecord {
    std::string participant_id;
    int day = 0;
    SurveyKind kind = SurveyKind::Thermometer;
    PositiveEmotion positive = PositiveEmotion::Excited;
    NegativeEmotion negative = NegativeEmotion::Angry;
    SurveyResponse response;
};

struct RerankRecord {
    std::string participant_id;
    int day = 0;
    uint64_t load_seq = 0;
    int batch_len = 0;
    int n_aapa = 0;
    int n_demoted = 0;
    int n_reemitted = 0;
    int n_upranked = 0;
    std::optional<int> survey_slot;
};

struct RunArtifacts {
    SimConfig config;
    GroundTruth ground_truth;
    std::vector<Participant> participants;
    std::map<std::string, LatentState> latents;
    std::vector<Assignment> assignments;
    std::vector<EngagementEvent> events;
    std::vector<PromptRecord> prompts;
    std::vector<ResponseRecord> responses;
    std::map<std::string, AapaScore> scores;            // post_id -> score (non-ad)
    std::map<std::string, std::map<std::string, double>> post_surveys; // completers only
    std::vector<RerankRecord> rerank_log;
    std::set<std::string> completed;
    ScoringDiagnostics scoring_totals;
};

// Participants with party/platform labels, latent states, and pre-survey
// answers ("thermometer" 0-100 and the four emotions 1-5).
std::vector<Participant> generate_population(const SimConfig& config, Rng& rng,
                                             std::map<std::string, LatentState>* latents);

// One working set: batch_size posts including ads_per_batch ads, political
// and AAPA composition drawn to the configured targets, texts synthesized
// from the oracle's own keyword tables so scoring recovers the latent
// factors exactly. Latent truth is returned per post when requested.
FeedBatch generate_feed_batch(const std::string& participant_id, uint64_t load_seq,
                              int64_t fetched_at, const SimConfig& config, Rng& rng,
                              std::map<std::string, AapaScore>* latent_truth = nullptr);

// Views the top-k posts of a reranked feed and emits engagement events.
// Returns the number of AAPA posts among the qualifying views.
int simulate_behavior(const Participant& participant, const std::vector<RankedPost>& feed,
                      const ScoreMap& scores, int64_t start_at, const SimConfig& config,
                      Rng& rng, std::vector<EngagementEvent>& events,
                      std::set<std::string>* viewed_aapa_ids = nullptr);

// Slider answer for a prompt: latent state (already shifted by any injected
// treatment effect) plus dose-response on recent AAPA exposure plus noise,
// clamped to [0,100].
SurveyResponse simulate_response(const LatentState& latent, const SurveyPrompt& prompt,
                                 int recent_aapa_views, const SimConfig& config, Rng& rng,
                                 int64_t answered_at);

// Full 10-day study: enrollment with quotas, baseline then intervention
// phases, survey scheduling, engagement logging, uprank inventory updated
// at day boundaries. Deterministic for a given config.
RunArtifacts run_study(const SimConfig& config);

} // namespace feedlab::sim
