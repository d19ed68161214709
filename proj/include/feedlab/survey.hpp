#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feedlab/domain.hpp"
#include "feedlab/rng.hpp"

namespace feedlab {

constexpr double kInitialSurveyProbability = 0.5;
constexpr int64_t kKindLockoutMs = 10 * 60 * 1000;
constexpr int64_t kMsPerDay = 24LL * 3600 * 1000;

// Per-participant EMA state. The issue probability starts each
// participant-local day at kInitialSurveyProbability and halves with every
// answered survey; answering also locks that survey kind for 10 minutes.
// Ignored prompts change nothing.
struct SchedulerState {
    std::string participant_id;
    int local_tz_offset = 0; // minutes
    int64_t day_key = INT64_MIN;
    double current_probability = kInitialSurveyProbability;
    int answered_today = 0;
    std::optional<int64_t> last_answered_thermometer;
    std::optional<int64_t> last_answered_emotion;
    std::map<std::string, SurveyPrompt> outstanding;
    std::set<std::string> expired;
    uint64_t prompt_counter = 0;
};

int64_t local_day(int64_t now_ms, int tz_offset_minutes);

// Called once per intervention event. Draws issue/no-issue at the current
// probability, then the kind 50/50; a kind inside its 10-minute lockout is
// replaced by the other, and if both are locked no prompt is issued.
std::optional<SurveyPrompt> maybe_issue(SchedulerState& state, int64_t now, Rng& rng);

// Marks an outstanding prompt answered: halves the day's probability,
// stamps the kind lockout, increments answered_today. Throws UnknownPrompt
// or PromptExpired.
void record_answer(SchedulerState& state, const SurveyResponse& response, int64_t now);

// Drops a prompt that was issued but never placed in a feed (e.g. the
// working set had no AAPA post). Not an answer: no halving, no lockout.
void discard_prompt(SchedulerState& state, const std::string& prompt_id);

// Render metadata for the in-feed widget: question wording and the exact
// slider stop labels. Sliders start empty and hide the numeric value.
std::string thermometer_question(Party participant_party);
std::string emotion_question(const std::string& emotion_label);
std::vector<std::pair<int, std::string>> slider_labels(SurveyKind kind);

} // namespace feedlab
