#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feedlab/domain.hpp"
#include "feedlab/rng.hpp"

namespace feedlab {

struct StudyConfig {
    int quota_reduce = 600;
    int quota_increase = 500;
    int baseline_days = 3;
    int total_days = 10;
    int min_feed_loads = 10;
    uint64_t master_seed = 0;
};

enum class Phase { Baseline, Intervention };

struct EnrollmentState {
    int enrolled_reduce = 0;
    int enrolled_increase = 0;
};

// Bernoulli randomization: experiment drawn proportional to remaining
// quota, arm 50/50. Throws QuotasFull when both quotas are exhausted.
Assignment enroll(const Participant& participant, const StudyConfig& config,
                  EnrollmentState& state, Rng& rng, int enrollment_day = 1);

// Baseline for days 1..baseline_days, Intervention afterwards. Throws
// OutOfStudyWindow outside 1..total_days.
Phase phase_of(int day_index, const StudyConfig& config);

constexpr int64_t kSessionGapMs = 3600LL * 1000;

struct Session {
    std::string participant_id;
    std::vector<EngagementEvent> events;
    int64_t start = 0;
    int64_t end = 0;
};

// Splits a participant's event stream into sessions at every >= 1h gap
// between consecutive view events. Non-view events attach to the session
// that is open when they occur. Every event lands in exactly one session.
std::vector<Session> segment_sessions(std::vector<EngagementEvent> events);

// Mean sessions per day with zero-activity days counting as zero.
double return_rate(const std::vector<EngagementEvent>& events, int study_days);

struct EngagementRates {
    double repost_rate = 0;
    double favorite_rate = 0;
    double reply_rate = 0;
};

// Action counts divided by the number of posts viewed for at least one
// second. Throws NoViews if there is no qualifying view.
EngagementRates engagement_rates(const std::vector<EngagementEvent>& events);

struct DayExposure {
    int day = 0;
    int views = 0;
    double political_fraction = 0;
    std::optional<double> aapa_fraction_of_political; // missing when no political views
    std::optional<double> mean_aapa_score;            // over political views
};

// Per-day exposure summary from qualifying views joined with their scores.
// Throws MissingScore when a view arrives without one.
std::vector<DayExposure> exposure_metrics(
    const std::vector<std::pair<int, std::optional<AapaScore>>>& daily_views);

// Participants with at least config.min_feed_loads feed_load events.
std::set<std::string> completion_filter(const std::vector<std::string>& participant_ids,
                                        const std::vector<EngagementEvent>& events,
                                        const StudyConfig& config);

} // namespace feedlab
