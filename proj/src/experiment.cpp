#include "feedlab/experiment.hpp"

#include <algorithm>
#include <map>

#include "feedlab/errors.hpp"
#include "feedlab/scoring.hpp"

namespace feedlab {

Assignment enroll(const Participant& participant, const StudyConfig& config,
                  EnrollmentState& state, Rng& rng, int enrollment_day) {
    const int open_reduce = std::max(0, config.quota_reduce - state.enrolled_reduce);
    const int open_increase = std::max(0, config.quota_increase - state.enrolled_increase);
    if (open_reduce == 0 && open_increase == 0) throw QuotasFull();

    Assignment assignment;
    assignment.participant_id = participant.participant_id;
    assignment.enrolled_at = enrollment_day;
    const double p_reduce = double(open_reduce) / double(open_reduce + open_increase);
    assignment.experiment = rng.bernoulli(p_reduce) ? Experiment::Reduce : Experiment::Increase;
    assignment.arm = rng.bernoulli(0.5) ? Arm::Treatment : Arm::Control;
    if (assignment.experiment == Experiment::Reduce) ++state.enrolled_reduce;
    else ++state.enrolled_increase;
    return assignment;
}

Phase phase_of(int day_index, const StudyConfig& config) {
    if (day_index < 1 || day_index > config.total_days)
        throw OutOfStudyWindow("day " + std::to_string(day_index));
    return day_index <= config.baseline_days ? Phase::Baseline : Phase::Intervention;
}

std::vector<Session> segment_sessions(std::vector<EngagementEvent> events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const EngagementEvent& a, const EngagementEvent& b) { return a.at < b.at; });

    std::vector<Session> sessions;
    std::optional<int64_t> last_view_at;
    for (auto& event : events) {
        const bool is_view = event.kind == EventKind::View;
        const bool split =
            is_view && last_view_at && event.at - *last_view_at >= kSessionGapMs;
        if (sessions.empty() || split) {
            sessions.push_back({event.participant_id, {}, event.at, event.at});
        }
        Session& current = sessions.back();
        current.events.push_back(event);
        current.start = std::min(current.start, event.at);
        current.end = std::max(current.end, event.at);
        if (is_view) last_view_at = event.at;
    }
    return sessions;
}

double return_rate(const std::vector<EngagementEvent>& events, int study_days) {
    if (study_days <= 0) return 0.0;
    if (events.empty()) return 0.0;
    return double(segment_sessions(events).size()) / double(study_days);
}

EngagementRates engagement_rates(const std::vector<EngagementEvent>& events) {
    int views = 0, reposts = 0, favorites = 0, replies = 0;
    for (const auto& e : events) {
        switch (e.kind) {
            case EventKind::View:
                if (e.visible_ms && *e.visible_ms >= 1000) ++views;
                break;
            case EventKind::Repost: ++reposts; break;
            case EventKind::Favorite: ++favorites; break;
            case EventKind::Reply: ++replies; break;
            default: break;
        }
    }
    if (views == 0) throw NoViews();
    EngagementRates rates;
    rates.repost_rate = double(reposts) / views;
    rates.favorite_rate = double(favorites) / views;
    rates.reply_rate = double(replies) / views;
    return rates;
}

std::vector<DayExposure> exposure_metrics(
    const std::vector<std::pair<int, std::optional<AapaScore>>>& daily_views) {
    struct Acc {
        int views = 0, political = 0, aapa = 0;
        double score_sum = 0;
    };
    std::map<int, Acc> by_day;
    for (const auto& [day, score] : daily_views) {
        if (!score) throw MissingScore("day " + std::to_string(day));
        Acc& acc = by_day[day];
        ++acc.views;
        if (score->is_political) {
            ++acc.political;
            acc.score_sum += score->count();
            if (is_aapa(*score)) ++acc.aapa;
        }
    }
    std::vector<DayExposure> out;
    for (const auto& [day, acc] : by_day) {
        DayExposure d;
        d.day = day;
        d.views = acc.views;
        d.political_fraction = acc.views ? double(acc.political) / acc.views : 0.0;
        if (acc.political > 0) {
            d.aapa_fraction_of_political = double(acc.aapa) / acc.political;
            d.mean_aapa_score = acc.score_sum / acc.political;
        }
        out.push_back(d);
    }
    return out;
}

std::set<std::string> completion_filter(const std::vector<std::string>& participant_ids,
                                        const std::vector<EngagementEvent>& events,
                                        const StudyConfig& config) {
    std::map<std::string, int> loads;
    for (const auto& e : events) {
        if (e.kind == EventKind::FeedLoad) ++loads[e.participant_id];
    }
    std::set<std::string> completed;
    for (const auto& id : participant_ids) {
        if (loads[id] >= config.min_feed_loads) completed.insert(id);
    }
    return completed;
}

} // namespace feedlab
