#include "feedlab/survey.hpp"

#include "feedlab/errors.hpp"

namespace feedlab {

int64_t local_day(int64_t now_ms, int tz_offset_minutes) {
    const int64_t local = now_ms + int64_t(tz_offset_minutes) * 60'000;
    // Floor division; participants west of UTC can sit at negative epoch
    // offsets in tests.
    int64_t day = local / kMsPerDay;
    if (local % kMsPerDay < 0) --day;
    return day;
}

namespace {

void roll_day(SchedulerState& state, int64_t now) {
    const int64_t day = local_day(now, state.local_tz_offset);
    if (day == state.day_key) return;
    state.day_key = day;
    state.current_probability = kInitialSurveyProbability;
    state.answered_today = 0;
    for (auto& [id, prompt] : state.outstanding) state.expired.insert(id);
    state.outstanding.clear();
}

bool kind_locked(const std::optional<int64_t>& last_answered, int64_t now) {
    return last_answered && now - *last_answered < kKindLockoutMs;
}

} // namespace

std::optional<SurveyPrompt> maybe_issue(SchedulerState& state, int64_t now, Rng& rng) {
    roll_day(state, now);
    if (!rng.bernoulli(state.current_probability)) return std::nullopt;

    SurveyKind kind = rng.bernoulli(0.5) ? SurveyKind::Thermometer : SurveyKind::EmotionPair;
    const bool thermo_locked = kind_locked(state.last_answered_thermometer, now);
    const bool emotion_locked = kind_locked(state.last_answered_emotion, now);
    if (kind == SurveyKind::Thermometer && thermo_locked) kind = SurveyKind::EmotionPair;
    else if (kind == SurveyKind::EmotionPair && emotion_locked) kind = SurveyKind::Thermometer;
    if ((kind == SurveyKind::Thermometer && thermo_locked) ||
        (kind == SurveyKind::EmotionPair && emotion_locked)) {
        return std::nullopt;
    }

    SurveyPrompt prompt;
    prompt.kind = kind;
    if (kind == SurveyKind::EmotionPair) {
        prompt.positive = rng.bernoulli(0.5) ? PositiveEmotion::Excited : PositiveEmotion::Calm;
        prompt.negative = rng.bernoulli(0.5) ? NegativeEmotion::Angry : NegativeEmotion::Sad;
    }
    prompt.prompt_id = state.participant_id + "-p" + std::to_string(state.prompt_counter++);
    prompt.issued_at = now;
    state.outstanding.emplace(prompt.prompt_id, prompt);
    return prompt;
}

void record_answer(SchedulerState& state, const SurveyResponse& response, int64_t now) {
    auto it = state.outstanding.find(response.prompt_id);
    if (it == state.outstanding.end()) {
        if (state.expired.count(response.prompt_id)) throw PromptExpired(response.prompt_id);
        throw UnknownPrompt(response.prompt_id);
    }
    const SurveyPrompt& prompt = it->second;
    const size_t expected = prompt.kind == SurveyKind::Thermometer ? 1 : 2;
    if (response.values.size() != expected) {
        throw Error("InvalidResponse", "expected " + std::to_string(expected) + " values");
    }
    for (int v : response.values) {
        if (v < 0 || v > 100) throw Error("InvalidResponse", "value out of [0,100]");
    }

    roll_day(state, now);
    state.current_probability *= 0.5;
    state.answered_today += 1;
    if (prompt.kind == SurveyKind::Thermometer) state.last_answered_thermometer = now;
    else state.last_answered_emotion = now;
    state.outstanding.erase(it);
}

void discard_prompt(SchedulerState& state, const std::string& prompt_id) {
    state.outstanding.erase(prompt_id);
    state.expired.insert(prompt_id);
}

std::string thermometer_question(Party participant_party) {
    const char* out = participant_party == Party::Democrat ? "Republicans" : "Democrats";
    return std::string("At the moment, how do you feel about ") + out + "?";
}

std::string emotion_question(const std::string& emotion_label) {
    return "How much do you feel " + emotion_label + "?";
}

std::vector<std::pair<int, std::string>> slider_labels(SurveyKind kind) {
    if (kind == SurveyKind::Thermometer) {
        return {{0, "Very cold or unfavorable feeling"},
                {50, "No feeling at all"},
                {100, "Very warm or favorable feeling"}};
    }
    return {{0, "None at all"},
            {25, "A little"},
            {50, "Moderately"},
            {75, "A lot"},
            {100, "Extremely"}};
}

} // namespace feedlab
