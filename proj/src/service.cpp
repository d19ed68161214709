#include "feedlab/service.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "feedlab/store.hpp"

namespace fs = std::filesystem;

namespace feedlab {

namespace {

int64_t wall_now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

int64_t now_from(const Json& body) {
    if (body.contains("now_ms") && body["now_ms"].is_number()) {
        return body["now_ms"].get<int64_t>();
    }
    return wall_now_ms();
}

Json scheduler_snapshot(const SchedulerState& s) {
    Json outstanding = Json::object();
    for (const auto& [id, prompt] : s.outstanding) outstanding[id] = prompt;
    Json j{{"participant_id", s.participant_id},
           {"local_tz_offset", s.local_tz_offset},
           {"day_key", s.day_key},
           {"current_probability", s.current_probability},
           {"answered_today", s.answered_today},
           {"outstanding", outstanding},
           {"expired", s.expired},
           {"prompt_counter", s.prompt_counter}};
    j["last_answered_thermometer"] =
        s.last_answered_thermometer ? Json(*s.last_answered_thermometer) : Json(nullptr);
    j["last_answered_emotion"] =
        s.last_answered_emotion ? Json(*s.last_answered_emotion) : Json(nullptr);
    return j;
}

SchedulerState scheduler_from_snapshot(const Json& j) {
    SchedulerState s;
    j.at("participant_id").get_to(s.participant_id);
    j.at("local_tz_offset").get_to(s.local_tz_offset);
    j.at("day_key").get_to(s.day_key);
    j.at("current_probability").get_to(s.current_probability);
    j.at("answered_today").get_to(s.answered_today);
    for (const auto& [id, prompt] : j.at("outstanding").items()) {
        s.outstanding.emplace(id, prompt.get<SurveyPrompt>());
    }
    j.at("expired").get_to(s.expired);
    j.at("prompt_counter").get_to(s.prompt_counter);
    if (!j["last_answered_thermometer"].is_null())
        s.last_answered_thermometer = j["last_answered_thermometer"].get<int64_t>();
    if (!j["last_answered_emotion"].is_null())
        s.last_answered_emotion = j["last_answered_emotion"].get<int64_t>();
    return s;
}

Json survey_payload(const SurveyPrompt& prompt, Party party) {
    Json j = prompt;
    if (prompt.kind == SurveyKind::Thermometer) {
        j["question"] = thermometer_question(party);
    } else {
        j["question_positive"] = emotion_question(to_string(prompt.positive));
        j["question_negative"] = emotion_question(to_string(prompt.negative));
    }
    Json labels = Json::array();
    for (const auto& [value, label] : slider_labels(prompt.kind)) {
        labels.push_back(Json{{"value", value}, {"label", label}});
    }
    j["slider_labels"] = labels;
    j["slider_starts_empty"] = true;
    j["numeric_value_hidden"] = true;
    return j;
}

} // namespace

FeedlabService::FeedlabService(ServiceConfig config, std::shared_ptr<ScoringBackend> backend)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      enroll_rng_(derive_seed(config_.master_seed, "service_enroll")) {
    if (!config_.store_dir.empty()) {
        fs::create_directories(config_.store_dir);
        fs::create_directories(config_.store_dir + "/events");
        fs::create_directories(config_.store_dir + "/surveys");
        fs::create_directories(config_.store_dir + "/demotion");
        fs::create_directories(config_.store_dir + "/scheduler");
        replay_store();
    }
}

void FeedlabService::replay_store() {
    const std::string registry = config_.store_dir + "/registry.jsonl";
    if (!fs::exists(registry)) return;
    for (const auto& row : read_jsonl(registry)) {
        auto state = std::make_unique<ParticipantState>();
        state->participant = row.at("participant").get<Participant>();
        state->assignment = row.at("assignment").get<Assignment>();
        state->enrolled_ms = row.at("enrolled_ms").get<int64_t>();
        state->scheduler.participant_id = state->participant.participant_id;
        state->scheduler.local_tz_offset = state->participant.local_tz_offset;
        if (state->assignment.experiment == Experiment::Reduce) ++quotas_.enrolled_reduce;
        else ++quotas_.enrolled_increase;

        const std::string pid = state->participant.participant_id;
        const std::string events_path = config_.store_dir + "/events/" + pid + ".jsonl";
        if (fs::exists(events_path)) {
            for (const auto& e : read_jsonl(events_path)) {
                state->seen_event_ids.insert(e.value("client_event_id", ""));
                state->next_seq = std::max(state->next_seq, e.value("seq", uint64_t(0)) + 1);
            }
        }
        const std::string sched_path = config_.store_dir + "/scheduler/" + pid + ".json";
        if (fs::exists(sched_path)) {
            std::ifstream in(sched_path);
            state->scheduler = scheduler_from_snapshot(Json::parse(in));
        }
        const std::string dem_path = config_.store_dir + "/demotion/" + pid + ".jsonl";
        if (fs::exists(dem_path)) {
            for (const auto& row2 : read_jsonl(dem_path)) {
                if (row2.value("type", "") == "session") {
                    state->demotion.session_id = row2.value("session_id", "");
                    state->demotion.session_cursor = row2.value("session_cursor", int64_t(0));
                    state->last_activity = row2.value("last_activity", int64_t(0));
                } else {
                    state->demotion.entries.push_back(
                        {row2.at("post").get<Post>(), row2.at("penalty_key").get<int64_t>()});
                }
            }
        }
        participants_[pid] = std::move(state);
    }
}

void FeedlabService::persist_enrollment(const ParticipantState& state) {
    if (config_.store_dir.empty()) return;
    append_jsonl(config_.store_dir + "/registry.jsonl",
                 Json{{"participant", state.participant},
                      {"assignment", state.assignment},
                      {"enrolled_ms", state.enrolled_ms}});
}

void FeedlabService::persist_demotion(const ParticipantState& state) {
    if (config_.store_dir.empty()) return;
    std::vector<Json> rows;
    rows.push_back(Json{{"type", "session"},
                        {"session_id", state.demotion.session_id},
                        {"session_cursor", state.demotion.session_cursor},
                        {"last_activity", state.last_activity}});
    for (const auto& entry : state.demotion.entries) {
        rows.push_back(Json{{"type", "entry"},
                            {"post_id", entry.post.post_id},
                            {"penalty_key", entry.penalty_key},
                            {"session_id", state.demotion.session_id},
                            {"post", entry.post}});
    }
    write_jsonl(config_.store_dir + "/demotion/" + state.participant.participant_id + ".jsonl",
                rows);
}

void FeedlabService::persist_scheduler(const ParticipantState& state) {
    if (config_.store_dir.empty()) return;
    std::ofstream out(
        config_.store_dir + "/scheduler/" + state.participant.participant_id + ".json",
        std::ios::trunc);
    out << scheduler_snapshot(state.scheduler).dump() << "\n";
}

FeedlabService::ParticipantState& FeedlabService::require_participant(
    const std::string& participant_id) {
    auto it = participants_.find(participant_id);
    if (it == participants_.end()) {
        throw HttpError(404, "UnknownParticipant", participant_id);
    }
    return *it->second;
}

int FeedlabService::study_day(const ParticipantState& state, int64_t now) const {
    return int((now - state.enrolled_ms) / kMsPerDay) + 1;
}

Json FeedlabService::handle_enroll(const Json& body) {
    std::lock_guard lock(mu_);
    if (!body.contains("participant")) throw HttpError(400, "MalformedBatch", "missing participant");
    Participant participant = body["participant"].get<Participant>();
    if (participants_.count(participant.participant_id)) {
        // Assignments are immutable; enrolling twice returns the original.
        return Json{{"assignment", participants_[participant.participant_id]->assignment}};
    }
    Assignment assignment;
    try {
        assignment = enroll(participant, config_.study, quotas_, enroll_rng_);
    } catch (const QuotasFull& e) {
        throw HttpError(409, "QuotasFull", e.what());
    }
    auto state = std::make_unique<ParticipantState>();
    state->participant = participant;
    state->assignment = assignment;
    state->enrolled_ms = now_from(body);
    state->scheduler.participant_id = participant.participant_id;
    state->scheduler.local_tz_offset = participant.local_tz_offset;
    persist_enrollment(*state);
    participants_[participant.participant_id] = std::move(state);
    return Json{{"assignment", assignment}};
}

Json FeedlabService::handle_rerank(const Json& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::lock_guard lock(mu_);
    const std::string pid = body.value("participant_id", "");
    ParticipantState& state = require_participant(pid);
    const int64_t now = now_from(body);
    const int day = study_day(state, now);
    if (day > config_.study.total_days) throw HttpError(409, "StudyEnded", pid);

    if (!body.contains("posts") || !body["posts"].is_array() || body["posts"].empty()) {
        throw HttpError(400, "MalformedBatch", "posts array required");
    }
    const uint64_t load_seq = body.value("load_seq", uint64_t(0));
    FeedBatch batch;
    try {
        std::vector<Post> posts;
        for (const auto& j : body["posts"]) posts.push_back(j.get<Post>());
        batch = validate_batch(std::move(posts), pid, load_seq, now);
    } catch (const Error& e) {
        throw HttpError(400, "MalformedBatch", e.what());
    } catch (const Json::exception& e) {
        throw HttpError(400, "MalformedBatch", e.what());
    }

    // A new session id or an hour of silence starts a fresh session; the
    // demotion cache does not survive it.
    const std::string session_id = body.value("session_id", "");
    if (session_id != state.demotion.session_id ||
        (state.last_activity > 0 && now - state.last_activity >= kSessionGapMs)) {
        state.demotion = DemotionCache{};
        state.demotion.session_id = session_id;
    }

    MergeResult merged = merge_demoted(batch, state.demotion);
    ScoringOutcome scored =
        score_posts(merged.batch.posts, *backend_, cache_, config_.scorer_timeout_ms);
    scoring_totals_.political_checks += scored.diagnostics.political_checks;
    scoring_totals_.factor_requests += scored.diagnostics.factor_requests;
    scoring_totals_.cache_hits += scored.diagnostics.cache_hits;
    scoring_totals_.cache_misses += scored.diagnostics.cache_misses;
    scoring_totals_.timeouts += scored.diagnostics.timeouts;
    scoring_totals_.degraded_parses += scored.diagnostics.degraded_parses;

    const Phase phase = phase_of(std::max(1, day), config_.study);
    const Arm effective_arm =
        phase == Phase::Intervention ? state.assignment.arm : Arm::Control;

    Rng sched_rng(derive_seed(config_.master_seed, pid + ":sched", load_seq));
    Rng rerank_rng(derive_seed(config_.master_seed, pid + ":rerank", load_seq));
    std::optional<SurveyPrompt> prompt = maybe_issue(state.scheduler, now, sched_rng);

    RerankedFeed reranked;
    if (state.assignment.experiment == Experiment::Reduce) {
        reranked = rerank_reduced(merged.batch, scored.scores, effective_arm, rerank_rng,
                                  prompt.has_value(), merged.reemitted_ids,
                                  state.demotion.session_cursor);
        for (auto& entry : reranked.demoted) state.demotion.entries.push_back(entry);
    } else {
        std::optional<Post> candidate;
        if (phase == Phase::Intervention) {
            candidate =
                inventory_.select(state.participant, state.seen_aapa, now, rerank_rng);
        }
        reranked = rerank_increased(merged.batch, effective_arm, candidate, rerank_rng,
                                    prompt.has_value());
    }
    state.demotion.session_cursor += int64_t(merged.batch.posts.size());
    state.last_activity = now;

    Json survey = Json(nullptr);
    if (prompt && reranked.survey_slot) {
        prompt->feed_position = *reranked.survey_slot;
        state.scheduler.outstanding[prompt->prompt_id].feed_position = *reranked.survey_slot;
        survey = survey_payload(*prompt, state.participant.party);
        if (!config_.store_dir.empty()) {
            append_jsonl(config_.store_dir + "/surveys/" + pid + ".jsonl",
                         Json{{"type", "prompt"}, {"day", day}, {"prompt", *prompt}});
        }
    } else if (prompt) {
        discard_prompt(state.scheduler, prompt->prompt_id);
    }

    // Everything served feeds the cross-participant inventory; AAPA posts
    // seen by this participant are excluded from their future candidates.
    Json out_posts = Json::array();
    for (const auto& rp : reranked.posts) {
        out_posts.push_back(
            Json{{"post_id", rp.post.post_id}, {"origin", to_string(rp.origin)}});
        if (rp.post.is_ad) continue;
        auto it = scored.scores.find(rp.post.post_id);
        if (it != scored.scores.end() && is_aapa(it->second)) {
            inventory_.record(rp.post, it->second, pid, state.participant.party, now);
            state.seen_aapa.insert(rp.post.post_id);
        }
    }

    persist_demotion(state);
    persist_scheduler(state);

    const int elapsed = int(std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - t0)
                                .count());
    Json diagnostics{{"political_checks", scored.diagnostics.political_checks},
                     {"factor_requests", scored.diagnostics.factor_requests},
                     {"cache_hits", scored.diagnostics.cache_hits},
                     {"cache_misses", scored.diagnostics.cache_misses},
                     {"timeouts", scored.diagnostics.timeouts},
                     {"degraded_parses", scored.diagnostics.degraded_parses},
                     {"elapsed_ms", elapsed},
                     {"over_budget", elapsed > config_.latency_budget_ms},
                     {"day", day},
                     {"phase", phase == Phase::Baseline ? "baseline" : "intervention"},
                     {"n_demoted", reranked.demoted.size()},
                     {"n_reemitted", merged.reemitted_ids.size()}};
    return Json{{"posts", out_posts}, {"survey", survey}, {"diagnostics", diagnostics}};
}

Json FeedlabService::handle_events(const Json& body) {
    std::lock_guard lock(mu_);
    const std::string pid = body.value("participant_id", "");
    ParticipantState& state = require_participant(pid);
    if (!body.contains("events") || !body["events"].is_array()) {
        throw HttpError(400, "MalformedBatch", "events array required");
    }
    int accepted = 0, duplicates = 0;
    for (const auto& row : body["events"]) {
        const std::string client_id = row.value("client_event_id", "");
        if (client_id.empty()) throw HttpError(400, "MalformedBatch", "client_event_id required");
        if (!state.seen_event_ids.insert(client_id).second) {
            ++duplicates;
            continue;
        }
        EngagementEvent event;
        try {
            event = row.get<EngagementEvent>();
        } catch (const Json::exception& e) {
            throw HttpError(400, "MalformedBatch", e.what());
        }
        // The wire allows sub-second views; they are stored but never count
        // as qualifying views downstream.
        Json stored = row;
        stored["seq"] = state.next_seq++;
        stored["participant_id"] = pid;
        if (!config_.store_dir.empty()) {
            append_jsonl(config_.store_dir + "/events/" + pid + ".jsonl", stored);
        }
        ++accepted;
    }
    return Json{{"accepted", accepted}, {"duplicates", duplicates},
                {"last_seq", state.next_seq - 1}};
}

Json FeedlabService::handle_survey_response(const Json& body) {
    std::lock_guard lock(mu_);
    const std::string pid = body.value("participant_id", "");
    ParticipantState& state = require_participant(pid);
    SurveyResponse response;
    try {
        response = body.get<SurveyResponse>();
    } catch (const Json::exception& e) {
        throw HttpError(400, "MalformedBatch", e.what());
    }
    const int64_t now = body.contains("now_ms") ? body["now_ms"].get<int64_t>()
                                                : response.answered_at;
    try {
        record_answer(state.scheduler, response, now);
    } catch (const PromptExpired& e) {
        throw HttpError(410, "PromptExpired", e.what());
    } catch (const UnknownPrompt& e) {
        throw HttpError(404, "UnknownPrompt", e.what());
    } catch (const Error& e) {
        throw HttpError(400, e.code, e.what());
    }
    persist_scheduler(state);
    if (!config_.store_dir.empty()) {
        append_jsonl(config_.store_dir + "/surveys/" + pid + ".jsonl",
                     Json{{"type", "response"}, {"response", response}});
    }
    return Json{{"ok", true}};
}

Json FeedlabService::handle_assignment(const std::string& participant_id) {
    std::lock_guard lock(mu_);
    return Json(require_participant(participant_id).assignment);
}

Json FeedlabService::handle_report(const std::string& run) const {
    const std::string path = config_.store_dir + "/runs/" + run + "/analysis/summary.json";
    std::ifstream in(path);
    if (!in) throw HttpError(404, "UnknownRun", run);
    return Json::parse(in);
}

void FeedlabService::serve(const std::string& host, int port) {
    httplib::Server server;
    auto wrap = [](const std::function<Json(const httplib::Request&)>& fn) {
        return [fn](const httplib::Request& req, httplib::Response& res) {
            try {
                res.set_content(fn(req).dump(), "application/json");
            } catch (const HttpError& e) {
                res.status = e.status;
                res.set_content(Json{{"error", e.code}, {"message", e.what()}}.dump(),
                                "application/json");
            } catch (const Json::exception& e) {
                res.status = 400;
                res.set_content(Json{{"error", "BadRequest"}, {"message", e.what()}}.dump(),
                                "application/json");
            } catch (const Error& e) {
                res.status = 500;
                res.set_content(Json{{"error", e.code}, {"message", e.what()}}.dump(),
                                "application/json");
            }
        };
    };
    server.Post("/v1/participants",
                wrap([this](const httplib::Request& req) {
                    return handle_enroll(Json::parse(req.body));
                }));
    server.Post("/v1/rerank", wrap([this](const httplib::Request& req) {
                    return handle_rerank(Json::parse(req.body));
                }));
    server.Post("/v1/events", wrap([this](const httplib::Request& req) {
                    return handle_events(Json::parse(req.body));
                }));
    server.Post("/v1/survey-response", wrap([this](const httplib::Request& req) {
                    return handle_survey_response(Json::parse(req.body));
                }));
    server.Get(R"(/v1/assignment/(.+))", wrap([this](const httplib::Request& req) {
                   return handle_assignment(req.matches[1]);
               }));
    server.Get(R"(/v1/report/(.+))", wrap([this](const httplib::Request& req) {
                   return handle_report(req.matches[1]);
               }));
    server.listen(host, port);
}

} // namespace feedlab
