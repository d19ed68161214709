#pragma once

#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "feedlab/domain.hpp"
#include "feedlab/errors.hpp"
#include "feedlab/experiment.hpp"
#include "feedlab/rerank.hpp"
#include "feedlab/scoring.hpp"
#include "feedlab/survey.hpp"

namespace feedlab {

struct HttpError : Error {
    HttpError(int status, const std::string& code, const std::string& what)
        : Error(code, what), status(status) {}
    int status;
};

struct ServiceConfig {
    std::string store_dir;
    int latency_budget_ms = 3000; // soft target, reported in diagnostics
    int scorer_timeout_ms = 8000;
    uint64_t master_seed = 42;
    StudyConfig study;
};

// The extension-facing backend: enrollment, the rerank protocol, event
// ingestion, survey responses, and report lookup. All state is rebuilt from
// the append-only JSONL logs under store_dir on startup.
class FeedlabService {
  public:
    FeedlabService(ServiceConfig config, std::shared_ptr<ScoringBackend> backend);

    // POST /v1/participants {participant, now_ms?} -> {assignment}
    Json handle_enroll(const Json& body);
    // POST /v1/rerank {participant_id, load_seq, session_id, posts, now_ms?}
    //   -> {posts: [{post_id, origin}], survey|null, diagnostics}
    Json handle_rerank(const Json& body);
    // POST /v1/events {participant_id, events: [{client_event_id, ...}]}
    Json handle_events(const Json& body);
    // POST /v1/survey-response {participant_id, prompt_id, values, answered_at}
    Json handle_survey_response(const Json& body);
    // GET /v1/assignment/{participant_id}
    Json handle_assignment(const std::string& participant_id);
    // GET /v1/report/{run}: summary of an analysis bundle under store/runs.
    Json handle_report(const std::string& run) const;

    // Blocking HTTP server on host:port.
    void serve(const std::string& host, int port);

    const ScoringDiagnostics& scoring_totals() const { return scoring_totals_; }

  private:
    struct ParticipantState {
        Participant participant;
        Assignment assignment;
        int64_t enrolled_ms = 0;
        SchedulerState scheduler;
        DemotionCache demotion;
        int64_t last_activity = 0;
        std::set<std::string> seen_aapa;
        std::set<std::string> seen_event_ids;
        uint64_t next_seq = 1;
    };

    ParticipantState& require_participant(const std::string& participant_id);
    void replay_store();
    void persist_enrollment(const ParticipantState& state);
    void persist_demotion(const ParticipantState& state);
    void persist_scheduler(const ParticipantState& state);
    int study_day(const ParticipantState& state, int64_t now) const;

    ServiceConfig config_;
    std::shared_ptr<ScoringBackend> backend_;
    ScoreCache cache_;
    ScoringDiagnostics scoring_totals_;
    EnrollmentState quotas_;
    Rng enroll_rng_;
    UprankInventory inventory_;
    std::map<std::string, std::unique_ptr<ParticipantState>> participants_;
    std::mutex mu_; // registry-level; per-participant streams serialize here too
};

} // namespace feedlab
