#include "feedlab/store.hpp"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "feedlab/errors.hpp"

namespace fs = std::filesystem;

namespace feedlab {

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("StoreWrite", path);
    for (const auto& row : rows) out << row.dump() << "\n";
}

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("StoreRead", path);
    std::vector<nlohmann::json> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(nlohmann::json::parse(line));
    }
    return rows;
}

void append_jsonl(const std::string& path, const nlohmann::json& row) {
    std::ofstream out(path, std::ios::app);
    if (!out) throw Error("StoreWrite", path);
    out << row.dump() << "\n";
}

} // namespace feedlab

namespace feedlab::sim {

namespace {

Json prompt_record_json(const PromptRecord& r) {
    return Json{{"participant_id", r.participant_id}, {"day", r.day}, {"prompt", r.prompt}};
}

PromptRecord prompt_record_from(const Json& j) {
    PromptRecord r;
    j.at("participant_id").get_to(r.participant_id);
    j.at("day").get_to(r.day);
    j.at("prompt").get_to(r.prompt);
    return r;
}

Json response_record_json(const ResponseRecord& r) {
    Json j{{"participant_id", r.participant_id},
           {"day", r.day},
           {"kind", to_string(r.kind)},
           {"response", r.response}};
    if (r.kind == SurveyKind::EmotionPair) {
        j["positive"] = to_string(r.positive);
        j["negative"] = to_string(r.negative);
    }
    return j;
}

ResponseRecord response_record_from(const Json& j) {
    ResponseRecord r;
    j.at("participant_id").get_to(r.participant_id);
    j.at("day").get_to(r.day);
    r.kind = survey_kind_from_string(j.at("kind").get<std::string>());
    if (r.kind == SurveyKind::EmotionPair) {
        r.positive = positive_emotion_from_string(j.at("positive").get<std::string>());
        r.negative = negative_emotion_from_string(j.at("negative").get<std::string>());
    }
    j.at("response").get_to(r.response);
    return r;
}

Json rerank_record_json(const RerankRecord& r) {
    Json j{{"participant_id", r.participant_id},
           {"day", r.day},
           {"load_seq", r.load_seq},
           {"batch_len", r.batch_len},
           {"n_aapa", r.n_aapa},
           {"n_demoted", r.n_demoted},
           {"n_reemitted", r.n_reemitted},
           {"n_upranked", r.n_upranked}};
    j["survey_slot"] = r.survey_slot ? Json(*r.survey_slot) : Json(nullptr);
    return j;
}

RerankRecord rerank_record_from(const Json& j) {
    RerankRecord r;
    j.at("participant_id").get_to(r.participant_id);
    j.at("day").get_to(r.day);
    j.at("load_seq").get_to(r.load_seq);
    j.at("batch_len").get_to(r.batch_len);
    j.at("n_aapa").get_to(r.n_aapa);
    j.at("n_demoted").get_to(r.n_demoted);
    j.at("n_reemitted").get_to(r.n_reemitted);
    j.at("n_upranked").get_to(r.n_upranked);
    if (j.contains("survey_slot") && !j["survey_slot"].is_null())
        r.survey_slot = j["survey_slot"].get<int>();
    return r;
}

Json ground_truth_json(const GroundTruth& g) {
    return Json{{"ate_thermometer_reduce", g.ate_thermometer_reduce},
                {"ate_thermometer_increase", g.ate_thermometer_increase},
                {"ate_negative_emotion_reduce", g.ate_negative_emotion_reduce},
                {"ate_negative_emotion_increase", g.ate_negative_emotion_increase},
                {"dose_coefficient", g.dose_coefficient},
                {"factor_dose_slopes", g.factor_dose_slopes}};
}

GroundTruth ground_truth_from(const Json& j) {
    GroundTruth g;
    j.at("ate_thermometer_reduce").get_to(g.ate_thermometer_reduce);
    j.at("ate_thermometer_increase").get_to(g.ate_thermometer_increase);
    j.at("ate_negative_emotion_reduce").get_to(g.ate_negative_emotion_reduce);
    j.at("ate_negative_emotion_increase").get_to(g.ate_negative_emotion_increase);
    j.at("dose_coefficient").get_to(g.dose_coefficient);
    j.at("factor_dose_slopes").get_to(g.factor_dose_slopes);
    return g;
}

} // namespace

void write_bundle(const RunArtifacts& art, const std::string& dir) {
    fs::create_directories(dir);

    Json manifest{{"schema", "v1"},
                  {"seed", art.config.master_seed},
                  {"config_hash", config_hash(art.config)},
                  {"n_participants", art.config.n_participants},
                  {"total_days", art.config.study.total_days},
                  {"baseline_days", art.config.study.baseline_days},
                  {"min_feed_loads", art.config.study.min_feed_loads}};
    {
        std::ofstream out(dir + "/manifest.json");
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(dir + "/ground_truth.json");
        out << ground_truth_json(art.ground_truth).dump(2) << "\n";
    }

    std::vector<Json> rows;
    for (const auto& p : art.participants) rows.push_back(p);
    write_jsonl(dir + "/participants.jsonl", rows);
    rows.clear();
    for (const auto& a : art.assignments) rows.push_back(a);
    write_jsonl(dir + "/assignments.jsonl", rows);
    rows.clear();
    for (const auto& e : art.events) rows.push_back(e);
    write_jsonl(dir + "/events.jsonl", rows);
    rows.clear();
    for (const auto& p : art.prompts) rows.push_back(prompt_record_json(p));
    write_jsonl(dir + "/survey_prompts.jsonl", rows);
    rows.clear();
    for (const auto& r : art.responses) rows.push_back(response_record_json(r));
    write_jsonl(dir + "/survey_responses.jsonl", rows);
    rows.clear();
    for (const auto& [post_id, score] : art.scores) {
        Json j = score;
        j["post_id"] = post_id;
        rows.push_back(j);
    }
    write_jsonl(dir + "/scores.jsonl", rows);
    rows.clear();
    for (const auto& [pid, answers] : art.post_surveys) {
        rows.push_back(Json{{"participant_id", pid}, {"answers", answers}});
    }
    write_jsonl(dir + "/post_surveys.jsonl", rows);
    rows.clear();
    for (const auto& r : art.rerank_log) rows.push_back(rerank_record_json(r));
    write_jsonl(dir + "/rerank_log.jsonl", rows);
}

Bundle read_bundle(const std::string& dir) {
    Bundle b;
    {
        std::ifstream in(dir + "/manifest.json");
        if (!in) throw Error("StoreRead", dir + "/manifest.json");
        Json manifest = Json::parse(in);
        b.seed = manifest.value("seed", uint64_t(0));
        b.config_hash = manifest.value("config_hash", uint64_t(0));
        b.total_days = manifest.value("total_days", 10);
        b.baseline_days = manifest.value("baseline_days", 3);
        b.min_feed_loads = manifest.value("min_feed_loads", 10);
    }
    for (const auto& j : read_jsonl(dir + "/participants.jsonl"))
        b.participants.push_back(j.get<Participant>());
    for (const auto& j : read_jsonl(dir + "/assignments.jsonl"))
        b.assignments.push_back(j.get<Assignment>());
    for (const auto& j : read_jsonl(dir + "/events.jsonl"))
        b.events.push_back(j.get<EngagementEvent>());
    for (const auto& j : read_jsonl(dir + "/survey_prompts.jsonl"))
        b.prompts.push_back(prompt_record_from(j));
    for (const auto& j : read_jsonl(dir + "/survey_responses.jsonl"))
        b.responses.push_back(response_record_from(j));
    for (const auto& j : read_jsonl(dir + "/scores.jsonl"))
        b.scores.emplace(j.at("post_id").get<std::string>(), j.get<AapaScore>());
    for (const auto& j : read_jsonl(dir + "/post_surveys.jsonl")) {
        b.post_surveys.emplace(j.at("participant_id").get<std::string>(),
                               j.at("answers").get<std::map<std::string, double>>());
    }
    for (const auto& j : read_jsonl(dir + "/rerank_log.jsonl"))
        b.rerank_log.push_back(rerank_record_from(j));
    {
        std::ifstream in(dir + "/ground_truth.json");
        if (in) {
            b.ground_truth = ground_truth_from(Json::parse(in));
            b.has_ground_truth = true;
        }
    }
    return b;
}

Bundle bundle_from_artifacts(const RunArtifacts& art) {
    Bundle b;
    b.seed = art.config.master_seed;
    b.config_hash = config_hash(art.config);
    b.total_days = art.config.study.total_days;
    b.baseline_days = art.config.study.baseline_days;
    b.min_feed_loads = art.config.study.min_feed_loads;
    b.participants = art.participants;
    b.assignments = art.assignments;
    b.events = art.events;
    b.prompts = art.prompts;
    b.responses = art.responses;
    b.scores = art.scores;
    b.post_surveys = art.post_surveys;
    b.rerank_log = art.rerank_log;
    b.ground_truth = art.ground_truth;
    b.has_ground_truth = true;
    return b;
}

} // namespace feedlab::sim
