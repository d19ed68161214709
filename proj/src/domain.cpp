#include "feedlab/domain.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "feedlab/errors.hpp"

namespace feedlab {

const std::array<const char*, kFactorCount> kFactorNames = {
    "partisan_animosity",        "undemocratic_practices", "partisan_violence",
    "undemocratic_candidates",   "opposition_bipartisanship", "social_distrust",
    "social_distance",           "biased_evaluation",
};

Party outparty(Party p) {
    return p == Party::Democrat ? Party::Republican : Party::Democrat;
}

namespace {

bool is_url_start(const std::string& s, size_t i) {
    return s.compare(i, 7, "http://") == 0 || s.compare(i, 8, "https://") == 0;
}

// Drop every http(s) token; collapse the whitespace it leaves behind.
std::string strip_urls(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        if (is_url_start(text, i)) {
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            // Swallow the separator so "a URL b" becomes "a b", not "a  b".
            if (i < text.size() && !out.empty()) ++i;
        } else {
            out.push_back(text[i++]);
        }
    }
    // Trim trailing whitespace left by a removed URL at the end.
    while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
    return out;
}

void append_segment(std::string& acc, const std::string& seg) {
    if (seg.empty()) return;
    if (!acc.empty()) acc.push_back(' ');
    acc += seg;
}

} // namespace

std::string assemble_scoring_text(const Post& post) {
    std::string out = strip_urls(post.text);
    if (post.link_preview) {
        append_segment(out, "Attached article's description: " + post.link_preview->title +
                                " " + post.link_preview->description);
    }
    if (post.quoted_text) {
        append_segment(out, "Quoting: " + *post.quoted_text);
    }
    return out;
}

FeedBatch validate_batch(std::vector<Post> raw, const std::string& participant_id,
                         uint64_t load_seq, int64_t fetched_at) {
    if (raw.empty()) throw EmptyBatch("feed batch has no posts");
    std::unordered_set<std::string> seen;
    for (const auto& p : raw) {
        if (p.post_id.empty()) throw DuplicatePostId("empty post_id");
        if (!seen.insert(p.post_id).second) throw DuplicatePostId(p.post_id);
    }
    FeedBatch batch;
    batch.participant_id = participant_id;
    batch.load_seq = load_seq;
    batch.posts = std::move(raw);
    batch.fetched_at = fetched_at;
    return batch;
}

// --- enum <-> string ----------------------------------------------------

const char* to_string(Party p) { return p == Party::Democrat ? "democrat" : "republican"; }
const char* to_string(Platform p) {
    return p == Platform::BovitzLike ? "bovitz_like" : "cloud_research_like";
}
const char* to_string(Experiment e) { return e == Experiment::Reduce ? "reduce" : "increase"; }
const char* to_string(Arm a) { return a == Arm::Treatment ? "treatment" : "control"; }
const char* to_string(SurveyKind k) {
    return k == SurveyKind::Thermometer ? "thermometer" : "emotion_pair";
}
const char* to_string(PositiveEmotion e) {
    return e == PositiveEmotion::Excited ? "excited" : "calm";
}
const char* to_string(NegativeEmotion e) { return e == NegativeEmotion::Angry ? "angry" : "sad"; }
const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::View: return "view";
        case EventKind::Favorite: return "favorite";
        case EventKind::Repost: return "repost";
        case EventKind::Reply: return "reply";
        case EventKind::NewPost: return "new_post";
        case EventKind::FeedLoad: return "feed_load";
    }
    return "view";
}

namespace {
[[noreturn]] void bad_enum(const std::string& kind, const std::string& s) {
    throw Error("BadEnumValue", kind + ": " + s);
}
} // namespace

Party party_from_string(const std::string& s) {
    if (s == "democrat") return Party::Democrat;
    if (s == "republican") return Party::Republican;
    bad_enum("party", s);
}
Platform platform_from_string(const std::string& s) {
    if (s == "bovitz_like") return Platform::BovitzLike;
    if (s == "cloud_research_like") return Platform::CloudResearchLike;
    bad_enum("platform", s);
}
Experiment experiment_from_string(const std::string& s) {
    if (s == "reduce") return Experiment::Reduce;
    if (s == "increase") return Experiment::Increase;
    bad_enum("experiment", s);
}
Arm arm_from_string(const std::string& s) {
    if (s == "treatment") return Arm::Treatment;
    if (s == "control") return Arm::Control;
    bad_enum("arm", s);
}
SurveyKind survey_kind_from_string(const std::string& s) {
    if (s == "thermometer") return SurveyKind::Thermometer;
    if (s == "emotion_pair") return SurveyKind::EmotionPair;
    bad_enum("survey_kind", s);
}
PositiveEmotion positive_emotion_from_string(const std::string& s) {
    if (s == "excited") return PositiveEmotion::Excited;
    if (s == "calm") return PositiveEmotion::Calm;
    bad_enum("positive_emotion", s);
}
NegativeEmotion negative_emotion_from_string(const std::string& s) {
    if (s == "angry") return NegativeEmotion::Angry;
    if (s == "sad") return NegativeEmotion::Sad;
    bad_enum("negative_emotion", s);
}
EventKind event_kind_from_string(const std::string& s) {
    if (s == "view") return EventKind::View;
    if (s == "favorite") return EventKind::Favorite;
    if (s == "repost") return EventKind::Repost;
    if (s == "reply") return EventKind::Reply;
    if (s == "new_post") return EventKind::NewPost;
    if (s == "feed_load") return EventKind::FeedLoad;
    bad_enum("event_kind", s);
}

// --- JSON ----------------------------------------------------------------

void to_json(Json& j, const Post& p) {
    j = Json{{"post_id", p.post_id}, {"author_id", p.author_id}, {"text", p.text},
             {"is_ad", p.is_ad},     {"created_at", p.created_at}};
    if (p.link_preview) {
        j["link_preview"] =
            Json{{"title", p.link_preview->title}, {"description", p.link_preview->description}};
    } else {
        j["link_preview"] = nullptr;
    }
    j["quoted_text"] = p.quoted_text ? Json(*p.quoted_text) : Json(nullptr);
}

void from_json(const Json& j, Post& p) {
    j.at("post_id").get_to(p.post_id);
    j.at("author_id").get_to(p.author_id);
    j.at("text").get_to(p.text);
    j.at("is_ad").get_to(p.is_ad);
    j.at("created_at").get_to(p.created_at);
    if (j.contains("link_preview") && !j["link_preview"].is_null()) {
        LinkPreview lp;
        j["link_preview"].at("title").get_to(lp.title);
        j["link_preview"].at("description").get_to(lp.description);
        p.link_preview = lp;
    } else {
        p.link_preview.reset();
    }
    if (j.contains("quoted_text") && !j["quoted_text"].is_null()) {
        p.quoted_text = j["quoted_text"].get<std::string>();
    } else {
        p.quoted_text.reset();
    }
}

void to_json(Json& j, const AapaScore& s) {
    j = Json::object();
    Json f = Json::object();
    for (int i = 0; i < kFactorCount; ++i) f[kFactorNames[i]] = s.factors[i];
    j["factors"] = f;
    j["count"] = s.count();
    j["is_political"] = s.is_political;
}

void from_json(const Json& j, AapaScore& s) {
    const auto& f = j.at("factors");
    for (int i = 0; i < kFactorCount; ++i) s.factors[i] = f.at(kFactorNames[i]).get<bool>();
    j.at("is_political").get_to(s.is_political);
}

void to_json(Json& j, const Participant& p) {
    j = Json{{"participant_id", p.participant_id},
             {"party", to_string(p.party)},
             {"platform", to_string(p.platform)},
             {"pre_survey", p.pre_survey},
             {"local_tz_offset", p.local_tz_offset}};
}

void from_json(const Json& j, Participant& p) {
    j.at("participant_id").get_to(p.participant_id);
    p.party = party_from_string(j.at("party").get<std::string>());
    p.platform = platform_from_string(j.at("platform").get<std::string>());
    j.at("pre_survey").get_to(p.pre_survey);
    j.at("local_tz_offset").get_to(p.local_tz_offset);
}

void to_json(Json& j, const Assignment& a) {
    j = Json{{"participant_id", a.participant_id},
             {"experiment", to_string(a.experiment)},
             {"arm", to_string(a.arm)},
             {"enrolled_at", a.enrolled_at}};
}

void from_json(const Json& j, Assignment& a) {
    j.at("participant_id").get_to(a.participant_id);
    a.experiment = experiment_from_string(j.at("experiment").get<std::string>());
    a.arm = arm_from_string(j.at("arm").get<std::string>());
    j.at("enrolled_at").get_to(a.enrolled_at);
}

void to_json(Json& j, const SurveyPrompt& p) {
    j = Json{{"prompt_id", p.prompt_id},
             {"kind", to_string(p.kind)},
             {"feed_position", p.feed_position},
             {"issued_at", p.issued_at}};
    if (p.kind == SurveyKind::EmotionPair) {
        j["positive"] = to_string(p.positive);
        j["negative"] = to_string(p.negative);
    }
}

void from_json(const Json& j, SurveyPrompt& p) {
    j.at("prompt_id").get_to(p.prompt_id);
    p.kind = survey_kind_from_string(j.at("kind").get<std::string>());
    j.at("feed_position").get_to(p.feed_position);
    j.at("issued_at").get_to(p.issued_at);
    if (p.kind == SurveyKind::EmotionPair) {
        p.positive = positive_emotion_from_string(j.at("positive").get<std::string>());
        p.negative = negative_emotion_from_string(j.at("negative").get<std::string>());
    }
}

void to_json(Json& j, const SurveyResponse& r) {
    j = Json{{"prompt_id", r.prompt_id}, {"values", r.values}, {"answered_at", r.answered_at}};
}

void from_json(const Json& j, SurveyResponse& r) {
    j.at("prompt_id").get_to(r.prompt_id);
    j.at("values").get_to(r.values);
    j.at("answered_at").get_to(r.answered_at);
}

void to_json(Json& j, const EngagementEvent& e) {
    j = Json{{"participant_id", e.participant_id},
             {"kind", to_string(e.kind)},
             {"at", e.at}};
    j["post_id"] = e.post_id ? Json(*e.post_id) : Json(nullptr);
    j["visible_ms"] = e.visible_ms ? Json(*e.visible_ms) : Json(nullptr);
}

void from_json(const Json& j, EngagementEvent& e) {
    j.at("participant_id").get_to(e.participant_id);
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    j.at("at").get_to(e.at);
    if (j.contains("post_id") && !j["post_id"].is_null())
        e.post_id = j["post_id"].get<std::string>();
    else
        e.post_id.reset();
    if (j.contains("visible_ms") && !j["visible_ms"].is_null())
        e.visible_ms = j["visible_ms"].get<int64_t>();
    else
        e.visible_ms.reset();
}

} // namespace feedlab
