#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace feedlab {

using Json = nlohmann::json;

struct LinkPreview {
    std::string title;
    std::string description;
    bool operator==(const LinkPreview&) const = default;
};

struct Post {
    std::string post_id;
    std::string author_id;
    std::string text;
    bool is_ad = false;
    std::optional<LinkPreview> link_preview;
    std::optional<std::string> quoted_text;
    int64_t created_at = 0; // epoch ms
    bool operator==(const Post&) const = default;
};

// One feed load. Positions are 1-based: posts[i] sits at position i+1.
struct FeedBatch {
    std::string participant_id;
    uint64_t load_seq = 0;
    std::vector<Post> posts;
    int64_t fetched_at = 0;
};

constexpr int kFactorCount = 8;

// Names indexed by factor (0..7 = v1..v8).
extern const std::array<const char*, kFactorCount> kFactorNames;

struct AapaScore {
    std::array<bool, kFactorCount> factors{}; // v1..v8
    bool is_political = false;

    int count() const {
        int n = 0;
        for (bool f : factors) n += f;
        return n;
    }
    bool operator==(const AapaScore&) const = default;
};

enum class Party { Democrat, Republican };
enum class Platform { BovitzLike, CloudResearchLike };
enum class Experiment { Reduce, Increase };
enum class Arm { Treatment, Control };

Party outparty(Party p);

struct Participant {
    std::string participant_id;
    Party party = Party::Democrat;
    Platform platform = Platform::BovitzLike;
    std::map<std::string, double> pre_survey; // question id -> answer
    int local_tz_offset = 0;                  // minutes
};

struct Assignment {
    std::string participant_id;
    Experiment experiment = Experiment::Reduce;
    Arm arm = Arm::Control;
    int enrolled_at = 0; // day index
};

enum class PositiveEmotion { Excited, Calm };
enum class NegativeEmotion { Angry, Sad };

enum class SurveyKind { Thermometer, EmotionPair };

struct SurveyPrompt {
    std::string prompt_id;
    SurveyKind kind = SurveyKind::Thermometer;
    PositiveEmotion positive = PositiveEmotion::Excited; // EmotionPair only
    NegativeEmotion negative = NegativeEmotion::Angry;   // EmotionPair only
    int feed_position = 0;                               // 1-based
    int64_t issued_at = 0;
};

struct SurveyResponse {
    std::string prompt_id;
    std::vector<int> values; // one (thermometer) or two (pos, neg), each 0..100
    int64_t answered_at = 0;
};

enum class EventKind { View, Favorite, Repost, Reply, NewPost, FeedLoad };

struct EngagementEvent {
    std::string participant_id;
    std::optional<std::string> post_id;
    EventKind kind = EventKind::View;
    std::optional<int64_t> visible_ms; // View only
    int64_t at = 0;
};

// Text the scorer consumes: post text with URLs removed, then the link
// preview rendered as "Attached article's description: <title> <description>",
// then any quote rendered as "Quoting: <text>". Segments joined by one space.
std::string assemble_scoring_text(const Post& post);

// Assigns 1-based positions in input order. Throws EmptyBatch /
// DuplicatePostId.
FeedBatch validate_batch(std::vector<Post> raw, const std::string& participant_id,
                         uint64_t load_seq, int64_t fetched_at = 0);

// --- enum <-> string ---------------------------------------------------
const char* to_string(Party p);
const char* to_string(Platform p);
const char* to_string(Experiment e);
const char* to_string(Arm a);
const char* to_string(SurveyKind k);
const char* to_string(PositiveEmotion e);
const char* to_string(NegativeEmotion e);
const char* to_string(EventKind k);

Party party_from_string(const std::string& s);
Platform platform_from_string(const std::string& s);
Experiment experiment_from_string(const std::string& s);
Arm arm_from_string(const std::string& s);
SurveyKind survey_kind_from_string(const std::string& s);
PositiveEmotion positive_emotion_from_string(const std::string& s);
NegativeEmotion negative_emotion_from_string(const std::string& s);
EventKind event_kind_from_string(const std::string& s);

// --- JSON (snake_case field names, JSONL-friendly) ---------------------
void to_json(Json& j, const Post& p);
void from_json(const Json& j, Post& p);
void to_json(Json& j, const AapaScore& s);
void from_json(const Json& j, AapaScore& s);
void to_json(Json& j, const Participant& p);
void from_json(const Json& j, Participant& p);
void to_json(Json& j, const Assignment& a);
void from_json(const Json& j, Assignment& a);
void to_json(Json& j, const SurveyPrompt& p);
void from_json(const Json& j, SurveyPrompt& p);
void to_json(Json& j, const SurveyResponse& r);
void from_json(const Json& j, SurveyResponse& r);
void to_json(Json& j, const EngagementEvent& e);
void from_json(const Json& j, EngagementEvent& e);

} // namespace feedlab
