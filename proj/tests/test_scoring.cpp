#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "feedlab/errors.hpp"
#include "feedlab/lexicon.hpp"
#include "feedlab/rng.hpp"
#include "feedlab/scoring.hpp"

using namespace feedlab;

namespace {

Post text_post(const std::string& id, const std::string& text, bool ad = false) {
    Post p;
    p.post_id = id;
    p.author_id = "a";
    p.text = text;
    p.is_ad = ad;
    return p;
}

// Hand-labeled fixture corpus: (text, political, expected factor mask).
struct Fixture {
    const char* text;
    bool political;
    std::array<bool, kFactorCount> factors;
};

const std::vector<Fixture> kFixtures = {
    // Political, factor-free.
    {"The senator's new voting bill is a disgrace", true, {}},
    {"Watched the congress hearing all afternoon", true, {}},
    {"The supreme court ruling came down today", true, {}},
    {"Local school board meets on Tuesday", true, {}},
    {"Big campaign rally near the stadium", true, {}},
    // Non-political.
    {"My cat sleeps 16 hours a day", false, {}},
    {"tried a new pasta recipe and loved it", false, {}},
    {"the sunset over the lake was stunning", false, {}},
    {"new running shoes feel amazing", false, {}},
    {"", false, {}},
    // Single factors (political context + one trigger).
    {"This election season: the other party disgusts me", true,
     {true, false, false, false, false, false, false, false}},
    {"About the ballot count, they should shut down their polling stations", true,
     {false, true, false, false, false, false, false, false}},
    {"After the election I'd punch a rival canvasser", true,
     {false, false, true, false, false, false, false, false}},
    {"For congress I would reelect him even if he rigged it", true,
     {false, false, false, true, false, false, false, false}},
    {"On this legislation: never compromise with them", true,
     {false, false, false, false, true, false, false, false}},
    {"Election talk aside, trust no one these days", true,
     {false, false, false, false, false, true, false, false}},
    {"Since the primaries I would never marry one of them", true,
     {false, false, false, false, false, false, true, false}},
    {"About immigration: their statistics are pure propaganda", true,
     {false, false, false, false, false, false, false, true}},
    // Multi-factor combinations.
    {"The election was stolen! the other party disgusts me and nobody can be trusted anymore",
     true, {true, false, false, false, false, true, false, false}},
    {"Senate fight: no deals across the aisle, only our numbers are real", true,
     {false, false, false, false, true, false, false, true}},
    {"Voter fraud everywhere. throw out ballots from their counties and burn their yard signs "
     "and worse",
     true, {false, true, true, false, false, false, false, false}},
    {"Campaign rally tonight. i despise the opposition party. keep those voters away from my "
     "family. any study favoring them is fake",
     true, {true, false, false, false, false, false, true, true}},
    // A 4-factor AAPA post.
    {"About the election: the other side makes me sick. our side should overrule the judiciary. "
     "refuse to cosponsor anything with their members. the data is rigged whenever it flatters "
     "them",
     true, {true, true, false, false, true, false, false, true}},
    // Factor language without political context is still matched by the
    // lexicon tables; political gating happens in score_posts.
    {"people will always betray you", false,
     {false, false, false, false, false, true, false, false}},
};

// Counts requests and optionally stalls one factor's completions.
class InstrumentedBackend final : public ScoringBackend {
  public:
    explicit InstrumentedBackend(int latency_ms = 5, int stall_factor = -1, int stall_ms = 0)
        : latency_ms_(latency_ms), stall_factor_(stall_factor), stall_ms_(stall_ms) {}

    BackendCapabilities capabilities() const override { return {64, latency_ms_}; }

    bool classify_political(const std::string& text) override {
        ++political_calls;
        return oracle_.classify_political(text);
    }

    std::string complete(const std::string& prompt) override {
        ++complete_calls;
        ++in_flight_;
        if (stall_factor_ >= 0 &&
            prompt.find(kFactorQuestions[stall_factor_]) != std::string::npos) {
            std::this_thread::sleep_for(std::chrono::milliseconds(stall_ms_));
        }
        std::string out = oracle_.complete(prompt);
        --in_flight_;
        return out;
    }

    ~InstrumentedBackend() override {
        while (in_flight_ > 0) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    std::atomic<int> political_calls{0};
    std::atomic<int> complete_calls{0};

  private:
    DeterministicLexiconOracle oracle_;
    int latency_ms_;
    int stall_factor_;
    int stall_ms_;
    std::atomic<int> in_flight_{0};
};

std::vector<Post> political_posts(int n) {
    std::vector<Post> posts;
    for (int i = 0; i < n; ++i) {
        posts.push_back(text_post("p" + std::to_string(i),
                                  "The senator speech number " + std::to_string(i) +
                                      ": the other party disgusts me"));
    }
    return posts;
}

} // namespace

TEST_CASE("chunk_messages partitions in order with max size 10") {
    std::vector<int> items(23);
    for (int i = 0; i < 23; ++i) items[i] = i;
    auto chunks = chunk_messages(items);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].size() == 10);
    CHECK(chunks[1].size() == 10);
    CHECK(chunks[2].size() == 3);
    CHECK(chunks[0][0] == 0);
    CHECK(chunks[2][2] == 22);

    CHECK(chunk_messages(std::vector<int>(10)).size() == 1);
    CHECK(chunk_messages(std::vector<int>{}).empty());
}

TEST_CASE("factor prompts carry the question, definition, format, and json lines") {
    const std::vector<Message> one = {{"a", "hello world"}};
    const std::string v1 = build_factor_prompt(0, one);
    CHECK(v1.rfind("Do the following messages express partisan animosity?", 0) == 0);
    CHECK(v1.find("dislike for opposing partisans") != std::string::npos);
    CHECK(v1.find("The input messages are given as JSON lines") != std::string::npos);
    CHECK(v1.find("[{\"id\": <message_id>, \"answer\": <YES or NO>}, ... ]") != std::string::npos);
    CHECK(v1.find("INPUT MESSAGES:") != std::string::npos);
    CHECK(v1.find("{\"id\":\"a\",\"message\":\"hello world\"}") != std::string::npos);

    const std::string v6 = build_factor_prompt(5, {{"a", "x"}, {"b", "y"}});
    CHECK(v6.find("distrust of people in general") != std::string::npos);
    // One JSON object per message line.
    size_t lines = 0, pos = v6.find("INPUT MESSAGES:");
    for (size_t i = v6.find('\n', pos) + 1; i < v6.size();) {
        size_t end = v6.find('\n', i);
        if (end == std::string::npos) end = v6.size();
        if (end > i) ++lines;
        i = end + 1;
    }
    CHECK(lines == 2);

    // Every factor prompt embeds its own definition sentence.
    for (int f = 0; f < kFactorCount; ++f) {
        CHECK(build_factor_prompt(f, one).find(kFactorDefinitions[f]) != std::string::npos);
    }
}

TEST_CASE("parse_factor_response handles clean, degraded, and empty payloads") {
    bool degraded = false;
    auto out = parse_factor_response(R"([{"id":"a","answer":"YES"}])", {"a"}, &degraded);
    CHECK(out.at("a") == true);
    CHECK_FALSE(degraded);

    out = parse_factor_response("complete garbage {{{", {"a", "b"}, &degraded);
    CHECK(out.at("a") == false);
    CHECK(out.at("b") == false);
    CHECK(degraded);

    out = parse_factor_response("[]", {}, &degraded);
    CHECK(out.empty());
    CHECK_FALSE(degraded);

    // Malformed per-id answers count as NO.
    out = parse_factor_response(R"([{"id":"a","answer":"MAYBE"},{"id":"b","answer":"NO"}])",
                                {"a", "b"}, &degraded);
    CHECK(out.at("a") == false);
    CHECK(out.at("b") == false);
    CHECK(degraded);

    // Ids absent from the response stay false.
    out = parse_factor_response(R"([{"id":"a","answer":"YES"}])", {"a", "b"}, &degraded);
    CHECK(out.at("a") == true);
    CHECK(out.at("b") == false);
}

TEST_CASE("lexicon tables are internally consistent") {
    const Lexicon& lex = Lexicon::builtin();
    // Neutral generator vocabulary is invisible to the classifier.
    for (const auto& phrase : lex.neutral) {
        CHECK_FALSE(lex.matches_political(phrase));
        for (bool f : lex.match_factors(phrase)) CHECK_FALSE(f);
    }
    // Each factor phrase triggers exactly its own factor.
    for (int f = 0; f < kFactorCount; ++f) {
        for (const auto& phrase : lex.factors[f]) {
            const auto hits = lex.match_factors(phrase);
            for (int g = 0; g < kFactorCount; ++g) CHECK(hits[g] == (g == f));
        }
    }
}

TEST_CASE("the fixture corpus is classified exactly") {
    DeterministicLexiconOracle oracle;
    const Lexicon& lex = oracle.lexicon();
    for (const auto& fixture : kFixtures) {
        CAPTURE(fixture.text);
        CHECK(is_political(fixture.text, oracle) == fixture.political);
        CHECK(lex.match_factors(fixture.text) == fixture.factors);
    }
}

TEST_CASE("political_fraction screens at five percent") {
    DeterministicLexiconOracle oracle;
    std::vector<Post> posts;
    for (int i = 0; i < 171; ++i) posts.push_back(text_post("n" + std::to_string(i), "my cat sleeps all day"));
    for (int i = 0; i < 9; ++i) posts.push_back(text_post("p" + std::to_string(i), "the senator spoke"));
    const double fraction = political_fraction(posts, oracle);
    CHECK(fraction == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(fraction >= kScreeningThreshold);

    std::vector<Post> none;
    for (int i = 0; i < 100; ++i) none.push_back(text_post("n" + std::to_string(i), "pasta recipe"));
    CHECK(political_fraction(none, oracle) == 0.0);

    std::vector<Post> all;
    for (int i = 0; i < 10; ++i) all.push_back(text_post("p" + std::to_string(i), "the congress voted"));
    CHECK(political_fraction(all, oracle) == 1.0);

    CHECK_THROWS_AS(political_fraction({}, oracle), EmptyBatch);
    std::vector<Post> only_ads = {text_post("ad", "buy this", true)};
    CHECK_THROWS_AS(political_fraction(only_ads, oracle), EmptyBatch);

    // Ads are excluded from the denominator.
    std::vector<Post> with_ads = posts;
    for (int i = 0; i < 20; ++i) with_ads.push_back(text_post("ad" + std::to_string(i), "the senator", true));
    CHECK(political_fraction(with_ads, oracle) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("ten political posts cost exactly eight completions on a cold cache") {
    InstrumentedBackend backend(0);
    ScoreCache cache;
    const auto posts = political_posts(10);
    const ScoringOutcome first = score_posts(posts, backend, cache);
    CHECK(first.diagnostics.factor_requests == 8);
    CHECK(backend.complete_calls == 8);
    CHECK(first.scores.size() == 10);
    for (const auto& [id, score] : first.scores) {
        CHECK(score.is_political);
        CHECK(score.factors[0]); // partisan animosity phrase present
    }

    // Warm cache: no classifier traffic at all.
    const ScoringOutcome second = score_posts(posts, backend, cache);
    CHECK(second.diagnostics.factor_requests == 0);
    CHECK(backend.complete_calls == 8);
    CHECK(second.diagnostics.cache_hits == 10);
    CHECK(second.scores == first.scores);
}

TEST_CASE("request count scales as eight per ten-post chunk") {
    InstrumentedBackend backend(0);
    ScoreCache cache;
    const ScoringOutcome out = score_posts(political_posts(23), backend, cache);
    CHECK(out.diagnostics.factor_requests == 8 * 3); // ceil(23/10) chunks
}

TEST_CASE("non-political posts never reach the factor stage") {
    InstrumentedBackend backend(0);
    ScoreCache cache;
    std::vector<Post> posts;
    for (int i = 0; i < 12; ++i) {
        posts.push_back(text_post("n" + std::to_string(i),
                                  "houseplants are thriving this month " + std::to_string(i)));
    }
    const ScoringOutcome out = score_posts(posts, backend, cache);
    CHECK(out.diagnostics.factor_requests == 0);
    CHECK(backend.complete_calls == 0);
    for (const auto& [id, score] : out.scores) {
        CHECK_FALSE(score.is_political);
        CHECK(score.count() == 0);
    }
}

TEST_CASE("identical texts are scored once and ads are skipped") {
    InstrumentedBackend backend(0);
    ScoreCache cache;
    std::vector<Post> posts;
    for (int i = 0; i < 6; ++i) {
        posts.push_back(text_post("dup" + std::to_string(i), "the senator spoke again"));
    }
    posts.push_back(text_post("ad1", "the senator spoke again", true));
    const ScoringOutcome out = score_posts(posts, backend, cache);
    CHECK(backend.political_calls == 1); // one unique text
    CHECK(out.scores.size() == 6);       // ad omitted
    CHECK(out.scores.count("ad1") == 0);
}

TEST_CASE("a stalled factor degrades to false for the whole chunk") {
    // Factor v3 (index 2) stalls past the deadline; everything else answers.
    InstrumentedBackend backend(50, 2, 400);
    ScoreCache cache;
    std::vector<Post> posts;
    for (int i = 0; i < 4; ++i) {
        posts.push_back(text_post(
            "p" + std::to_string(i),
            "About the election: after the election I'd punch a rival canvasser. "
            "the other party disgusts me"));
    }
    const ScoringOutcome out = score_posts(posts, backend, cache, 150);
    CHECK(out.diagnostics.timeouts == 1);
    for (const auto& [id, score] : out.scores) {
        CHECK(score.factors[0]);       // v1 answered
        CHECK_FALSE(score.factors[2]); // v3 timed out
    }

    // Degradation is monotone: the same posts scored without the stall can
    // only gain factors.
    InstrumentedBackend clean(0);
    ScoreCache cache2;
    const ScoringOutcome full = score_posts(posts, clean, cache2);
    for (const auto& [id, score] : full.scores) {
        for (int f = 0; f < kFactorCount; ++f) {
            if (out.scores.at(id).factors[f]) CHECK(score.factors[f]);
        }
        CHECK(score.factors[2]);
    }
}

TEST_CASE("oracle outputs are identical across cold and warm caches") {
    DeterministicLexiconOracle oracle;
    ScoreCache cold, warm;
    std::vector<Post> posts;
    Rng rng(99);
    for (int i = 0; i < 40; ++i) {
        const bool pol = rng.bernoulli(0.4);
        posts.push_back(text_post("p" + std::to_string(i),
                                  pol ? "the governor announced plans " + std::to_string(i)
                                      : "weekend hike photos are up " + std::to_string(i)));
    }
    const auto a = score_posts(posts, oracle, cold);
    score_posts(posts, oracle, warm); // prime
    const auto b = score_posts(posts, oracle, warm);
    CHECK(a.scores == b.scores);
}

TEST_CASE("is_aapa flips at four factors") {
    AapaScore s;
    s.is_political = true;
    s.factors = {true, true, true, false, false, false, false, false};
    CHECK_FALSE(is_aapa(s));
    s.factors[3] = true;
    CHECK(is_aapa(s));
    CHECK_FALSE(is_aapa(AapaScore{}));
}

TEST_CASE("no factor is ever true for a non-political post") {
    DeterministicLexiconOracle oracle;
    ScoreCache cache;
    // Factor language without political context: gated off by the pre-filter.
    std::vector<Post> posts = {text_post("x", "people will always betray you")};
    const auto out = score_posts(posts, oracle, cache);
    CHECK_FALSE(out.scores.at("x").is_political);
    CHECK(out.scores.at("x").count() == 0);
}

TEST_CASE("lexicon json round trip") {
    const std::string path = "/tmp/feedlab_lexicon_test.json";
    Lexicon::builtin().save_json_file(path);
    const Lexicon loaded = Lexicon::from_json_file(path);
    CHECK(loaded.political == Lexicon::builtin().political);
    CHECK(loaded.factors == Lexicon::builtin().factors);
    CHECK(loaded.neutral == Lexicon::builtin().neutral);
}
