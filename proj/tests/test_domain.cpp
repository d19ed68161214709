#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "feedlab/domain.hpp"
#include "feedlab/errors.hpp"
#include "feedlab/rng.hpp"

using namespace feedlab;

namespace {

Post make_post(const std::string& id, const std::string& text) {
    Post p;
    p.post_id = id;
    p.author_id = "author1";
    p.text = text;
    return p;
}

} // namespace

TEST_CASE("assemble_scoring_text passes plain text through") {
    CHECK(assemble_scoring_text(make_post("a", "hello")) == "hello");
    CHECK(assemble_scoring_text(make_post("a", "")) == "");
}

TEST_CASE("assemble_scoring_text renders link previews and drops the URL") {
    Post p = make_post("a", "see this https://x.co/a");
    p.link_preview = LinkPreview{"Tax bill", "Senate vote"};
    CHECK(assemble_scoring_text(p) == "see this Attached article's description: Tax bill Senate vote");
}

TEST_CASE("assemble_scoring_text renders quotes") {
    Post p = make_post("a", "wow");
    p.quoted_text = "they lied";
    CHECK(assemble_scoring_text(p) == "wow Quoting: they lied");
}

TEST_CASE("link segment comes before the quote segment") {
    Post p = make_post("a", "look http://t.co/q now");
    p.link_preview = LinkPreview{"Title", "Desc"};
    p.quoted_text = "quoted words";
    CHECK(assemble_scoring_text(p) ==
          "look now Attached article's description: Title Desc Quoting: quoted words");
}

TEST_CASE("assembled text never contains a dropped URL") {
    Rng rng(11);
    const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta"};
    for (int i = 0; i < 500; ++i) {
        std::string text;
        for (int w = 0; w < 6; ++w) {
            if (rng.bernoulli(0.3)) {
                text += (rng.bernoulli(0.5) ? "https://ex.co/" : "http://ex.co/") +
                        std::to_string(rng.index(1000));
            } else {
                text += words[rng.index(words.size())];
            }
            if (w < 5) text += " ";
        }
        Post p = make_post("x", text);
        if (rng.bernoulli(0.4)) p.link_preview = LinkPreview{"t", "d"};
        const std::string out = assemble_scoring_text(p);
        CHECK(out.find("http://") == std::string::npos);
        CHECK(out.find("https://") == std::string::npos);
        CHECK(out == assemble_scoring_text(p)); // deterministic
    }
}

TEST_CASE("validate_batch assigns contiguous 1-based positions in input order") {
    std::vector<Post> posts;
    for (int i = 0; i < 35; ++i) posts.push_back(make_post("p" + std::to_string(i), "t"));
    const FeedBatch batch = validate_batch(posts, "pt1", 3, 99);
    REQUIRE(batch.posts.size() == 35);
    CHECK(batch.participant_id == "pt1");
    CHECK(batch.load_seq == 3);
    for (int i = 0; i < 35; ++i) CHECK(batch.posts[i].post_id == "p" + std::to_string(i));
}

TEST_CASE("validate_batch accepts a single post") {
    CHECK(validate_batch({make_post("only", "x")}, "pt1", 1).posts.size() == 1);
}

TEST_CASE("validate_batch rejects duplicates and empties") {
    CHECK_THROWS_AS(validate_batch({}, "pt1", 1), EmptyBatch);
    CHECK_THROWS_AS(validate_batch({make_post("a", "x"), make_post("a", "y")}, "pt1", 1),
                    DuplicatePostId);
}

TEST_CASE("json round trips preserve every field") {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        Post p = make_post("id" + std::to_string(i), "text " + std::to_string(rng.next()));
        p.is_ad = rng.bernoulli(0.2);
        if (rng.bernoulli(0.5)) p.link_preview = LinkPreview{"ti", "de"};
        if (rng.bernoulli(0.5)) p.quoted_text = "q";
        p.created_at = int64_t(rng.index(1 << 30));
        Json j = p;
        CHECK(j.at("post_id").is_string());
        CHECK(p == j.get<Post>());
    }

    EngagementEvent e;
    e.participant_id = "pt1";
    e.post_id = "p9";
    e.kind = EventKind::View;
    e.visible_ms = 1500;
    e.at = 123456;
    Json j = e;
    CHECK(j.at("kind") == "view");
    const auto back = j.get<EngagementEvent>();
    CHECK(back.participant_id == e.participant_id);
    CHECK(back.post_id == e.post_id);
    CHECK(back.visible_ms == e.visible_ms);

    AapaScore s;
    s.is_political = true;
    s.factors = {true, false, true, true, false, false, true, false};
    Json js = s;
    CHECK(js.at("count") == 4);
    CHECK(js.get<AapaScore>() == s);
}

TEST_CASE("enum serialization is stable") {
    CHECK(party_from_string(to_string(Party::Republican)) == Party::Republican);
    CHECK(experiment_from_string("reduce") == Experiment::Reduce);
    CHECK(arm_from_string("control") == Arm::Control);
    CHECK(event_kind_from_string("feed_load") == EventKind::FeedLoad);
    CHECK_THROWS(party_from_string("whig"));
}
