#include "feedlab/scoring.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "feedlab/errors.hpp"
#include "feedlab/rng.hpp"

namespace feedlab {

const std::array<const char*, kFactorCount> kFactorQuestions = {
    "Do the following messages express partisan animosity?",
    "Do the following messages express support for undemocratic practices?",
    "Do the following messages express support for partisan violence?",
    "Do the following messages express support for undemocratic candidates?",
    "Do the following messages express opposition to bipartisanship?",
    "Do the following messages express social distrust?",
    "Do the following messages express social distance?",
    "Do the following messages express a biased evaluation of politicized facts?",
};

const std::array<const char*, kFactorCount> kFactorDefinitions = {
    "Partisan animosity is defined as \"dislike for opposing partisans\".",

    "Support for undemocratic practices is defined as \"willingness to forgo democratic "
    "principles for partisan gain\". Undemocratic practices are undemocratic tendencies or "
    "actions such as reducing polling stations in areas that support their opponents, attacking "
    "the independence of the judiciary, undermining the free press, challenging the legitimacy "
    "of election results, or encouraging political violence.",

    "Support for partisan violence is defined as a \"willingness to use violent tactics against "
    "outpartisans\". Examples of partisan violence include sending threatening and intimidating "
    "messages to the opponent party, harassing the opponent party on the Internet, using "
    "violence in advancing their political goals or winning more races in the next election.",

    "Support for undemocratic candidates is defined as \"willingness to ignore democratic "
    "practices to elect inparty candidates.\" Undemocratic candidates often support undemocratic "
    "practices such as reducing polling stations in areas that support their opponents, "
    "attacking the independence of the judiciary, undermining the free press, challenging the "
    "legitimacy of election results, or encouraging political violence.",

    "Opposition to bipartisanship is defined as \"resistance to cross-partisan collaboration\".",

    "Social distrust is defined as \"distrust of people in general\".",

    "Social distance is defined as \"resistance to interpersonal contact with outpartisans\". "
    "Messages that increase social distance may contain terms that increase distrust, distance, "
    "insecurity, hate, prejudice, or discrimination.",

    "Biased evaluation of politicized facts is defined as \"skepticism of facts that favor the "
    "worldview of the other party\". Messages supporting a biased evaluation of politicized "
    "facts may partially present political facts or discuss a controversial issue with a "
    "certain political stance.",
};

namespace {

constexpr const char* kFormatSection =
    "FORMAT:\n"
    "The input messages are given as JSON lines in the format\n"
    "{\"id\": <message_id>, \"message\": <message>}.\n"
    "The output must be a JSON array of objects in the format\n"
    "[{\"id\": <message_id>, \"answer\": <YES or NO>}, ... ].\n";

constexpr const char* kInputHeader = "INPUT MESSAGES:";

} // namespace

std::string build_factor_prompt(int factor, const std::vector<Message>& chunk) {
    std::string out;
    out += kFactorQuestions[factor];
    out += "\n";
    out += kFactorDefinitions[factor];
    out += "\n\n";
    out += kFormatSection;
    out += "\n";
    out += kInputHeader;
    out += "\n";
    for (const auto& [id, text] : chunk) {
        Json line = Json{{"id", id}, {"message", text}};
        out += line.dump();
        out += "\n";
    }
    return out;
}

std::string build_political_prompt(const std::string& text) {
    std::string out =
        "Political content on Twitter is varied and can be about officials and activists, "
        "social issues, or news and current events.\n"
        "Looking at the following tweet, would you categorize it as POLITICAL or NOT POLITICAL "
        "content?\n\n"
        "Answer 1 if it is POLITICAL, 0 otherwise.\n\n"
        "TWEET:\n";
    out += text;
    out += "\n";
    return out;
}

std::map<std::string, bool> parse_factor_response(const std::string& raw,
                                                  const std::vector<std::string>& expected_ids,
                                                  bool* degraded) {
    std::map<std::string, bool> out;
    for (const auto& id : expected_ids) out[id] = false;
    bool clean = true;

    Json parsed = Json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_array()) {
        if (degraded) *degraded = !raw.empty() || !expected_ids.empty();
        return out;
    }
    for (const auto& entry : parsed) {
        if (!entry.is_object() || !entry.contains("id") || !entry.contains("answer") ||
            !entry["id"].is_string() || !entry["answer"].is_string()) {
            clean = false;
            continue;
        }
        const std::string id = entry["id"].get<std::string>();
        auto it = out.find(id);
        if (it == out.end()) {
            clean = false; // unexpected id
            continue;
        }
        const std::string answer = entry["answer"].get<std::string>();
        if (answer == "YES") {
            it->second = true;
        } else if (answer != "NO") {
            clean = false; // malformed answer counts as NO
        }
    }
    if (degraded) *degraded = !clean;
    return out;
}

// --- oracle ----------------------------------------------------------------

bool DeterministicLexiconOracle::classify_political(const std::string& text) {
    return lexicon_.matches_political(text);
}

const std::array<bool, kFactorCount>& DeterministicLexiconOracle::factors_for(
    const std::string& text) {
    const uint64_t key = fnv1a64(text);
    std::lock_guard lock(memo_mu_);
    auto it = memo_.find(key);
    if (it == memo_.end()) it = memo_.emplace(key, lexicon_.match_factors(text)).first;
    return it->second;
}

std::string DeterministicLexiconOracle::complete(const std::string& prompt) {
    int factor = -1;
    for (int i = 0; i < kFactorCount; ++i) {
        if (prompt.find(kFactorQuestions[i]) != std::string::npos) {
            factor = i;
            break;
        }
    }
    if (factor < 0) throw BackendUnavailable("unrecognized prompt");

    Json answers = Json::array();
    size_t pos = prompt.find(kInputHeader);
    if (pos != std::string::npos) {
        std::istringstream lines(prompt.substr(pos + std::string(kInputHeader).size()));
        std::string line;
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            Json msg = Json::parse(line, nullptr, false);
            if (msg.is_discarded() || !msg.is_object()) continue;
            const std::string id = msg.value("id", "");
            const std::string text = msg.value("message", "");
            const bool yes = factors_for(text)[factor];
            answers.push_back(Json{{"id", id}, {"answer", yes ? "YES" : "NO"}});
        }
    }
    return answers.dump();
}

// --- remote client -----------------------------------------------------------

RemoteInferenceClient::RemoteInferenceClient(std::string url, std::vector<std::string> tokens,
                                             int64_t sampling_seed)
    : tokens_(std::move(tokens)), sampling_seed_(sampling_seed) {
    // Split scheme://host[:port] from the path.
    size_t scheme = url.find("://");
    size_t slash = scheme == std::string::npos ? url.find('/') : url.find('/', scheme + 3);
    if (slash == std::string::npos) {
        base_ = url;
        path_ = "/";
    } else {
        base_ = url.substr(0, slash);
        path_ = url.substr(slash);
    }
    if (tokens_.empty()) tokens_.push_back("");
}

std::unique_ptr<RemoteInferenceClient> RemoteInferenceClient::from_env() {
    const char* url = std::getenv("SCORER_URL");
    if (!url || !*url) return nullptr;
    std::vector<std::string> tokens;
    if (const char* raw = std::getenv("SCORER_TOKENS")) {
        std::string s(raw);
        size_t start = 0;
        while (start <= s.size()) {
            size_t comma = s.find(',', start);
            std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos
                                                                         : comma - start);
            if (!tok.empty()) tokens.push_back(tok);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
    }
    return std::make_unique<RemoteInferenceClient>(url, std::move(tokens));
}

std::string RemoteInferenceClient::post(const std::string& prompt) {
    httplib::Client client(base_);
    client.set_connection_timeout(10);
    client.set_read_timeout(30);
    const std::string token = tokens_[next_token_++ % tokens_.size()];
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    Json body = Json{{"prompt", prompt}, {"seed", sampling_seed_}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res || res->status != 200) {
        throw BackendUnavailable(base_ + path_ +
                                 (res ? " status " + std::to_string(res->status) : " unreachable"));
    }
    Json parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_object() && parsed.contains("text")) return parsed["text"].get<std::string>();
    return res->body;
}

bool RemoteInferenceClient::classify_political(const std::string& text) {
    const std::string reply = post(build_political_prompt(text));
    for (char c : reply) {
        if (c == '1') return true;
        if (c == '0') return false;
    }
    throw BackendUnavailable("unparseable political reply");
}

std::string RemoteInferenceClient::complete(const std::string& prompt) { return post(prompt); }

// --- cache -------------------------------------------------------------------

uint64_t content_hash(const std::string& assembled_text) { return fnv1a64(assembled_text); }

std::optional<AapaScore> ScoreCache::get(uint64_t key) {
    std::lock_guard lock(mu_);
    auto it = map_.find(key);
    if (it == map_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    return it->second;
}

void ScoreCache::put(uint64_t key, const AapaScore& score) {
    std::lock_guard lock(mu_);
    map_[key] = score; // last writer wins; identical values in practice
}

size_t ScoreCache::size() const {
    std::lock_guard lock(mu_);
    return map_.size();
}

// --- score_posts ----------------------------------------------------------

namespace {

struct PendingCompletion {
    size_t chunk_index;
    int factor;
    std::shared_future<std::string> result;
};

} // namespace

ScoringOutcome score_posts(const std::vector<Post>& posts, ScoringBackend& backend,
                           ScoreCache& cache, int timeout_ms) {
    ScoringOutcome outcome;
    auto& diag = outcome.diagnostics;

    // Unique assembled texts; duplicates share one classification.
    struct Pending {
        std::string text;
        uint64_t key;
        std::vector<std::string> post_ids;
    };
    std::vector<Pending> pending;
    std::unordered_map<uint64_t, size_t> by_key;

    for (const auto& post : posts) {
        if (post.is_ad) continue;
        const std::string text = assemble_scoring_text(post);
        const uint64_t key = content_hash(text);
        if (auto hit = cache.get(key)) {
            ++diag.cache_hits;
            outcome.scores.emplace(post.post_id, *hit);
            continue;
        }
        ++diag.cache_misses;
        auto [it, fresh] = by_key.try_emplace(key, pending.size());
        if (fresh) pending.push_back({text, key, {post.post_id}});
        else pending[it->second].post_ids.push_back(post.post_id);
    }

    // Political pre-filter; non-political texts never reach the factor stage.
    std::vector<Message> political; // (representative id, text)
    std::unordered_map<std::string, size_t> rep_to_pending;
    for (size_t i = 0; i < pending.size(); ++i) {
        ++diag.political_checks;
        if (backend.classify_political(pending[i].text)) {
            const std::string& rep = pending[i].post_ids.front();
            political.emplace_back(rep, pending[i].text);
            rep_to_pending[rep] = i;
        } else {
            AapaScore score; // all false, non-political
            cache.put(pending[i].key, score);
            for (const auto& id : pending[i].post_ids) outcome.scores.emplace(id, score);
        }
    }

    const auto chunks = chunk_messages(political, 10);

    // One factor vector per political representative, keyed by rep id.
    std::unordered_map<std::string, std::array<bool, kFactorCount>> factor_bits;
    for (const auto& [rep, text] : political) factor_bits[rep] = {};

    auto apply_response = [&](size_t chunk_index, int factor, const std::string& raw) {
        std::vector<std::string> expected;
        for (const auto& [id, text] : chunks[chunk_index]) expected.push_back(id);
        bool degraded = false;
        auto answers = parse_factor_response(raw, expected, &degraded);
        if (degraded) ++diag.degraded_parses;
        for (const auto& [id, yes] : answers) {
            if (yes) factor_bits[id][factor] = true;
        }
    };

    if (backend.capabilities().expected_latency_ms == 0) {
        // Instant backends (the offline oracle) answer inline; nothing can
        // hit the deadline.
        for (size_t c = 0; c < chunks.size(); ++c) {
            for (int f = 0; f < kFactorCount; ++f) {
                ++diag.factor_requests;
                try {
                    apply_response(c, f, backend.complete(build_factor_prompt(f, chunks[c])));
                } catch (...) {
                    ++diag.degraded_parses;
                }
            }
        }
    } else {
        // Dispatch all chunk x factor completions concurrently; a request
        // that exceeds the deadline leaves its factors false for the whole
        // chunk and keeps running detached.
        std::vector<PendingCompletion> requests;
        requests.reserve(chunks.size() * kFactorCount);
        for (size_t c = 0; c < chunks.size(); ++c) {
            for (int f = 0; f < kFactorCount; ++f) {
                auto prompt = std::make_shared<std::string>(build_factor_prompt(f, chunks[c]));
                auto promise = std::make_shared<std::promise<std::string>>();
                requests.push_back({c, f, promise->get_future().share()});
                ++diag.factor_requests;
                std::thread([&backend, prompt, promise] {
                    try {
                        promise->set_value(backend.complete(*prompt));
                    } catch (...) {
                        promise->set_exception(std::current_exception());
                    }
                }).detach();
            }
        }

        const auto deadline =
            std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
        for (const auto& req : requests) {
            if (req.result.wait_until(deadline) != std::future_status::ready) {
                ++diag.timeouts;
                continue;
            }
            std::string raw;
            try {
                raw = req.result.get();
            } catch (...) {
                ++diag.degraded_parses;
                continue;
            }
            apply_response(req.chunk_index, req.factor, raw);
        }
    }

    for (const auto& [rep, bits] : factor_bits) {
        AapaScore score;
        score.factors = bits;
        score.is_political = true;
        const Pending& entry = pending[rep_to_pending[rep]];
        cache.put(entry.key, score);
        for (const auto& id : entry.post_ids) outcome.scores.emplace(id, score);
    }
    return outcome;
}

bool is_political(const std::string& text, ScoringBackend& backend) {
    if (text.empty()) return false;
    return backend.classify_political(text);
}

double political_fraction(const std::vector<Post>& posts, ScoringBackend& backend) {
    if (posts.empty()) throw EmptyBatch("no posts to screen");
    int total = 0, political = 0;
    for (const auto& post : posts) {
        if (post.is_ad) continue;
        ++total;
        if (is_political(assemble_scoring_text(post), backend)) ++political;
    }
    if (total == 0) throw EmptyBatch("only ads in screening sample");
    return double(political) / double(total);
}

} // namespace feedlab
