#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "feedlab/domain.hpp"
#include "feedlab/lexicon.hpp"

namespace feedlab {

struct BackendCapabilities {
    int max_concurrent = 8;
    int expected_latency_ms = 0;
};

// Pluggable classifier backend. `complete` receives a rendered factor
// prompt and returns the raw model output; `classify_political` answers
// the pre-filter question for a single assembled text.
//
// Lifetime: a backend must outlive any in-flight request. Requests that
// outlive their timeout keep running on detached threads and still touch
// the backend when they finish.
class ScoringBackend {
  public:
    virtual ~ScoringBackend() = default;
    virtual BackendCapabilities capabilities() const = 0;
    virtual bool classify_political(const std::string& text) = 0;
    virtual std::string complete(const std::string& prompt) = 0;
};

// Offline backend driven by keyword tables; bit-reproducible.
class DeterministicLexiconOracle final : public ScoringBackend {
  public:
    DeterministicLexiconOracle() : lexicon_(Lexicon::builtin()) {}
    explicit DeterministicLexiconOracle(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

    BackendCapabilities capabilities() const override { return {64, 0}; }
    bool classify_political(const std::string& text) override;
    std::string complete(const std::string& prompt) override;

    const Lexicon& lexicon() const { return lexicon_; }

  private:
    // The eight factor prompts of a chunk carry the same texts; matches are
    // memoized per text so each is scanned once.
    const std::array<bool, kFactorCount>& factors_for(const std::string& text);

    Lexicon lexicon_;
    std::mutex memo_mu_;
    std::unordered_map<uint64_t, std::array<bool, kFactorCount>> memo_;
};

// HTTP client for an external text-model provider. Speaks the same
// prompt/response text protocol as the oracle: POST {"prompt","seed"} and
// read {"text"} back. Bearer tokens rotate round-robin per request.
class RemoteInferenceClient final : public ScoringBackend {
  public:
    RemoteInferenceClient(std::string url, std::vector<std::string> tokens,
                          int64_t sampling_seed = 1234);
    // Reads SCORER_URL and SCORER_TOKENS (comma-separated).
    static std::unique_ptr<RemoteInferenceClient> from_env();

    BackendCapabilities capabilities() const override { return {8, 2000}; }
    bool classify_political(const std::string& text) override;
    std::string complete(const std::string& prompt) override;

  private:
    std::string post(const std::string& prompt);

    std::string base_;  // scheme://host:port
    std::string path_;  // request path
    std::vector<std::string> tokens_;
    std::atomic<size_t> next_token_{0};
    int64_t sampling_seed_;
};

// --- prompt protocol -----------------------------------------------------

// Question + definition block per factor, used verbatim in prompts.
extern const std::array<const char*, kFactorCount> kFactorQuestions;
extern const std::array<const char*, kFactorCount> kFactorDefinitions;

// Order-preserving partition into chunks of at most max_chunk items; all
// chunks but the last are exactly max_chunk.
template <typename T>
std::vector<std::vector<T>> chunk_messages(const std::vector<T>& items, size_t max_chunk = 10) {
    std::vector<std::vector<T>> chunks;
    for (size_t i = 0; i < items.size(); i += max_chunk) {
        chunks.emplace_back(items.begin() + i,
                            items.begin() + std::min(items.size(), i + max_chunk));
    }
    return chunks;
}

using Message = std::pair<std::string, std::string>; // (id, text)

struct FactorPrompt {
    int factor = 0; // 0..7
    std::vector<Message> messages;
};

// Renders the factor question and definition, the fixed FORMAT section,
// then one {"id":…,"message":…} JSON object per line.
std::string build_factor_prompt(int factor, const std::vector<Message>& chunk);

// Single-text political classification prompt ("Answer 1 if POLITICAL").
std::string build_political_prompt(const std::string& text);

// Parses a JSON array of {"id","answer":"YES"|"NO"}. Missing ids and
// anything malformed degrade to false; `degraded` (if given) is set when
// the payload could not be fully honored.
std::map<std::string, bool> parse_factor_response(const std::string& raw,
                                                  const std::vector<std::string>& expected_ids,
                                                  bool* degraded = nullptr);

// --- cache ----------------------------------------------------------------

uint64_t content_hash(const std::string& assembled_text);

// Concurrent get-or-insert keyed by content hash of the assembled text.
class ScoreCache {
  public:
    std::optional<AapaScore> get(uint64_t key);
    void put(uint64_t key, const AapaScore& score);
    uint64_t hits() const { return hits_; }
    uint64_t misses() const { return misses_; }
    size_t size() const;

  private:
    mutable std::mutex mu_;
    std::unordered_map<uint64_t, AapaScore> map_;
    std::atomic<uint64_t> hits_{0};
    std::atomic<uint64_t> misses_{0};
};

// --- scoring --------------------------------------------------------------

struct ScoringDiagnostics {
    int political_checks = 0;
    int factor_requests = 0; // completions actually dispatched
    int cache_hits = 0;
    int cache_misses = 0;
    int timeouts = 0;        // requests that exceeded the deadline
    int degraded_parses = 0; // responses that could not be fully parsed
};

struct ScoringOutcome {
    std::map<std::string, AapaScore> scores; // post_id -> score (ads omitted)
    ScoringDiagnostics diagnostics;
};

// Scores a working set. Non-political posts get all-false scores without
// factor requests; political posts are chunked (≤10) and the eight factor
// prompts per chunk run concurrently. A request that misses timeout_ms
// leaves its factors false for the whole chunk. Identical texts are scored
// once; the cache is consulted before dispatch and populated after.
ScoringOutcome score_posts(const std::vector<Post>& posts, ScoringBackend& backend,
                           ScoreCache& cache, int timeout_ms = 8000);

bool is_political(const std::string& text, ScoringBackend& backend);

// Fraction of non-ad posts classified political; throws EmptyBatch when
// there is nothing to classify. Screening qualifies at >= 0.05.
double political_fraction(const std::vector<Post>& posts, ScoringBackend& backend);

constexpr double kScreeningThreshold = 0.05;

inline bool is_aapa(const AapaScore& score) { return score.count() >= 4; }

} // namespace feedlab
