#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "feedlab/domain.hpp"
#include "feedlab/rng.hpp"

namespace feedlab {

enum class PostOrigin { Original, Upranked, Reemitted };
const char* to_string(PostOrigin o);

struct RankedPost {
    Post post;
    PostOrigin origin = PostOrigin::Original;
};

// An entry awaiting re-emergence. penalty_key is in session-cumulative
// coordinates: the post resurfaces when the participant's scroll depth
// reaches it within the same session.
struct DemotedEntry {
    Post post;
    int64_t penalty_key = 0;
};

struct RerankedFeed {
    std::vector<RankedPost> posts;
    std::optional<int> survey_slot; // 1-based insertion index, <= len+1
    std::vector<DemotedEntry> demoted;
};

// Per participant-session store of downranked posts. The cursor counts
// positions served so far this session; callers advance it by the length
// of each served working set.
struct DemotionCache {
    std::string session_id;
    int64_t session_cursor = 0;
    std::vector<DemotedEntry> entries;
};

// Sort key for downranking. AAPA posts (score >= 4) move to
// position + position * score * 10; everything else keeps its position.
int64_t penalty_key(int position, int score);

using ScoreMap = std::map<std::string, AapaScore>;

// Reduced Exposure intervention over a scored working set.
//
// No AAPA post: identity feed, no survey. Otherwise one AAPA post is picked
// uniformly at random and the next position is flagged for the survey (both
// arms, same rng draw). Control returns the original order; Treatment
// stable-sorts non-ad posts by penalty key, moving posts whose key exceeds
// the batch length into `demoted` with keys shifted by session_cursor.
// Ads are pinned to their original slots; ids in `pinned` (re-emitted
// posts) keep key = position so they are never demoted twice.
RerankedFeed rerank_reduced(const FeedBatch& batch, const ScoreMap& scores, Arm arm, Rng& rng,
                            bool survey_sampled, const std::set<std::string>& pinned = {},
                            int64_t session_cursor = 0);

// Increased Exposure intervention. Draws one uniform insertion position;
// Treatment inserts the candidate there, Control performs every step except
// the insertion. The survey, when sampled, goes to the next position in
// both arms.
RerankedFeed rerank_increased(const FeedBatch& batch, Arm arm,
                              const std::optional<Post>& candidate, Rng& rng,
                              bool survey_sampled);

struct MergeResult {
    FeedBatch batch; // next_batch with re-emitted posts inserted
    std::set<std::string> reemitted_ids;
};

// Re-inserts cached posts whose penalty key falls inside the position range
// this batch covers (ascending key order; each lands at key - cursor).
// Re-emitted entries are removed from the cache. The cursor is not
// advanced here.
MergeResult merge_demoted(const FeedBatch& next_batch, DemotionCache& cache);

// Cross-participant pool of scored posts that were recommended to study
// participants, used to source uprank candidates.
class UprankInventory {
  public:
    void record(const Post& post, const AapaScore& score, const std::string& recipient_id,
                Party recipient_party, int64_t recommended_at);

    // Candidate filter: AAPA posts not seen by this participant, recommended
    // to other same-party participants within the last 24 hours. One post is
    // drawn uniformly from the 100 highest-scoring matches (ties broken by
    // recency, then post_id).
    std::optional<Post> select(const Participant& participant,
                               const std::set<std::string>& seen_by_participant, int64_t now,
                               Rng& rng) const;

    size_t size() const { return entries_.size(); }

  private:
    struct Recommendation {
        std::string recipient_id;
        Party party;
        int64_t at;
    };
    struct Entry {
        Post post;
        AapaScore score;
        std::vector<Recommendation> recommendations;
    };
    std::map<std::string, Entry> entries_; // by post_id
};

inline std::optional<Post> select_uprank_candidate(const UprankInventory& inventory,
                                                   const Participant& participant,
                                                   const std::set<std::string>& seen,
                                                   int64_t now, Rng& rng) {
    return inventory.select(participant, seen, now, rng);
}

constexpr int64_t kInventoryWindowMs = 24LL * 3600 * 1000;
constexpr int kInventoryTopK = 100;

} // namespace feedlab
