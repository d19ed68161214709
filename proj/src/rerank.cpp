#include "feedlab/rerank.hpp"

#include <algorithm>

#include "feedlab/errors.hpp"
#include "feedlab/scoring.hpp"

namespace feedlab {

const char* to_string(PostOrigin o) {
    switch (o) {
        case PostOrigin::Original: return "original";
        case PostOrigin::Upranked: return "upranked";
        case PostOrigin::Reemitted: return "reemitted";
    }
    return "original";
}

int64_t penalty_key(int position, int score) {
    if (score < 4) return position;
    return int64_t(position) + int64_t(position) * score * 10;
}

namespace {

int score_count_of(const ScoreMap& scores, const Post& post) {
    auto it = scores.find(post.post_id);
    if (it == scores.end()) throw UnscoredBatch(post.post_id);
    return it->second.count();
}

} // namespace

RerankedFeed rerank_reduced(const FeedBatch& batch, const ScoreMap& scores, Arm arm, Rng& rng,
                            bool survey_sampled, const std::set<std::string>& pinned,
                            int64_t session_cursor) {
    const int len = int(batch.posts.size());

    // Positions of AAPA posts eligible for demotion (ads and re-emitted
    // posts never are).
    std::vector<int> aapa_positions;
    for (int pos = 1; pos <= len; ++pos) {
        const Post& post = batch.posts[pos - 1];
        if (post.is_ad || pinned.count(post.post_id)) continue;
        if (score_count_of(scores, post) >= 4) aapa_positions.push_back(pos);
    }

    RerankedFeed out;
    auto original_order = [&] {
        for (const auto& post : batch.posts) {
            out.posts.push_back({post, pinned.count(post.post_id) ? PostOrigin::Reemitted
                                                                  : PostOrigin::Original});
        }
    };

    if (aapa_positions.empty()) {
        original_order();
        return out; // no intervention, no survey
    }

    // Survey slot: the position after one uniformly chosen AAPA post, drawn
    // identically in both arms so matched runs share the slot.
    const int chosen = aapa_positions[rng.index(aapa_positions.size())];
    if (survey_sampled) out.survey_slot = chosen + 1;

    if (arm == Arm::Control) {
        original_order();
        return out;
    }

    // Treatment: stable sort of non-ad posts by penalty key; pinned posts
    // keep key = position.
    struct Keyed {
        int64_t key;
        int position;
        const Post* post;
        PostOrigin origin;
    };
    std::vector<Keyed> movable;
    std::vector<int> ad_positions;
    for (int pos = 1; pos <= len; ++pos) {
        const Post& post = batch.posts[pos - 1];
        if (post.is_ad) {
            ad_positions.push_back(pos);
            continue;
        }
        const bool is_pinned = pinned.count(post.post_id) > 0;
        const int64_t key =
            is_pinned ? pos : penalty_key(pos, score_count_of(scores, post));
        movable.push_back(
            {key, pos, &post, is_pinned ? PostOrigin::Reemitted : PostOrigin::Original});
    }
    std::sort(movable.begin(), movable.end(), [](const Keyed& a, const Keyed& b) {
        return std::tie(a.key, a.position, a.post->post_id) <
               std::tie(b.key, b.position, b.post->post_id);
    });

    std::vector<Keyed> kept;
    for (const auto& k : movable) {
        if (k.key > len) {
            out.demoted.push_back({*k.post, session_cursor + k.key});
        } else {
            kept.push_back(k);
        }
    }

    // Rebuild the feed: ads stay at their original slot indices when those
    // indices still exist; surviving posts fill the rest in key order; ads
    // past the new end are appended.
    const int out_len = int(kept.size() + ad_positions.size());
    std::set<int> ad_slots;
    std::vector<const Post*> overflow_ads;
    for (int pos : ad_positions) {
        if (pos <= out_len) ad_slots.insert(pos);
        else overflow_ads.push_back(&batch.posts[pos - 1]);
    }
    size_t next_kept = 0;
    for (int slot = 1; slot <= out_len; ++slot) {
        if (ad_slots.count(slot)) {
            out.posts.push_back({batch.posts[slot - 1], PostOrigin::Original});
        } else if (next_kept < kept.size()) {
            out.posts.push_back({*kept[next_kept].post, kept[next_kept].origin});
            ++next_kept;
        } else {
            out.posts.push_back({*overflow_ads.front(), PostOrigin::Original});
            overflow_ads.erase(overflow_ads.begin());
        }
    }
    return out;
}

RerankedFeed rerank_increased(const FeedBatch& batch, Arm arm,
                              const std::optional<Post>& candidate, Rng& rng,
                              bool survey_sampled) {
    const int len = int(batch.posts.size());
    RerankedFeed out;

    // The position draw happens in every arm and with or without a
    // candidate, so the survey lands identically across matched runs.
    const int position = int(rng.uniform_int(1, std::max(1, len)));
    if (survey_sampled) out.survey_slot = position + 1;

    for (const auto& post : batch.posts) out.posts.push_back({post, PostOrigin::Original});
    if (arm == Arm::Treatment && candidate) {
        out.posts.insert(out.posts.begin() + (position - 1), {*candidate, PostOrigin::Upranked});
    }
    return out;
}

MergeResult merge_demoted(const FeedBatch& next_batch, DemotionCache& cache) {
    MergeResult result;
    result.batch = next_batch;

    std::sort(cache.entries.begin(), cache.entries.end(),
              [](const DemotedEntry& a, const DemotedEntry& b) {
                  return std::tie(a.penalty_key, a.post.post_id) <
                         std::tie(b.penalty_key, b.post.post_id);
              });

    // The window grows with each insertion: the served batch is one longer,
    // so the next cumulative position comes into reach.
    auto& posts = result.batch.posts;
    std::vector<DemotedEntry> remaining;
    for (const auto& entry : cache.entries) {
        const int64_t window_end = cache.session_cursor + int64_t(posts.size());
        if (entry.penalty_key <= window_end) {
            const int64_t slot =
                std::clamp<int64_t>(entry.penalty_key - cache.session_cursor, 1,
                                    int64_t(posts.size()) + 1);
            posts.insert(posts.begin() + (slot - 1), entry.post);
            result.reemitted_ids.insert(entry.post.post_id);
        } else {
            remaining.push_back(entry);
        }
    }
    cache.entries = std::move(remaining);
    return result;
}

void UprankInventory::record(const Post& post, const AapaScore& score,
                             const std::string& recipient_id, Party recipient_party,
                             int64_t recommended_at) {
    auto& entry = entries_[post.post_id];
    entry.post = post;
    entry.score = score;
    entry.recommendations.push_back({recipient_id, recipient_party, recommended_at});
}

std::optional<Post> UprankInventory::select(const Participant& participant,
                                            const std::set<std::string>& seen_by_participant,
                                            int64_t now, Rng& rng) const {
    struct Candidate {
        const Entry* entry;
        int64_t latest_at;
    };
    std::vector<Candidate> eligible;
    for (const auto& [post_id, entry] : entries_) {
        if (entry.score.count() < 4) continue;
        if (seen_by_participant.count(post_id)) continue;
        int64_t latest = -1;
        for (const auto& rec : entry.recommendations) {
            if (rec.recipient_id == participant.participant_id) continue;
            if (rec.party != participant.party) continue;
            if (now - rec.at > kInventoryWindowMs || rec.at > now) continue;
            latest = std::max(latest, rec.at);
        }
        if (latest >= 0) eligible.push_back({&entry, latest});
    }
    if (eligible.empty()) return std::nullopt;

    std::sort(eligible.begin(), eligible.end(), [](const Candidate& a, const Candidate& b) {
        const int ca = a.entry->score.count(), cb = b.entry->score.count();
        if (ca != cb) return ca > cb;
        if (a.latest_at != b.latest_at) return a.latest_at > b.latest_at;
        return a.entry->post.post_id < b.entry->post.post_id;
    });
    if (eligible.size() > size_t(kInventoryTopK)) eligible.resize(kInventoryTopK);
    return eligible[rng.index(eligible.size())].entry->post;
}

} // namespace feedlab
