#include "feedlab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "feedlab/errors.hpp"
#include "feedlab/survey.hpp"

namespace feedlab::sim {

const std::array<const char*, 4> kEmotionNames = {"angry", "sad", "excited", "calm"};

// --- config ---------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<double> parse_number_list(const std::string& raw) {
    std::vector<double> out;
    std::string inner = raw;
    if (!inner.empty() && inner.front() == '[') inner = inner.substr(1, inner.size() - 2);
    std::istringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

} // namespace

SimConfig load_sim_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("ConfigLoad", "cannot open " + path);

    SimConfig c;
    std::map<std::string, std::function<void(const std::string&)>> setters;
    auto set_int = [&](const char* k, int& f) { setters[k] = [&f](const std::string& v) { f = std::stoi(v); }; };
    auto set_dbl = [&](const char* k, double& f) { setters[k] = [&f](const std::string& v) { f = std::stod(v); }; };
    auto set_u64 = [&](const char* k, uint64_t& f) { setters[k] = [&f](const std::string& v) { f = std::stoull(v); }; };
    auto set_arr = [&](const char* k, std::array<double, kFactorCount>& f) {
        setters[k] = [&f](const std::string& v) {
            const auto nums = parse_number_list(v);
            if (nums.size() != f.size()) throw Error("ConfigLoad", "expected 8 numbers");
            std::copy(nums.begin(), nums.end(), f.begin());
        };
    };

    set_int("n_participants", c.n_participants);
    set_dbl("democrat_fraction", c.democrat_fraction);
    set_dbl("bovitz_fraction", c.bovitz_fraction);
    set_int("batch_size", c.batch_size);
    set_int("ads_per_batch", c.ads_per_batch);
    set_dbl("political_fraction", c.political_fraction);
    set_dbl("aapa_given_political", c.aapa_given_political);
    set_arr("factor_weights", c.factor_weights);
    set_dbl("extra_sessions_per_day", c.extra_sessions_per_day);
    set_dbl("loads_per_session_base", c.loads_per_session_base);
    set_dbl("activity_mean", c.activity_mean);
    set_dbl("activity_sigma", c.activity_sigma);
    set_dbl("scroll_depth_mean", c.scroll_depth_mean);
    set_dbl("favorite_rate", c.favorite_rate);
    set_dbl("repost_rate", c.repost_rate);
    set_dbl("reply_rate", c.reply_rate);
    set_dbl("political_multiplier", c.political_multiplier);
    set_dbl("latent_thermo_mean", c.latent_thermo_mean);
    set_dbl("latent_thermo_sd", c.latent_thermo_sd);
    set_dbl("response_noise_sd", c.response_noise_sd);
    set_dbl("post_survey_noise_sd", c.post_survey_noise_sd);
    set_dbl("dose_coefficient", c.dose_coefficient);
    set_dbl("answer_probability", c.answer_probability);
    set_dbl("platform_effect", c.platform_effect);
    set_dbl("ate_thermometer_reduce", c.ate_thermometer_reduce);
    set_dbl("ate_thermometer_increase", c.ate_thermometer_increase);
    set_dbl("ate_negative_emotion_reduce", c.ate_negative_emotion_reduce);
    set_dbl("ate_negative_emotion_increase", c.ate_negative_emotion_increase);
    set_arr("factor_dose_slopes", c.factor_dose_slopes);
    set_dbl("attrition_rate_treatment", c.attrition_rate_treatment);
    set_dbl("attrition_rate_control", c.attrition_rate_control);
    set_int("quota_reduce", c.study.quota_reduce);
    set_int("quota_increase", c.study.quota_increase);
    set_int("baseline_days", c.study.baseline_days);
    set_int("total_days", c.study.total_days);
    set_int("min_feed_loads", c.study.min_feed_loads);
    set_u64("master_seed", c.master_seed);

    std::string line;
    std::string pending; // multi-line arrays
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') continue; // section headers are cosmetic
        if (!pending.empty()) {
            pending += line;
        } else {
            pending = line;
        }
        if (pending.find('=') == std::string::npos) {
            throw Error("ConfigLoad", "line " + std::to_string(line_no) + ": expected key = value");
        }
        // Arrays may span lines until the closing bracket.
        const size_t open = pending.find('[');
        if (open != std::string::npos && pending.find(']') == std::string::npos) continue;

        const size_t eq = pending.find('=');
        const std::string key = trim(pending.substr(0, eq));
        std::string value = trim(pending.substr(eq + 1));
        pending.clear();
        if (!value.empty() && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        auto it = setters.find(key);
        if (it == setters.end()) throw Error("ConfigLoad", "unknown key: " + key);
        it->second(value);
    }
    c.study.master_seed = c.master_seed;
    return c;
}

uint64_t config_hash(const SimConfig& c) {
    std::ostringstream ss;
    ss.precision(17);
    ss << c.n_participants << '|' << c.democrat_fraction << '|' << c.bovitz_fraction << '|'
       << c.batch_size << '|' << c.ads_per_batch << '|' << c.political_fraction << '|'
       << c.aapa_given_political << '|';
    for (double w : c.factor_weights) ss << w << ',';
    ss << '|' << c.extra_sessions_per_day << '|' << c.loads_per_session_base << '|'
       << c.activity_mean << '|' << c.activity_sigma << '|' << c.scroll_depth_mean << '|'
       << c.favorite_rate << '|' << c.repost_rate << '|' << c.reply_rate << '|'
       << c.political_multiplier << '|' << c.latent_thermo_mean << '|' << c.latent_thermo_sd
       << '|' << c.response_noise_sd << '|' << c.post_survey_noise_sd << '|'
       << c.dose_coefficient << '|' << c.answer_probability << '|' << c.platform_effect << '|'
       << c.ate_thermometer_reduce << '|' << c.ate_thermometer_increase << '|'
       << c.ate_negative_emotion_reduce << '|' << c.ate_negative_emotion_increase << '|';
    for (double s : c.factor_dose_slopes) ss << s << ',';
    ss << '|' << c.attrition_rate_treatment << '|' << c.attrition_rate_control << '|'
       << c.study.quota_reduce << '|' << c.study.quota_increase << '|' << c.study.baseline_days
       << '|' << c.study.total_days << '|' << c.study.min_feed_loads << '|' << c.master_seed;
    return fnv1a64(ss.str());
}

// --- population -------------------------------------------------------------

std::vector<Participant> generate_population(const SimConfig& config, Rng& rng,
                                             std::map<std::string, LatentState>* latents) {
    std::vector<Participant> out;
    out.reserve(config.n_participants);
    const std::array<double, 4> emotion_means = {10, 9, 13, 18};
    const std::array<double, 4> emotion_sds = {5, 5, 6, 7};
    for (int i = 0; i < config.n_participants; ++i) {
        Participant p;
        char buf[16];
        std::snprintf(buf, sizeof buf, "pt%05d", i);
        p.participant_id = buf;
        p.party = rng.bernoulli(config.democrat_fraction) ? Party::Democrat : Party::Republican;
        p.platform =
            rng.bernoulli(config.bovitz_fraction) ? Platform::BovitzLike : Platform::CloudResearchLike;

        LatentState latent;
        latent.thermometer =
            std::clamp(rng.normal(config.latent_thermo_mean, config.latent_thermo_sd), 2.0, 98.0);
        for (int e = 0; e < 4; ++e) {
            latent.emotion[e] = std::clamp(rng.normal(emotion_means[e], emotion_sds[e]), 0.0, 70.0);
        }
        const double mu = std::log(config.activity_mean) - 0.5 * config.activity_sigma * config.activity_sigma;
        latent.activity = std::exp(rng.normal(mu, config.activity_sigma));

        p.pre_survey["thermometer"] =
            std::clamp(std::round(latent.thermometer + rng.normal(0, 5.0)), 0.0, 100.0);
        for (int e = 0; e < 4; ++e) {
            p.pre_survey[kEmotionNames[e]] =
                std::clamp(std::round(1.0 + latent.emotion[e] / 25.0 + rng.normal(0, 0.5)), 1.0, 5.0);
        }
        if (latents) (*latents)[p.participant_id] = latent;
        out.push_back(std::move(p));
    }
    return out;
}

// --- feed generation ----------------------------------------------------------

namespace {

// Weighted sample of `count` distinct factor indices.
std::array<bool, kFactorCount> draw_factors(int count, const std::array<double, kFactorCount>& weights,
                                            Rng& rng) {
    std::array<bool, kFactorCount> picked{};
    std::array<double, kFactorCount> w = weights;
    for (int k = 0; k < count; ++k) {
        double total = 0;
        for (int f = 0; f < kFactorCount; ++f) total += picked[f] ? 0.0 : w[f];
        double target = rng.uniform01() * total;
        for (int f = 0; f < kFactorCount; ++f) {
            if (picked[f]) continue;
            target -= w[f];
            if (target <= 0) {
                picked[f] = true;
                break;
            }
        }
    }
    return picked;
}

int draw_aapa_count(Rng& rng) {
    // Score distribution over 4..8, most mass at the threshold.
    const double u = rng.uniform01();
    if (u < 0.40) return 4;
    if (u < 0.65) return 5;
    if (u < 0.83) return 6;
    if (u < 0.94) return 7;
    return 8;
}

int draw_moderate_count(Rng& rng) {
    const double u = rng.uniform01();
    if (u < 0.35) return 0;
    if (u < 0.65) return 1;
    if (u < 0.85) return 2;
    return 3;
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) {
    return v[rng.index(v.size())];
}

} // namespace

FeedBatch generate_feed_batch(const std::string& participant_id, uint64_t load_seq,
                              int64_t fetched_at, const SimConfig& config, Rng& rng,
                              std::map<std::string, AapaScore>* latent_truth) {
    const Lexicon& lex = Lexicon::builtin();
    const int n = std::max(1, config.batch_size);
    const int n_ads = std::clamp(config.ads_per_batch, 0, n);

    // Ad slots drawn without replacement.
    std::vector<int> slots(n);
    for (int i = 0; i < n; ++i) slots[i] = i;
    for (int i = 0; i < n_ads; ++i) std::swap(slots[i], slots[i + rng.index(n - i)]);
    std::vector<bool> is_ad_slot(n, false);
    for (int i = 0; i < n_ads; ++i) is_ad_slot[slots[i]] = true;

    std::vector<Post> posts;
    posts.reserve(n);
    const std::string stem = participant_id + ":" + std::to_string(load_seq) + ":";
    for (int idx = 0; idx < n; ++idx) {
        Post post;
        post.author_id = "author" + std::to_string(rng.index(5000));
        post.created_at = fetched_at - int64_t(rng.index(6 * 3600'000));
        if (is_ad_slot[idx]) {
            post.post_id = "ad:" + stem + std::to_string(idx);
            post.is_ad = true;
            post.text = pick(lex.neutral, rng) + " (sponsored)";
            posts.push_back(std::move(post));
            continue;
        }
        post.post_id = "c:" + stem + std::to_string(idx);

        AapaScore truth;
        std::string text;
        if (rng.bernoulli(config.political_fraction)) {
            truth.is_political = true;
            const int count = rng.bernoulli(config.aapa_given_political) ? draw_aapa_count(rng)
                                                                         : draw_moderate_count(rng);
            truth.factors = draw_factors(count, config.factor_weights, rng);
            text = "About the " + pick(lex.political, rng) + ":";
            for (int f = 0; f < kFactorCount; ++f) {
                if (truth.factors[f]) text += " " + pick(lex.factors[f], rng) + ".";
            }
            if (count == 0) text += " " + pick(lex.neutral, rng) + ".";
        } else {
            text = pick(lex.neutral, rng) + ". " + pick(lex.neutral, rng) + ".";
        }
        post.text = std::move(text);
        if (latent_truth) (*latent_truth)[post.post_id] = truth;
        posts.push_back(std::move(post));
    }
    return validate_batch(std::move(posts), participant_id, load_seq, fetched_at);
}

// --- behavior ---------------------------------------------------------------

int simulate_behavior(const Participant& participant, const std::vector<RankedPost>& feed,
                      const ScoreMap& scores, int64_t start_at, const SimConfig& config, Rng& rng,
                      std::vector<EngagementEvent>& events,
                      std::set<std::string>* viewed_aapa_ids) {
    if (feed.empty() || config.scroll_depth_mean <= 0) return 0;
    const double tail_mean = std::max(1.0, config.scroll_depth_mean - 5.0);
    const int depth = std::min<int64_t>(int64_t(feed.size()),
                                        5 + rng.geometric(1.0 / (1.0 + tail_mean)));
    int aapa_views = 0;
    int64_t t = start_at;
    for (int k = 0; k < depth; ++k) {
        const Post& post = feed[k].post;
        EngagementEvent view;
        view.participant_id = participant.participant_id;
        view.post_id = post.post_id;
        view.kind = EventKind::View;
        const double u = rng.uniform01();
        view.visible_ms = 1000 + int64_t(4000 * u * u);
        view.at = t;
        events.push_back(view);

        if (!post.is_ad) {
            auto it = scores.find(post.post_id);
            const bool political = it != scores.end() && it->second.is_political;
            const double mult = political ? config.political_multiplier : 1.0;
            if (political && is_aapa(it->second)) {
                ++aapa_views;
                if (viewed_aapa_ids) viewed_aapa_ids->insert(post.post_id);
            }
            auto act = [&](EventKind kind, double rate) {
                if (!rng.bernoulli(rate * mult)) return;
                EngagementEvent e;
                e.participant_id = participant.participant_id;
                e.post_id = post.post_id;
                e.kind = kind;
                e.at = t + 400;
                events.push_back(e);
            };
            act(EventKind::Favorite, config.favorite_rate);
            act(EventKind::Repost, config.repost_rate);
            act(EventKind::Reply, config.reply_rate);
        }
        t += 1500;
    }
    return aapa_views;
}

// --- responses ---------------------------------------------------------------

SurveyResponse simulate_response(const LatentState& latent, const SurveyPrompt& prompt,
                                 int recent_aapa_views, const SimConfig& config, Rng& rng,
                                 int64_t answered_at) {
    auto slider = [&](double value) {
        return int(std::clamp(std::round(value), 0.0, 100.0));
    };
    SurveyResponse resp;
    resp.prompt_id = prompt.prompt_id;
    resp.answered_at = answered_at;
    if (prompt.kind == SurveyKind::Thermometer) {
        const double v = latent.thermometer + config.dose_coefficient * recent_aapa_views +
                         rng.normal(0, config.response_noise_sd);
        resp.values = {slider(v)};
        return resp;
    }
    const int pos_idx = prompt.positive == PositiveEmotion::Excited ? 2 : 3;
    const int neg_idx = prompt.negative == NegativeEmotion::Angry ? 0 : 1;
    resp.values = {
        slider(latent.emotion[pos_idx] + rng.normal(0, config.response_noise_sd)),
        slider(latent.emotion[neg_idx] + rng.normal(0, config.response_noise_sd)),
    };
    return resp;
}

// --- run_study -----------------------------------------------------------------

namespace {

struct ParticipantRun {
    Participant participant;
    Assignment assignment;
    SchedulerState scheduler;
    std::set<std::string> viewed_aapa;
    uint64_t load_seq = 0;
    int political_views = 0;
    int total_views = 0;
    std::array<int, kFactorCount> factor_views{};
};

struct RecRow {
    Post post;
    AapaScore score;
    std::string recipient_id;
    Party party;
    int64_t at;
};

} // namespace

RunArtifacts run_study(const SimConfig& config) {
    RunArtifacts art;
    art.config = config;
    art.ground_truth = {config.ate_thermometer_reduce,    config.ate_thermometer_increase,
                        config.ate_negative_emotion_reduce, config.ate_negative_emotion_increase,
                        config.dose_coefficient,          config.factor_dose_slopes};

    StudyConfig study = config.study;
    study.master_seed = config.master_seed;
    const uint64_t master = config.master_seed;

    Rng rng_pop(derive_seed(master, "population"));
    std::vector<Participant> population = generate_population(config, rng_pop, &art.latents);

    DeterministicLexiconOracle backend;
    ScoreCache cache;
    EnrollmentState quotas;
    Rng rng_enroll(derive_seed(master, "enroll"));

    std::vector<ParticipantRun> runs;
    for (size_t i = 0; i < population.size(); ++i) {
        const Participant& p = population[i];
        // Screening task on a pre-study working set.
        Rng screen_rng(derive_seed(master, p.participant_id + ":screen"));
        FeedBatch screen_batch =
            generate_feed_batch(p.participant_id, 0, -3600'000, config, screen_rng);
        if (political_fraction(screen_batch.posts, backend) < kScreeningThreshold) continue;

        Assignment assignment;
        try {
            assignment = enroll(p, study, quotas, rng_enroll);
        } catch (const QuotasFull&) {
            break;
        }
        ParticipantRun run;
        run.participant = p;
        run.assignment = assignment;
        run.scheduler.participant_id = p.participant_id;
        run.scheduler.local_tz_offset = p.local_tz_offset;

        LatentState& latent = art.latents[p.participant_id];
        const double attrition_rate = assignment.arm == Arm::Treatment
                                          ? config.attrition_rate_treatment
                                          : config.attrition_rate_control;
        Rng att_rng(derive_seed(master, p.participant_id + ":attrition"));
        if (attrition_rate > 0 && att_rng.bernoulli(attrition_rate)) {
            latent.attrited = true;
            latent.dropout_day = 2 + int(att_rng.index(std::max(1, study.total_days - 3)));
        }
        art.participants.push_back(p);
        art.assignments.push_back(assignment);
        runs.push_back(std::move(run));
    }

    UprankInventory inventory;
    std::map<std::string, AapaScore> inventory_scores;
    std::vector<RecRow> recent_recs;

    const std::array<int, 8> session_hours = {8, 10, 12, 14, 16, 18, 20, 22};

    for (int day = 1; day <= study.total_days; ++day) {
        const Phase phase = phase_of(day, study);
        const int64_t day_base = int64_t(day - 1) * kMsPerDay;
        std::vector<RecRow> today_recs;

        for (auto& run : runs) {
            const std::string& pid = run.participant.participant_id;
            LatentState& latent = art.latents[pid];
            if (latent.attrited && day >= latent.dropout_day) continue;

            Rng day_rng(derive_seed(master, pid + ":day", uint64_t(day)));
            int n_sessions = 1 + int(day_rng.poisson(config.extra_sessions_per_day));
            n_sessions = std::min(n_sessions, int(session_hours.size()));

            // Distinct two-hour slots keep sessions >= 1h apart.
            std::array<int, 8> hours = session_hours;
            for (int s = 0; s < n_sessions; ++s) {
                std::swap(hours[s], hours[s + day_rng.index(hours.size() - s)]);
            }
            std::sort(hours.begin(), hours.begin() + n_sessions);

            int aapa_views_today = 0;
            const double load_mean = config.loads_per_session_base * latent.activity;

            for (int s = 0; s < n_sessions; ++s) {
                DemotionCache dcache;
                dcache.session_id = pid + ":" + std::to_string(day) + ":" + std::to_string(s);
                int64_t t = day_base + int64_t(hours[s]) * 3600'000;
                const int loads = 1 + int(day_rng.geometric(1.0 / (1.0 + load_mean)));

                for (int l = 0; l < loads; ++l) {
                    run.load_seq += 1;
                    Rng load_rng(derive_seed(master, pid + ":load", run.load_seq));
                    Rng feed_rng = load_rng.fork(1);
                    Rng rerank_rng = load_rng.fork(2);
                    Rng sched_rng = load_rng.fork(3);
                    Rng behavior_rng = load_rng.fork(4);
                    Rng response_rng = load_rng.fork(5);

                    FeedBatch batch =
                        generate_feed_batch(pid, run.load_seq, t, config, feed_rng);
                    MergeResult merged = merge_demoted(batch, dcache);

                    EngagementEvent load_event;
                    load_event.participant_id = pid;
                    load_event.kind = EventKind::FeedLoad;
                    load_event.at = t;
                    art.events.push_back(load_event);

                    ScoringOutcome scored = score_posts(merged.batch.posts, backend, cache);
                    auto& d = art.scoring_totals;
                    d.political_checks += scored.diagnostics.political_checks;
                    d.factor_requests += scored.diagnostics.factor_requests;
                    d.cache_hits += scored.diagnostics.cache_hits;
                    d.cache_misses += scored.diagnostics.cache_misses;
                    d.timeouts += scored.diagnostics.timeouts;
                    d.degraded_parses += scored.diagnostics.degraded_parses;

                    std::optional<SurveyPrompt> prompt = maybe_issue(run.scheduler, t, sched_rng);
                    const Arm effective_arm =
                        phase == Phase::Intervention ? run.assignment.arm : Arm::Control;

                    RerankedFeed reranked;
                    int n_upranked = 0;
                    if (run.assignment.experiment == Experiment::Reduce) {
                        reranked = rerank_reduced(merged.batch, scored.scores, effective_arm,
                                                  rerank_rng, prompt.has_value(),
                                                  merged.reemitted_ids, dcache.session_cursor);
                        for (auto& entry : reranked.demoted) dcache.entries.push_back(entry);
                    } else {
                        std::optional<Post> candidate;
                        if (phase == Phase::Intervention) {
                            candidate = inventory.select(run.participant, run.viewed_aapa, t,
                                                         rerank_rng);
                        }
                        reranked = rerank_increased(merged.batch, effective_arm, candidate,
                                                    rerank_rng, prompt.has_value());
                        for (const auto& rp : reranked.posts) {
                            if (rp.origin == PostOrigin::Upranked) ++n_upranked;
                        }
                        if (candidate) {
                            auto it = inventory_scores.find(candidate->post_id);
                            if (it != inventory_scores.end()) {
                                scored.scores[candidate->post_id] = it->second;
                            }
                        }
                    }
                    dcache.session_cursor += int64_t(merged.batch.posts.size());

                    int n_aapa = 0;
                    for (const auto& rp : reranked.posts) {
                        if (rp.post.is_ad) continue;
                        auto it = scored.scores.find(rp.post.post_id);
                        if (it != scored.scores.end() && is_aapa(it->second)) ++n_aapa;
                    }

                    RerankRecord rec;
                    rec.participant_id = pid;
                    rec.day = day;
                    rec.load_seq = run.load_seq;
                    rec.batch_len = int(merged.batch.posts.size());
                    rec.n_aapa = n_aapa;
                    rec.n_demoted = int(reranked.demoted.size());
                    rec.n_reemitted = int(merged.reemitted_ids.size());
                    rec.n_upranked = n_upranked;
                    rec.survey_slot = reranked.survey_slot;
                    art.rerank_log.push_back(rec);

                    if (prompt && reranked.survey_slot) {
                        prompt->feed_position = *reranked.survey_slot;
                        run.scheduler.outstanding[prompt->prompt_id].feed_position =
                            *reranked.survey_slot;
                        art.prompts.push_back({pid, day, *prompt});
                        if (response_rng.bernoulli(config.answer_probability)) {
                            LatentState shifted = latent;
                            if (effective_arm == Arm::Treatment) {
                                const bool reduce =
                                    run.assignment.experiment == Experiment::Reduce;
                                shifted.thermometer += reduce ? config.ate_thermometer_reduce
                                                              : config.ate_thermometer_increase;
                                const double neg = reduce ? config.ate_negative_emotion_reduce
                                                          : config.ate_negative_emotion_increase;
                                shifted.emotion[0] += neg;
                                shifted.emotion[1] += neg;
                            }
                            SurveyResponse resp = simulate_response(
                                shifted, *prompt, aapa_views_today, config, response_rng,
                                t + 5000);
                            record_answer(run.scheduler, resp, t + 5000);
                            art.responses.push_back({pid, day, prompt->kind, prompt->positive,
                                                     prompt->negative, resp});
                        }
                    } else if (prompt) {
                        discard_prompt(run.scheduler, prompt->prompt_id);
                    }

                    const size_t events_before = art.events.size();
                    aapa_views_today += simulate_behavior(run.participant, reranked.posts,
                                                          scored.scores, t + 2000, config,
                                                          behavior_rng, art.events,
                                                          &run.viewed_aapa);
                    // Keep scores for every viewed non-ad post and tally the
                    // participant's political exposure.
                    for (size_t e = events_before; e < art.events.size(); ++e) {
                        const auto& ev = art.events[e];
                        if (ev.kind != EventKind::View || !ev.post_id) continue;
                        auto it = scored.scores.find(*ev.post_id);
                        if (it == scored.scores.end()) continue; // ad
                        art.scores.emplace(*ev.post_id, it->second);
                        run.total_views += 1;
                        if (it->second.is_political) {
                            run.political_views += 1;
                            for (int f = 0; f < kFactorCount; ++f) {
                                if (it->second.factors[f]) run.factor_views[f] += 1;
                            }
                        }
                    }

                    // Everything served this load was recommended to this
                    // participant; AAPA posts become uprank candidates.
                    for (const auto& rp : reranked.posts) {
                        if (rp.post.is_ad) continue;
                        auto it = scored.scores.find(rp.post.post_id);
                        if (it == scored.scores.end() || !is_aapa(it->second)) continue;
                        today_recs.push_back(
                            {rp.post, it->second, pid, run.participant.party, t});
                    }

                    t += 90'000;
                }
                if (day_rng.bernoulli(0.08)) {
                    EngagementEvent post_event;
                    post_event.participant_id = pid;
                    post_event.kind = EventKind::NewPost;
                    post_event.at = t;
                    art.events.push_back(post_event);
                }
            }
        }

        // Day boundary: fold today's recommendations into the inventory and
        // drop anything that can no longer satisfy the 24h recency filter.
        const int64_t next_day_start = int64_t(day) * kMsPerDay;
        recent_recs.insert(recent_recs.end(), today_recs.begin(), today_recs.end());
        std::erase_if(recent_recs, [&](const RecRow& r) {
            return next_day_start + kMsPerDay - r.at > 2 * kInventoryWindowMs;
        });
        inventory = UprankInventory();
        inventory_scores.clear();
        for (const auto& r : recent_recs) {
            inventory.record(r.post, r.score, r.recipient_id, r.party, r.at);
            inventory_scores[r.post.post_id] = r.score;
        }
    }

    // Completion and the post-experiment survey.
    std::vector<std::string> ids;
    for (const auto& run : runs) ids.push_back(run.participant.participant_id);
    art.completed = completion_filter(ids, art.events, study);

    for (const auto& run : runs) {
        const std::string& pid = run.participant.participant_id;
        if (!art.completed.count(pid)) continue;
        const LatentState& latent = art.latents.at(pid);
        Rng post_rng(derive_seed(master, pid + ":post_survey"));

        const bool treated = run.assignment.arm == Arm::Treatment;
        const bool reduce = run.assignment.experiment == Experiment::Reduce;
        const double ate = reduce ? config.ate_thermometer_reduce : config.ate_thermometer_increase;

        double dose_term = 0;
        if (run.political_views > 0) {
            for (int f = 0; f < kFactorCount; ++f) {
                dose_term += config.factor_dose_slopes[f] *
                             (double(run.factor_views[f]) / run.political_views);
            }
        }
        std::map<std::string, double>& answers = art.post_surveys[pid];
        const double platform_shift =
            run.participant.platform == Platform::CloudResearchLike ? config.platform_effect : 0.0;
        answers["thermometer"] =
            std::clamp(std::round(latent.thermometer + (treated ? ate : 0.0) + platform_shift +
                                  dose_term + post_rng.normal(0, config.post_survey_noise_sd)),
                       0.0, 100.0);
        for (int e = 0; e < 4; ++e) {
            answers[kEmotionNames[e]] =
                std::clamp(std::round(run.participant.pre_survey.at(kEmotionNames[e]) +
                                      post_rng.normal(0, 0.7)),
                           1.0, 5.0);
        }
    }
    return art;
}

} // namespace feedlab::sim
