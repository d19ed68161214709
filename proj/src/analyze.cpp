#include "feedlab/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "feedlab/errors.hpp"
#include "feedlab/experiment.hpp"
#include "feedlab/stats/fdr.hpp"
#include "feedlab/stats/linreg.hpp"
#include "feedlab/stats/lmm.hpp"
#include "feedlab/stats/mann_whitney.hpp"
#include "feedlab/stats/ri.hpp"
#include "feedlab/survey.hpp"

namespace feedlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

namespace {

using sim::Bundle;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) { return format_double(v); }

int day_of(int64_t at) { return int(at / kMsPerDay) + 1; }

const std::array<const char*, 5> kOutcomes = {"thermometer", "angry", "sad", "excited", "calm"};

struct ParticipantData {
    Participant participant;
    Assignment assignment;
    bool completed = false;
    std::vector<EngagementEvent> events;
    // outcome -> (day, value) in-feed answers
    std::map<std::string, std::vector<std::pair<int, double>>> infeed;
    int political_views = 0;
    int total_views = 0; // qualifying, scoreable
    int aapa_views_intervention = 0;
    int views_intervention = 0;
    std::array<int, kFactorCount> factor_views{};
};

struct OutcomeFit {
    std::string outcome;
    bool infeed = false;
    std::optional<stats::RegressionResult> fit;
    std::string note;
};

// One CSV row per coefficient, regression-table style.
void append_fit_rows(std::ostringstream& out, const std::string& experiment,
                     const std::string& timepoint, const OutcomeFit& f,
                     const std::map<std::string, double>& adjusted) {
    const std::string key = f.outcome + ":" + timepoint;
    if (!f.fit) {
        out << experiment << ',' << timepoint << ',' << f.outcome << ",NA,NA,NA,NA,NA,NA,NA,NA,"
            << f.note << "\n";
        return;
    }
    for (const auto& c : f.fit->coefficients) {
        out << experiment << ',' << timepoint << ',' << f.outcome << ',' << c.name << ','
            << fmt(c.estimate) << ',' << fmt(c.se) << ',' << fmt(c.ci_low) << ','
            << fmt(c.ci_high) << ',' << fmt(c.p_value) << ',';
        if (c.name == "treatment" && adjusted.count(key)) out << fmt(adjusted.at(key));
        else out << "NA";
        out << ',' << f.fit->n_obs << ',';
        if (f.fit->n_groups > 0) out << f.fit->n_groups;
        else out << "NA";
        out << "\n";
    }
}

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    double s = 0;
    for (double x : v) s += x;
    return s / double(v.size());
}

} // namespace

AnalysisTables analyze_bundle(const Bundle& bundle, const AnalyzeOptions& options) {
    AnalysisTables tables;
    Json& summary = tables.summary;
    summary["seed"] = bundle.seed;
    summary["config_hash"] = bundle.config_hash;

    // --- assemble per-participant data -----------------------------------
    std::map<std::string, ParticipantData> data;
    {
        std::map<std::string, const Assignment*> assignment_of;
        for (const auto& a : bundle.assignments) assignment_of[a.participant_id] = &a;
        for (const auto& p : bundle.participants) {
            auto it = assignment_of.find(p.participant_id);
            if (it == assignment_of.end()) continue;
            ParticipantData d;
            d.participant = p;
            d.assignment = *it->second;
            d.completed = bundle.post_surveys.count(p.participant_id) > 0;
            data.emplace(p.participant_id, std::move(d));
        }
    }
    for (const auto& e : bundle.events) {
        auto it = data.find(e.participant_id);
        if (it != data.end()) it->second.events.push_back(e);
    }
    for (const auto& r : bundle.responses) {
        auto it = data.find(r.participant_id);
        if (it == data.end()) continue;
        if (r.kind == SurveyKind::Thermometer) {
            it->second.infeed["thermometer"].emplace_back(r.day, r.response.values.at(0));
        } else {
            it->second.infeed[to_string(r.positive)].emplace_back(r.day, r.response.values.at(0));
            it->second.infeed[to_string(r.negative)].emplace_back(r.day, r.response.values.at(1));
        }
    }

    // Views joined with scores. Posts missing from the score log are ads or
    // unscoreable content and are excluded.
    const int baseline_days = bundle.baseline_days;
    for (auto& [pid, d] : data) {
        for (const auto& e : d.events) {
            if (e.kind != EventKind::View || !e.post_id) continue;
            if (!e.visible_ms || *e.visible_ms < 1000) continue;
            auto it = bundle.scores.find(*e.post_id);
            if (it == bundle.scores.end()) continue;
            const AapaScore& score = it->second;
            d.total_views += 1;
            const int day = day_of(e.at);
            if (day > baseline_days) {
                d.views_intervention += 1;
                if (is_aapa(score)) d.aapa_views_intervention += 1;
            }
            if (score.is_political) {
                d.political_views += 1;
                for (int f = 0; f < kFactorCount; ++f) {
                    if (score.factors[f]) d.factor_views[f] += 1;
                }
            }
        }
    }

    const std::array<Experiment, 2> experiments = {Experiment::Reduce, Experiment::Increase};

    std::ostringstream reg_csv;
    reg_csv << "experiment,timepoint,outcome,term,estimate,se,ci_low,ci_high,p,p_adjusted,"
               "n_obs,n_groups\n";
    std::ostringstream adj_csv;
    adj_csv << "experiment,outcome,timepoint,tier,p_raw,p_adjusted\n";
    std::ostringstream ri_csv;
    ri_csv << "experiment,test,observed,p,n_draws,seed,dropped_covariates\n";
    std::ostringstream eng_csv;
    eng_csv << "experiment,metric,mean_control,mean_treatment,u,p\n";
    std::ostringstream exposure_csv;
    exposure_csv << "experiment,arm,day,participants,mean_views,mean_political_fraction,"
                    "mean_aapa_fraction_of_political,mean_aapa_score\n";
    std::ostringstream hte_csv;
    hte_csv << "experiment,outcome,moderator,interaction_estimate,ci_low,ci_high,p,p_adjusted\n";

    for (Experiment experiment : experiments) {
        if (options.only_experiment && *options.only_experiment != experiment) continue;
        const std::string exp_name = to_string(experiment);
        Json& exp_summary = summary["experiments"][exp_name];

        std::vector<const ParticipantData*> enrolled;
        for (const auto& [pid, d] : data) {
            if (d.assignment.experiment == experiment) enrolled.push_back(&d);
        }
        std::vector<const ParticipantData*> completers;
        for (const auto* d : enrolled) {
            if (d->completed) completers.push_back(d);
        }
        exp_summary["n_enrolled"] = enrolled.size();
        exp_summary["n_completed"] = completers.size();

        // --- outcome regressions ------------------------------------------
        std::vector<OutcomeFit> infeed_fits, post_fits;
        for (const char* outcome : kOutcomes) {
            // In-feed mixed model over intervention-period answers.
            OutcomeFit inf;
            inf.outcome = outcome;
            inf.infeed = true;
            {
                std::vector<stats::InFeedRow> rows;
                std::map<std::string, int> treat, platform;
                std::map<std::string, double> baseline;
                std::vector<std::pair<double, double>> donors; // (pre, baseline mean)
                std::map<std::string, double> baseline_means;
                for (const auto* d : completers) {
                    const auto it = d->infeed.find(outcome);
                    if (it == d->infeed.end()) continue;
                    std::vector<double> base_vals;
                    for (const auto& [day, v] : it->second) {
                        if (day <= baseline_days) base_vals.push_back(v);
                    }
                    if (!base_vals.empty()) {
                        const double m = mean_of(base_vals);
                        baseline_means[d->participant.participant_id] = m;
                        auto pre = d->participant.pre_survey.find(outcome);
                        if (pre != d->participant.pre_survey.end()) {
                            donors.emplace_back(pre->second, m);
                        }
                    }
                }
                for (const auto* d : completers) {
                    const std::string& pid = d->participant.participant_id;
                    const auto it = d->infeed.find(outcome);
                    if (it == d->infeed.end()) continue;
                    bool any_intervention = false;
                    for (const auto& [day, v] : it->second) {
                        if (day > baseline_days) any_intervention = true;
                    }
                    if (!any_intervention) continue;

                    double base;
                    auto bm = baseline_means.find(pid);
                    if (bm != baseline_means.end()) {
                        base = bm->second;
                    } else {
                        const double pre = d->participant.pre_survey.count(outcome)
                                               ? d->participant.pre_survey.at(outcome)
                                               : 0.0;
                        try {
                            base = stats::impute_baseline(pre, donors);
                        } catch (const Error&) {
                            base = pre; // degenerate bundle; fall back to the raw pre answer
                        }
                    }
                    treat[pid] = d->assignment.arm == Arm::Treatment ? 1 : 0;
                    platform[pid] =
                        d->participant.platform == Platform::CloudResearchLike ? 1 : 0;
                    baseline[pid] = base;
                    for (const auto& [day, v] : it->second) {
                        if (day > baseline_days) rows.push_back({pid, v});
                    }
                }
                try {
                    inf.fit = stats::lmm_ate(rows, treat, baseline, platform);
                } catch (const Error& err) {
                    inf.note = err.code;
                }
            }
            infeed_fits.push_back(inf);

            // Post-experiment OLS.
            OutcomeFit post;
            post.outcome = outcome;
            {
                std::vector<double> y, pre;
                std::vector<int> treat, platform;
                for (const auto* d : completers) {
                    const auto& answers = bundle.post_surveys.at(d->participant.participant_id);
                    auto ay = answers.find(outcome);
                    auto ap = d->participant.pre_survey.find(outcome);
                    if (ay == answers.end() || ap == d->participant.pre_survey.end()) continue;
                    y.push_back(ay->second);
                    pre.push_back(ap->second);
                    treat.push_back(d->assignment.arm == Arm::Treatment ? 1 : 0);
                    platform.push_back(
                        d->participant.platform == Platform::CloudResearchLike ? 1 : 0);
                }
                try {
                    post.fit = stats::ols_ate(y, treat, &pre, &platform);
                } catch (const Error& err) {
                    post.note = err.code;
                }
            }
            post_fits.push_back(post);
        }

        // --- engagement metrics -------------------------------------------
        struct EngagementSample {
            std::vector<double> control, treatment;
        };
        std::map<std::string, EngagementSample> engagement;
        const int intervention_days = bundle.total_days - baseline_days;
        for (const auto* d : completers) {
            std::vector<EngagementEvent> intervention_events;
            for (const auto& e : d->events) {
                if (day_of(e.at) > baseline_days) intervention_events.push_back(e);
            }
            auto bucket = [&](const std::string& m) -> std::vector<double>& {
                auto& s = engagement[m];
                return d->assignment.arm == Arm::Treatment ? s.treatment : s.control;
            };
            bucket("return_rate").push_back(return_rate(intervention_events, intervention_days));
            double minutes = 0;
            for (const auto& e : intervention_events) {
                if (e.kind == EventKind::View && e.visible_ms) minutes += double(*e.visible_ms);
            }
            bucket("time_spent_min_per_day").push_back(minutes / 60000.0 / intervention_days);
            try {
                const EngagementRates rates = engagement_rates(intervention_events);
                bucket("favorite_rate").push_back(rates.favorite_rate);
                bucket("repost_rate").push_back(rates.repost_rate);
                bucket("reply_rate").push_back(rates.reply_rate);
            } catch (const NoViews&) {
            }
        }
        std::map<std::string, double> engagement_p; // metric -> MW p (tier 3)
        for (const auto& [metric, sample] : engagement) {
            double u = kNaN, p = kNaN;
            if (!sample.control.empty() && !sample.treatment.empty()) {
                const auto mw = stats::mann_whitney_u(sample.treatment, sample.control);
                u = mw.u;
                p = mw.p_two_sided;
                engagement_p[metric] = p;
            }
            eng_csv << exp_name << ',' << metric << ',' << fmt(mean_of(sample.control)) << ','
                    << fmt(mean_of(sample.treatment)) << ',' << fmt(u) << ',' << fmt(p) << "\n";
        }

        // --- multiple-comparison tiers -------------------------------------
        std::map<std::string, double> primary, secondary, tertiary;
        auto treatment_p = [](const OutcomeFit& f) -> std::optional<double> {
            if (!f.fit || !f.fit->has_coef("treatment")) return std::nullopt;
            return f.fit->coef("treatment").p_value;
        };
        for (const auto& f : infeed_fits) {
            if (auto p = treatment_p(f)) {
                const std::string key = f.outcome + std::string(":infeed");
                if (f.outcome == "thermometer") primary[key] = *p;
                else secondary[key] = *p;
            }
        }
        for (const auto& f : post_fits) {
            if (auto p = treatment_p(f)) {
                const std::string key = f.outcome + std::string(":post");
                if (f.outcome == "thermometer") primary[key] = *p;
                else secondary[key] = *p;
            }
        }
        for (const auto& [metric, p] : engagement_p) tertiary["engagement:" + metric] = p;
        const std::map<std::string, double> adjusted =
            stats::adjust_outcome_tiers(primary, secondary, tertiary);
        for (const auto& [key, q] : adjusted) {
            std::string tier = primary.count(key)     ? "primary"
                               : secondary.count(key) ? "secondary"
                                                      : "tertiary";
            const double raw = primary.count(key)     ? primary.at(key)
                               : secondary.count(key) ? secondary.at(key)
                                                      : tertiary.at(key);
            const size_t colon = key.find(':');
            adj_csv << exp_name << ',' << key.substr(0, colon) << ',' << key.substr(colon + 1)
                    << ',' << tier << ',' << fmt(raw) << ',' << fmt(q) << "\n";
        }
        for (const auto& f : infeed_fits) append_fit_rows(reg_csv, exp_name, "infeed", f, adjusted);
        for (const auto& f : post_fits) append_fit_rows(reg_csv, exp_name, "post", f, adjusted);

        // --- randomization inference ---------------------------------------
        {
            auto covariate_matrix = [&](const std::vector<const ParticipantData*>& group) {
                // Columns: sorted pre-survey keys, then party and platform.
                std::vector<std::string> keys;
                if (!group.empty()) {
                    for (const auto& [k, v] : group.front()->participant.pre_survey)
                        keys.push_back(k);
                }
                Eigen::MatrixXd X(group.size(), keys.size() + 2);
                for (size_t i = 0; i < group.size(); ++i) {
                    const auto& p = group[i]->participant;
                    for (size_t j = 0; j < keys.size(); ++j) {
                        auto it = p.pre_survey.find(keys[j]);
                        X(i, j) = it != p.pre_survey.end() ? it->second : 0.0;
                    }
                    X(i, keys.size()) = p.party == Party::Republican ? 1.0 : 0.0;
                    X(i, keys.size() + 1) = p.platform == Platform::CloudResearchLike ? 1.0 : 0.0;
                }
                return X;
            };
            auto treatment_vector = [](const std::vector<const ParticipantData*>& group) {
                std::vector<int> t;
                for (const auto* d : group)
                    t.push_back(d->assignment.arm == Arm::Treatment ? 1 : 0);
                return t;
            };
            auto emit = [&](const std::string& name, const std::function<stats::RITestResult()>& run) {
                try {
                    const stats::RITestResult r = run();
                    ri_csv << exp_name << ',' << name << ',' << fmt(r.observed) << ',' << fmt(r.p)
                           << ',' << r.n_draws << ',' << r.seed << ','
                           << r.dropped_covariates.size() << "\n";
                    exp_summary["ri"][name] = r.p;
                } catch (const Error& err) {
                    ri_csv << exp_name << ',' << name << ",NA,NA,NA,NA," << err.code << "\n";
                }
            };
            if (!completers.empty()) {
                emit("covariate_balance", [&] {
                    return stats::ri_covariate_balance(
                        covariate_matrix(completers), treatment_vector(completers),
                        stats::bernoulli_randomizer(completers.size()), options.ri_draws,
                        options.ri_seed);
                });
            }
            if (!enrolled.empty()) {
                std::vector<int> attrition;
                for (const auto* d : enrolled) attrition.push_back(d->completed ? 0 : 1);
                emit("attrition_rate", [&] {
                    return stats::ri_attrition_rate(attrition, treatment_vector(enrolled),
                                                    stats::bernoulli_randomizer(enrolled.size()),
                                                    options.ri_draws, options.ri_seed);
                });
                emit("attrition_pattern", [&] {
                    return stats::ri_attrition_pattern(
                        covariate_matrix(enrolled), treatment_vector(enrolled), attrition,
                        stats::bernoulli_randomizer(enrolled.size()), options.ri_draws,
                        options.ri_seed);
                });
            }
        }

        // --- exposure by day -------------------------------------------------
        {
            struct DayAgg {
                std::vector<double> views, political, aapa, score;
            };
            std::map<std::pair<Arm, int>, DayAgg> day_agg;
            for (const auto* d : completers) {
                std::vector<std::pair<int, std::optional<AapaScore>>> rows;
                for (const auto& e : d->events) {
                    if (e.kind != EventKind::View || !e.post_id) continue;
                    if (!e.visible_ms || *e.visible_ms < 1000) continue;
                    auto it = bundle.scores.find(*e.post_id);
                    if (it == bundle.scores.end()) continue;
                    rows.emplace_back(day_of(e.at), it->second);
                }
                for (const auto& day : exposure_metrics(rows)) {
                    DayAgg& agg = day_agg[{d->assignment.arm, day.day}];
                    agg.views.push_back(day.views);
                    agg.political.push_back(day.political_fraction);
                    if (day.aapa_fraction_of_political)
                        agg.aapa.push_back(*day.aapa_fraction_of_political);
                    if (day.mean_aapa_score) agg.score.push_back(*day.mean_aapa_score);
                }
            }
            for (const auto& [key, agg] : day_agg) {
                exposure_csv << exp_name << ',' << to_string(key.first) << ',' << key.second
                             << ',' << agg.views.size() << ',' << fmt(mean_of(agg.views)) << ','
                             << fmt(mean_of(agg.political)) << ',' << fmt(mean_of(agg.aapa))
                             << ',' << fmt(mean_of(agg.score)) << "\n";
            }
        }

        // Intervention-period AAPA view share by arm.
        {
            std::vector<double> share_t, share_c;
            for (const auto* d : completers) {
                if (d->views_intervention == 0) continue;
                const double share =
                    double(d->aapa_views_intervention) / double(d->views_intervention);
                (d->assignment.arm == Arm::Treatment ? share_t : share_c).push_back(share);
            }
            const double mean_t = mean_of(share_t), mean_c = mean_of(share_c);
            exp_summary["aapa_view_share"]["treatment"] = mean_t;
            exp_summary["aapa_view_share"]["control"] = mean_c;
            exp_summary["aapa_view_share"]["relative_change"] =
                mean_c != 0 && !std::isnan(mean_c) && !std::isnan(mean_t)
                    ? (mean_t - mean_c) / mean_c
                    : kNaN;
        }

        // --- heterogeneous treatment effects --------------------------------
        {
            std::vector<double> y, pre, party, platform_mod;
            std::vector<int> treat, platform_cov;
            for (const auto* d : completers) {
                const auto& answers = bundle.post_surveys.at(d->participant.participant_id);
                auto ay = answers.find("thermometer");
                auto ap = d->participant.pre_survey.find("thermometer");
                if (ay == answers.end() || ap == d->participant.pre_survey.end()) continue;
                y.push_back(ay->second);
                pre.push_back(ap->second);
                treat.push_back(d->assignment.arm == Arm::Treatment ? 1 : 0);
                party.push_back(d->participant.party == Party::Republican ? 1.0 : 0.0);
                platform_mod.push_back(
                    d->participant.platform == Platform::CloudResearchLike ? 1.0 : 0.0);
                platform_cov.push_back(
                    d->participant.platform == Platform::CloudResearchLike ? 1 : 0);
            }
            struct HteRow {
                std::string moderator;
                std::optional<stats::Coefficient> interaction;
                std::string note;
            };
            std::vector<HteRow> rows;
            std::vector<double> pvals;
            auto run_hte = [&](const std::string& name, const std::vector<double>& mod,
                               bool platform_as_covariate) {
                HteRow row;
                row.moderator = name;
                try {
                    const auto fit = stats::hte(y, treat, mod, &pre,
                                                platform_as_covariate ? &platform_cov : nullptr);
                    row.interaction = fit.coef("treatment:moderator");
                    pvals.push_back(row.interaction->p_value);
                } catch (const Error& err) {
                    row.note = err.code;
                }
                rows.push_back(row);
            };
            run_hte("party", party, true);
            run_hte("platform", platform_mod, false);
            const std::vector<double> adj =
                pvals.empty() ? std::vector<double>{} : stats::adjust_hte(pvals);
            size_t adj_idx = 0;
            for (const auto& row : rows) {
                hte_csv << exp_name << ",thermometer:post," << row.moderator << ',';
                if (row.interaction) {
                    hte_csv << fmt(row.interaction->estimate) << ','
                            << fmt(row.interaction->ci_low) << ','
                            << fmt(row.interaction->ci_high) << ','
                            << fmt(row.interaction->p_value) << ',' << fmt(adj[adj_idx++]);
                } else {
                    hte_csv << "NA,NA,NA,NA," << row.note;
                }
                hte_csv << "\n";
            }
        }

        // Headline treatment effects into the summary.
        auto summarize_fit = [&](const OutcomeFit& f, const char* name) {
            if (!f.fit || !f.fit->has_coef("treatment")) return;
            const auto& c = f.fit->coef("treatment");
            exp_summary[name][f.outcome] = Json{{"estimate", c.estimate},
                                                {"ci_low", c.ci_low},
                                                {"ci_high", c.ci_high},
                                                {"p", c.p_value},
                                                {"n_obs", f.fit->n_obs},
                                                {"n_groups", f.fit->n_groups}};
        };
        for (const auto& f : infeed_fits) summarize_fit(f, "infeed_ate");
        for (const auto& f : post_fits) summarize_fit(f, "post_ate");
    }

    // --- pooled analyses ------------------------------------------------------
    {
        // Factor contribution: both experiments pooled, everyone completed.
        std::vector<double> post_ratings, pre_ratings;
        std::vector<std::array<double, kFactorCount>> fractions;
        for (const auto& [pid, d] : data) {
            if (!d.completed || d.political_views == 0) continue;
            const auto& answers = bundle.post_surveys.at(pid);
            auto ay = answers.find("thermometer");
            auto ap = d.participant.pre_survey.find("thermometer");
            if (ay == answers.end() || ap == d.participant.pre_survey.end()) continue;
            post_ratings.push_back(ay->second);
            pre_ratings.push_back(ap->second);
            std::array<double, kFactorCount> frac{};
            for (int f = 0; f < kFactorCount; ++f) {
                frac[f] = double(d.factor_views[f]) / double(d.political_views);
            }
            fractions.push_back(frac);
        }
        std::ostringstream fc_csv;
        fc_csv << "factor,estimate,se,ci_low,ci_high,p,n_obs\n";
        if (post_ratings.size() >= 4) {
            const auto fits = stats::factor_contribution(post_ratings, pre_ratings, fractions);
            for (int f = 0; f < kFactorCount; ++f) {
                fc_csv << kFactorNames[f] << ',';
                if (fits[f]) {
                    const auto& c =
                        fits[f]->coef(std::string("fraction_") + kFactorNames[f]);
                    fc_csv << fmt(c.estimate) << ',' << fmt(c.se) << ',' << fmt(c.ci_low) << ','
                           << fmt(c.ci_high) << ',' << fmt(c.p_value) << ',' << fits[f]->n_obs;
                } else {
                    fc_csv << "NA,NA,NA,NA,NA,NA";
                }
                fc_csv << "\n";
            }
        }
        tables.csv["factor_contribution.csv"] = fc_csv.str();
    }
    {
        // Factor co-occurrence over the political posts that were scored.
        std::vector<AapaScore> political;
        for (const auto& [post_id, score] : bundle.scores) {
            if (score.is_political) political.push_back(score);
        }
        std::ostringstream cc_csv;
        cc_csv << "factor";
        for (int f = 0; f < kFactorCount; ++f) cc_csv << ',' << kFactorNames[f];
        cc_csv << "\n";
        if (political.size() >= 2) {
            const Eigen::MatrixXd corr = stats::factor_cooccurrence(political);
            for (int a = 0; a < kFactorCount; ++a) {
                cc_csv << kFactorNames[a];
                for (int b = 0; b < kFactorCount; ++b) cc_csv << ',' << fmt(corr(a, b));
                cc_csv << "\n";
            }
        }
        tables.csv["factor_correlation.csv"] = cc_csv.str();
    }
    {
        // Survey answer volume, paper-style bookkeeping.
        std::map<std::string, std::map<std::string, int>> counts; // experiment -> kind -> n
        for (const auto& r : bundle.responses) {
            auto it = data.find(r.participant_id);
            if (it == data.end()) continue;
            counts[to_string(it->second.assignment.experiment)][to_string(r.kind)] += 1;
        }
        for (const auto& [exp, kinds] : counts) {
            for (const auto& [kind, n] : kinds) summary["survey_answers"][exp][kind] = n;
        }
    }
    if (bundle.has_ground_truth) {
        summary["ground_truth"] = Json{
            {"ate_thermometer_reduce", bundle.ground_truth.ate_thermometer_reduce},
            {"ate_thermometer_increase", bundle.ground_truth.ate_thermometer_increase},
            {"ate_negative_emotion_reduce", bundle.ground_truth.ate_negative_emotion_reduce},
            {"ate_negative_emotion_increase", bundle.ground_truth.ate_negative_emotion_increase},
            {"dose_coefficient", bundle.ground_truth.dose_coefficient}};
    }

    tables.csv["regressions.csv"] = reg_csv.str();
    tables.csv["adjusted_pvalues.csv"] = adj_csv.str();
    tables.csv["ri_tests.csv"] = ri_csv.str();
    tables.csv["engagement.csv"] = eng_csv.str();
    tables.csv["exposure_daily.csv"] = exposure_csv.str();
    tables.csv["hte.csv"] = hte_csv.str();
    return tables;
}

void write_tables(const AnalysisTables& tables, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, content] : tables.csv) {
        std::ofstream out(out_dir + "/" + name, std::ios::trunc);
        if (!out) throw Error("StoreWrite", out_dir + "/" + name);
        out << content;
    }
    std::ofstream out(out_dir + "/summary.json", std::ios::trunc);
    out << tables.summary.dump(2) << "\n";
}

} // namespace feedlab
