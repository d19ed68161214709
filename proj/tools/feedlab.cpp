#include <cstdio>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "feedlab/analyze.hpp"
#include "feedlab/errors.hpp"
#include "feedlab/report.hpp"
#include "feedlab/scoring.hpp"
#include "feedlab/service.hpp"
#include "feedlab/sim.hpp"
#include "feedlab/stats/power.hpp"
#include "feedlab/store.hpp"

using namespace feedlab;

namespace {

std::shared_ptr<ScoringBackend> make_backend() {
    if (auto remote = RemoteInferenceClient::from_env()) {
        return std::shared_ptr<ScoringBackend>(std::move(remote));
    }
    return std::make_shared<DeterministicLexiconOracle>();
}

int cmd_screen(const std::string& posts_path) {
    std::vector<Post> posts;
    for (const auto& j : read_jsonl(posts_path)) posts.push_back(j.get<Post>());
    auto backend = make_backend();
    const double fraction = political_fraction(posts, *backend);
    const bool qualified = fraction >= kScreeningThreshold;
    std::printf("qualified: %s (%.3f)\n", qualified ? "true" : "false", fraction);
    return 0;
}

int cmd_simulate(const std::string& config_path, std::optional<uint64_t> seed,
                 const std::string& out_dir) {
    sim::SimConfig config;
    if (!config_path.empty()) config = sim::load_sim_config(config_path);
    if (seed) {
        config.master_seed = *seed;
        config.study.master_seed = *seed;
    }
    const sim::RunArtifacts artifacts = sim::run_study(config);
    sim::write_bundle(artifacts, out_dir);
    std::printf("bundle: %s\n", out_dir.c_str());
    std::printf("participants: %zu enrolled, %zu completed\n", artifacts.participants.size(),
                artifacts.completed.size());
    std::printf("events: %zu, survey answers: %zu, scored posts: %zu\n", artifacts.events.size(),
                artifacts.responses.size(), artifacts.scores.size());
    std::printf("seed: %llu, config_hash: %llu\n",
                (unsigned long long)config.master_seed,
                (unsigned long long)sim::config_hash(config));
    return 0;
}

int cmd_analyze(const std::string& bundle_dir, const std::string& experiment,
                std::string out_dir, int ri_draws) {
    const sim::Bundle bundle = sim::read_bundle(bundle_dir);
    AnalyzeOptions options;
    options.ri_draws = ri_draws;
    if (experiment == "reduce") options.only_experiment = Experiment::Reduce;
    else if (experiment == "increase") options.only_experiment = Experiment::Increase;
    const AnalysisTables tables = analyze_bundle(bundle, options);
    if (out_dir.empty()) out_dir = bundle_dir + "/analysis";
    write_tables(tables, out_dir);
    std::printf("analysis: %s\n", out_dir.c_str());
    if (tables.summary.contains("experiments")) {
        for (const auto& [name, exp] : tables.summary["experiments"].items()) {
            if (exp.contains("post_ate") && exp["post_ate"].contains("thermometer")) {
                const auto& t = exp["post_ate"]["thermometer"];
                std::printf("%s post thermometer ATE: %s [%s, %s]\n", name.c_str(),
                            format_double(t.value("estimate", 0.0)).c_str(),
                            format_double(t.value("ci_low", 0.0)).c_str(),
                            format_double(t.value("ci_high", 0.0)).c_str());
            }
        }
    }
    return 0;
}

int cmd_power(double effect, int n, int sims, double alpha, uint64_t seed, int obs,
              double sigma_u, double sigma_eps) {
    stats::PowerParams params;
    params.obs_per_participant = obs;
    params.sigma_u = sigma_u;
    params.sigma_eps = sigma_eps;
    const double power = stats::power_simulation(effect, n, params, sims, alpha, seed);
    std::printf("power: %.4f (effect=%g, n=%d, sims=%d, alpha=%g)\n", power, effect, n, sims,
                alpha);
    return 0;
}

int cmd_serve(const std::string& addr, const std::string& store_dir, uint64_t seed) {
    ServiceConfig config;
    config.store_dir = store_dir;
    config.master_seed = seed;
    const size_t colon = addr.rfind(':');
    if (colon == std::string::npos) throw Error("BadAddress", addr);
    const std::string host = addr.substr(0, colon);
    const int port = std::stoi(addr.substr(colon + 1));
    FeedlabService service(config, make_backend());
    std::printf("listening on %s:%d, store: %s\n", host.c_str(), port, store_dir.c_str());
    service.serve(host, port);
    return 0;
}

int cmd_report(const std::string& bundle_dir, const std::string& format, std::string out_dir) {
    const sim::Bundle bundle = sim::read_bundle(bundle_dir);
    const AnalysisTables tables = analyze_bundle(bundle);
    if (out_dir.empty()) out_dir = bundle_dir + "/report";
    write_report(tables, out_dir, format);
    std::printf("report: %s\n", out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feedlab: feed reranking field-experiment platform"};
    app.require_subcommand(1);

    auto* screen = app.add_subcommand("screen", "political-content screening for a post log");
    std::string screen_posts;
    screen->add_option("--posts", screen_posts, "posts JSONL file")->required();

    auto* simulate = app.add_subcommand("simulate", "run a synthetic 10-day study");
    std::string sim_config, sim_out = "run";
    std::optional<uint64_t> sim_seed;
    simulate->add_option("--config", sim_config, "sim config TOML");
    simulate->add_option("--seed", sim_seed, "master seed override");
    simulate->add_option("--out", sim_out, "output bundle directory")->required();

    auto* analyze = app.add_subcommand("analyze", "estimate treatment effects from a bundle");
    std::string an_bundle, an_experiment, an_out;
    int an_ri_draws = 2000;
    analyze->add_option("--bundle", an_bundle, "bundle directory")->required();
    analyze->add_option("--experiment", an_experiment, "reduce|increase (default both)");
    analyze->add_option("--out", an_out, "output directory (default <bundle>/analysis)");
    analyze->add_option("--ri-draws", an_ri_draws, "randomization-inference draws");

    auto* power = app.add_subcommand("power", "simulation-based power analysis");
    double pw_effect = 2.0, pw_alpha = 0.05, pw_sigma_u = 6.5, pw_sigma_eps = 10.0;
    int pw_n = 600, pw_sims = 1000, pw_obs = 10;
    uint64_t pw_seed = 0;
    power->add_option("--effect", pw_effect, "true effect size");
    power->add_option("--n", pw_n, "participants");
    power->add_option("--sims", pw_sims, "simulation count");
    power->add_option("--alpha", pw_alpha, "test level");
    power->add_option("--seed", pw_seed, "seed");
    power->add_option("--obs", pw_obs, "responses per participant");
    power->add_option("--sigma-u", pw_sigma_u, "participant intercept SD");
    power->add_option("--sigma-eps", pw_sigma_eps, "residual SD");

    auto* serve = app.add_subcommand("serve", "run the rerank/event HTTP service");
    std::string sv_addr = "127.0.0.1:8080", sv_store = "store";
    uint64_t sv_seed = 42;
    serve->add_option("--addr", sv_addr, "host:port");
    serve->add_option("--store", sv_store, "persistent store directory");
    serve->add_option("--seed", sv_seed, "master seed");

    auto* report = app.add_subcommand("report", "render tables and figures from a bundle");
    std::string rp_bundle, rp_format = "md", rp_out;
    report->add_option("--bundle", rp_bundle, "bundle directory")->required();
    report->add_option("--format", rp_format, "csv|md");
    report->add_option("--out", rp_out, "output directory (default <bundle>/report)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (screen->parsed()) return cmd_screen(screen_posts);
        if (simulate->parsed()) return cmd_simulate(sim_config, sim_seed, sim_out);
        if (analyze->parsed()) return cmd_analyze(an_bundle, an_experiment, an_out, an_ri_draws);
        if (power->parsed())
            return cmd_power(pw_effect, pw_n, pw_sims, pw_alpha, pw_seed, pw_obs, pw_sigma_u,
                             pw_sigma_eps);
        if (serve->parsed()) return cmd_serve(sv_addr, sv_store, sv_seed);
        if (report->parsed()) return cmd_report(rp_bundle, rp_format, rp_out);
    } catch (const Error& e) {
        std::cerr << Json{{"error", e.code}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << Json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
