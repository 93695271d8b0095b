// Command-line entry point: data generation, human-reward training, the
// LLM-driven reward search, and standalone evaluation, all driven by one
// JSON config. Every artifact a command writes is reproducible from
// (config, seed); manifests carry the config digest but no timestamps.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trisk/errors.hpp"
#include "trisk/eval.hpp"
#include "trisk/evolve.hpp"
#include "trisk/llm.hpp"
#include "trisk/policy.hpp"
#include "trisk/prompts.hpp"
#include "trisk/reward_dsl.hpp"
#include "trisk/rewards.hpp"
#include "trisk/run_config.hpp"
#include "trisk/synthdata.hpp"

namespace fs = std::filesystem;

namespace {

std::string error_kind(const trisk::Error& e) {
    if (dynamic_cast<const trisk::ConfigError*>(&e)) return "config";
    if (dynamic_cast<const trisk::DslParseError*>(&e)) return "dsl_parse";
    if (dynamic_cast<const trisk::DslEvalError*>(&e)) return "dsl_eval";
    if (dynamic_cast<const trisk::ExtractionError*>(&e)) return "extraction";
    if (dynamic_cast<const trisk::EpisodeError*>(&e)) return "episode";
    if (dynamic_cast<const trisk::TrainError*>(&e)) return "train";
    if (dynamic_cast<const trisk::EvalError*>(&e)) return "eval";
    if (dynamic_cast<const trisk::ClientError*>(&e)) return "client";
    if (dynamic_cast<const trisk::PromptError*>(&e)) return "prompt";
    if (dynamic_cast<const trisk::IoError*>(&e)) return "io";
    return "error";
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw trisk::IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

void write_text_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw trisk::IoError("cannot write " + path.string());
    out << text;
}

void print_report(const trisk::EvalReport& report) {
    for (std::size_t i = 0; i < report.levels.size(); ++i) {
        const trisk::LevelResult& lv = report.levels[i];
        std::printf("theta %.2f: agent precision %.4f (recall %.4f), baseline precision %.4f\n",
                    lv.theta, lv.precision, lv.achieved_recall, report.baseline_precisions[i]);
    }
    std::printf("stage GMV at theta %.2f: tp %.2f/%.2f, blocked %.2f/%.2f\n",
                report.stage.reference_theta, report.stage.tp_gmv_step0,
                report.stage.tp_gmv_step1, report.stage.blocked_gmv_step0,
                report.stage.blocked_gmv_step1);
}

trisk::Dataset load_split(const fs::path& dir, const std::string& name) {
    const fs::path path = dir / name;
    if (!fs::exists(path))
        throw trisk::IoError("missing dataset " + path.string() + "; run gen-data first");
    return trisk::load_csv(path);
}

int cmd_gen_data(const trisk::RunConfig& cfg, const fs::path& out_dir) {
    const trisk::GeneratedSplits splits = trisk::generate_splits(cfg);
    fs::create_directories(out_dir);
    trisk::save_csv(splits.train, out_dir / "train.csv");
    trisk::save_csv(splits.test_short, out_dir / "test_short.csv");
    trisk::save_csv(splits.test_long, out_dir / "test_long.csv");

    nlohmann::json meta;
    for (const auto& [name, d] : {std::pair<const char*, const trisk::Dataset&>{"train", splits.train},
                                  {"test_short", splits.test_short},
                                  {"test_long", splits.test_long}}) {
        meta[name] = {{"rows", d.records.size()},
                      {"day_min", d.meta.day_min},
                      {"day_max", d.meta.day_max},
                      {"seed", d.meta.seed},
                      {"config_digest", d.meta.config_digest}};
    }
    write_json_file(out_dir / "gen_meta.json", meta);
    trisk::write_manifest(out_dir, "gen-data", cfg);

    for (const auto& [name, d] : {std::pair<const char*, const trisk::Dataset&>{"train", splits.train},
                                  {"test_short", splits.test_short},
                                  {"test_long", splits.test_long}})
        std::printf("wrote %s (%zu rows, days %d..%d)\n",
                    (out_dir / (std::string(name) + ".csv")).string().c_str(), d.records.size(),
                    d.meta.day_min, d.meta.day_max);
    return 0;
}

int cmd_train_human(const trisk::RunConfig& cfg, const fs::path& data_dir,
                    const fs::path& out_dir) {
    const trisk::Dataset train = load_split(data_dir, "train.csv");
    const trisk::Dataset test = load_split(data_dir, "test_short.csv");

    const trisk::TrainResult result = trisk::train_agent(
        train, trisk::make_precision_reward_fn(cfg.reward), cfg.train, cfg.issuer, cfg.layout);
    const trisk::EvalReport report =
        trisk::evaluate_policy(result.params, test, cfg.recall_levels, cfg.layout, cfg.issuer);

    fs::create_directories(out_dir);
    trisk::save_policy(result.params, out_dir / "policy.bin");
    write_json_file(out_dir / "eval_report.json", report);
    nlohmann::json stats = {{"episode_mean_reward", result.stats.episode_mean_reward},
                            {"initial_total_reward", result.stats.initial_total_reward},
                            {"final_total_reward", result.stats.final_total_reward},
                            {"final_blocks_step0", result.stats.final_blocks_step0},
                            {"final_blocks_step1", result.stats.final_blocks_step1}};
    write_json_file(out_dir / "train_stats.json", stats);
    trisk::write_manifest(out_dir, "train-human", cfg);

    std::printf("trained %d episodes, reward %.4f -> %.4f\n", cfg.train.n_episodes,
                result.stats.initial_total_reward, result.stats.final_total_reward);
    print_report(report);
    return 0;
}

int cmd_evolve(const trisk::RunConfig& cfg, const fs::path& data_dir, const fs::path& run_dir) {
    const trisk::Dataset train = load_split(data_dir, "train.csv");
    const trisk::Dataset test = load_split(data_dir, "test_short.csv");

    std::unique_ptr<trisk::Client> client;
    if (cfg.llm == "mock") {
        if (cfg.fixture_path.empty())
            throw trisk::ConfigError("fixture_path: required when llm = \"mock\"");
        client = trisk::mock_from_fixture(cfg.fixture_path);
    } else {
        client = trisk::make_client_from_env();
    }

    trisk::write_manifest(run_dir, "evolve", cfg);
    const trisk::TemplateStore store = trisk::TemplateStore::from_env();
    const trisk::EvolutionState state =
        trisk::run_evolution(cfg.evolve, train, test, *client, store, run_dir.string());

    for (const trisk::IterationSummary& s : state.history)
        std::printf("iteration %d: %s%s, temperature -> %.2f\n", s.iteration,
                    trisk::to_string(s.branch).c_str(),
                    s.best_score ? (", best score " + std::to_string(*s.best_score)).c_str() : "",
                    s.temperature_after);
    if (state.f_best)
        std::printf("best candidate: iteration %d sample %d, success score %.6f\n",
                    state.f_best->iteration, state.f_best->sample, state.f_best->success_score);
    else
        std::printf("no usable reward function found\n");
    return 0;
}

int cmd_evaluate(const trisk::RunConfig& cfg, const fs::path& policy_path,
                 const fs::path& data_csv, const fs::path& out_dir) {
    const trisk::PolicyParams params = trisk::load_policy(policy_path);
    const trisk::Dataset data = trisk::load_csv(data_csv);
    const trisk::EvalReport report =
        trisk::evaluate_policy(params, data, cfg.recall_levels, cfg.layout, cfg.issuer);

    write_json_file(out_dir / "eval_report.json", report);
    trisk::write_manifest(out_dir, "evaluate", cfg);
    print_report(report);
    return 0;
}

int cmd_longterm(const trisk::RunConfig& cfg, const fs::path& policy_path,
                 const fs::path& data_csv, int window_days, const fs::path& out_dir) {
    const trisk::PolicyParams params = trisk::load_policy(policy_path);
    const trisk::Dataset data = trisk::load_csv(data_csv);
    const std::vector<trisk::WindowReport> windows =
        trisk::longterm_report(params, data, window_days, cfg.recall_levels, cfg.layout, cfg.issuer);

    write_text_file(out_dir / "longterm.csv", trisk::longterm_csv(windows));
    nlohmann::json series = nlohmann::json::array();
    for (const trisk::WindowReport& w : windows)
        series.push_back({{"window_start", w.window_start}, {"report", w.report}});
    write_json_file(out_dir / "longterm.json", series);
    trisk::write_manifest(out_dir, "longterm", cfg);

    for (const trisk::WindowReport& w : windows) {
        const std::size_t ref = (w.report.levels.size() - 1) / 2;
        std::printf("window %d: agent %.4f vs baseline %.4f at theta %.2f\n", w.window_start,
                    w.report.levels[ref].precision, w.report.baseline_precisions[ref],
                    w.report.levels[ref].theta);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trisk: two-stage transaction-risk RL pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    auto* opt_config = app.add_option("--config", config_path, "JSON config file");
    auto* opt_seed = app.add_option("--seed", seed, "master seed override");
    auto* opt_out = app.add_option("--out", out_dir, "output directory");

    CLI::App* gen = app.add_subcommand("gen-data", "generate the train/test splits");
    CLI::App* train = app.add_subcommand("train-human", "train with the human-crafted reward");
    CLI::App* evolve = app.add_subcommand("evolve", "run the LLM reward search");
    CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a saved policy");
    CLI::App* longterm = app.add_subcommand("longterm", "windowed long-term evaluation");
    for (CLI::App* sub : {gen, train, evolve, evaluate, longterm}) sub->fallthrough();

    std::string data_dir_flag;
    train->add_option("--data", data_dir_flag, "dataset directory");
    evolve->add_option("--data", data_dir_flag, "dataset directory");

    std::string llm_flag, fixture_flag;
    int iters_flag = 0;
    evolve->add_option("--llm", llm_flag, "LLM client: mock or live");
    evolve->add_option("--fixture", fixture_flag, "mock fixture file");
    auto* opt_iters = evolve->add_option("--iters", iters_flag, "iteration count override");

    std::string policy_path, data_csv;
    evaluate->add_option("--policy", policy_path, "serialized policy file")->required();
    evaluate->add_option("--data", data_csv, "dataset CSV");
    longterm->add_option("--policy", policy_path, "serialized policy file")->required();
    longterm->add_option("--data", data_csv, "dataset CSV");
    int window_flag = 0;
    auto* opt_window = longterm->add_option("--window", window_flag, "window length in days");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        trisk::RunConfig cfg;
        if (!config_path.empty()) cfg = trisk::load_run_config(config_path);
        if (opt_seed->count() > 0) cfg.apply_seed(seed);
        if (evolve->parsed()) {
            if (!llm_flag.empty()) cfg.llm = llm_flag;
            if (!fixture_flag.empty()) cfg.fixture_path = fixture_flag;
            if (opt_iters->count() > 0) cfg.evolve.n_iter = iters_flag;
        }
        cfg.validate();
        (void)opt_config;

        const fs::path data_dir = data_dir_flag.empty() ? fs::path(cfg.data_dir)
                                                        : fs::path(data_dir_flag);
        auto out_or = [&](const char* fallback) {
            return out_dir.empty() ? fs::path(fallback) : fs::path(out_dir);
        };
        if (opt_out->count() == 0 && gen->parsed()) out_dir = cfg.data_dir;

        if (gen->parsed()) return cmd_gen_data(cfg, out_or(cfg.data_dir.c_str()));
        if (train->parsed()) return cmd_train_human(cfg, data_dir, out_or("out/train_human"));
        if (evolve->parsed()) return cmd_evolve(cfg, data_dir, out_or("out/evolve"));
        if (evaluate->parsed()) {
            const fs::path csv =
                data_csv.empty() ? data_dir / "test_short.csv" : fs::path(data_csv);
            return cmd_evaluate(cfg, policy_path, csv, out_or("out/evaluate"));
        }
        if (longterm->parsed()) {
            const fs::path csv =
                data_csv.empty() ? data_dir / "test_long.csv" : fs::path(data_csv);
            const int window =
                opt_window->count() > 0 ? window_flag : cfg.longterm_window_days;
            return cmd_longterm(cfg, policy_path, csv, window, out_or("out/longterm"));
        }
        return 0;
    } catch (const trisk::Error& e) {
        std::cerr << nlohmann::json{{"error", error_kind(e)}, {"message", e.what()}}.dump()
                  << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
        return 1;
    }
}
