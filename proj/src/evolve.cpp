#include "trisk/evolve.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <future>

#include "trisk/errors.hpp"
#include "trisk/random.hpp"
#include "trisk/reward_dsl.hpp"

namespace fs = std::filesystem;

namespace trisk {

namespace {

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("cannot write " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    write_text(path, j.dump(2) + "\n");
}

std::string join_violations(const dsl::ValidationReport& report) {
    std::string out;
    for (const dsl::Violation& v : report.violations) {
        if (!out.empty()) out += "; ";
        out += v.code + ": " + v.message;
    }
    return out;
}

std::vector<std::string> tail(const std::vector<std::string>& v, std::size_t n) {
    if (v.size() <= n) return v;
    return {v.end() - static_cast<std::ptrdiff_t>(n), v.end()};
}

MetricFeedback make_feedback(const CandidateRecord& rec, const EvolveConfig& cfg) {
    MetricFeedback fb;
    fb.episodes = cfg.n_episodes;
    fb.blocks_step0 = rec.train_stats.final_blocks_step0;
    fb.blocks_step1 = rec.train_stats.final_blocks_step1;
    fb.initial_reward = rec.train_stats.initial_total_reward;
    fb.final_reward = rec.train_stats.final_total_reward;
    fb.recall_levels = cfg.recall_levels;
    for (const LevelResult& lv : rec.eval_report.levels) {
        fb.reached_recall.push_back(lv.achieved_recall);
        fb.best_precision.push_back(lv.precision);
    }
    fb.baseline_precision = rec.eval_report.baseline_precisions;
    fb.bad_gmv_step0 = rec.eval_report.stage.tp_gmv_step0;
    fb.bad_gmv_step1 = rec.eval_report.stage.tp_gmv_step1;
    fb.total_gmv_step0 = rec.eval_report.stage.blocked_gmv_step0;
    fb.total_gmv_step1 = rec.eval_report.stage.blocked_gmv_step1;
    return fb;
}

std::string failure_entry(const CandidateRecord& rec) {
    std::string message;
    switch (rec.status) {
        case CandidateRecord::Status::ValidationFailed:
            message = rec.validation_error;
            break;
        case CandidateRecord::Status::TrainError:
            message = "training failed: " + rec.train_error;
            break;
        case CandidateRecord::Status::EvalError:
            message = "evaluation failed: " + rec.eval_error;
            break;
        case CandidateRecord::Status::Complete:
            message = "unexpected: candidate completed";
            break;
    }
    if (rec.source.empty()) return "design (no valid program extracted)\nfailure: " + message;
    return "design:\n```\n" + rec.source + "```\nfailure: " + message;
}

nlohmann::json summary_to_json(const IterationSummary& s) {
    nlohmann::json j;
    j["iteration"] = s.iteration;
    j["branch"] = to_string(s.branch);
    j["best_score"] = s.best_score ? nlohmann::json(*s.best_score) : nlohmann::json(nullptr);
    j["f_best_score_after"] =
        s.f_best_score_after ? nlohmann::json(*s.f_best_score_after) : nlohmann::json(nullptr);
    j["temperature_after"] = s.temperature_after;
    j["llm_calls_after"] = s.llm_calls_after;
    return j;
}

IterationBranch branch_from_string(const std::string& s) {
    if (s == "better_found") return IterationBranch::BetterFound;
    if (s == "suboptimal_found") return IterationBranch::SuboptimalFound;
    if (s == "all_failed") return IterationBranch::AllFailed;
    throw ConfigError("unknown iteration branch: " + s);
}

IterationSummary summary_from_json(const nlohmann::json& j) {
    IterationSummary s;
    s.iteration = j.at("iteration").get<int>();
    s.branch = branch_from_string(j.at("branch").get<std::string>());
    if (!j.at("best_score").is_null()) s.best_score = j.at("best_score").get<double>();
    if (!j.at("f_best_score_after").is_null())
        s.f_best_score_after = j.at("f_best_score_after").get<double>();
    s.temperature_after = j.at("temperature_after").get<double>();
    s.llm_calls_after = j.at("llm_calls_after").get<std::uint64_t>();
    return s;
}

nlohmann::json state_to_json(const EvolutionState& state) {
    nlohmann::json j;
    j["completed_iterations"] = state.completed_iterations;
    j["temperature"] = state.temperature;
    j["llm_calls"] = state.llm_calls;
    j["f_best"] = state.f_best ? nlohmann::json(*state.f_best) : nlohmann::json(nullptr);
    j["guidance"] = state.guidance;
    j["latest_feedback"] = state.latest_feedback;
    j["history"] = nlohmann::json::array();
    for (const IterationSummary& s : state.history) j["history"].push_back(summary_to_json(s));
    return j;
}

EvolutionState state_from_json(const nlohmann::json& j) {
    EvolutionState state;
    state.completed_iterations = j.at("completed_iterations").get<int>();
    state.temperature = j.at("temperature").get<double>();
    state.llm_calls = j.at("llm_calls").get<std::uint64_t>();
    if (!j.at("f_best").is_null()) state.f_best = j.at("f_best").get<CandidateRecord>();
    state.guidance = j.at("guidance").get<std::vector<std::string>>();
    state.latest_feedback = j.at("latest_feedback").get<std::string>();
    for (const auto& e : j.at("history")) state.history.push_back(summary_from_json(e));
    return state;
}

}  // namespace

void EvolveConfig::validate() const {
    if (n_iter < 1) throw ConfigError("n_iter: must be at least 1");
    if (n_samples < 1) throw ConfigError("n_samples: must be at least 1");
    if (n_episodes < 1) throw ConfigError("n_episodes: must be at least 1");
    if (max_resamples_per_slot < 1) throw ConfigError("max_resamples_per_slot: must be at least 1");
    if (max_tokens < 1) throw ConfigError("max_tokens: must be at least 1");
    if (recall_levels.empty()) throw ConfigError("recall_levels: must not be empty");
    for (std::size_t i = 0; i < recall_levels.size(); ++i) {
        if (!(recall_levels[i] > 0.0) || !(recall_levels[i] < 1.0))
            throw ConfigError("recall_levels: values must be in (0, 1)");
        if (i > 0 && recall_levels[i] <= recall_levels[i - 1])
            throw ConfigError("recall_levels: values must be strictly increasing");
    }
    if (!(temperature.t_min <= temperature.t_init) || !(temperature.t_init <= temperature.t_max))
        throw ConfigError("temperature: need t_min <= t_init <= t_max");
    if (!(temperature.t_step >= 0.0)) throw ConfigError("temperature: t_step must be non-negative");
    train.validate();
    issuer.validate();
}

std::string to_string(IterationBranch branch) {
    switch (branch) {
        case IterationBranch::BetterFound: return "better_found";
        case IterationBranch::SuboptimalFound: return "suboptimal_found";
        case IterationBranch::AllFailed: return "all_failed";
    }
    return "unknown";
}

std::string to_string(CandidateRecord::Status status) {
    switch (status) {
        case CandidateRecord::Status::ValidationFailed: return "validation_failed";
        case CandidateRecord::Status::TrainError: return "train_error";
        case CandidateRecord::Status::EvalError: return "eval_error";
        case CandidateRecord::Status::Complete: return "complete";
    }
    return "unknown";
}

double success_score(const EvalReport& report) {
    if (report.levels.empty() || report.levels.size() != report.baseline_precisions.size())
        throw EvalError("success score: incomplete report");
    double sum = 0.0;
    for (std::size_t i = 0; i < report.levels.size(); ++i)
        sum += report.levels[i].precision - report.baseline_precisions[i];
    double score = sum / static_cast<double>(report.levels.size());
    if (!(report.stage.tp_gmv_step0 > report.stage.tp_gmv_step1)) score -= 1.0;
    return score;
}

double update_temperature(double current, IterationBranch outcome, const TemperatureSchedule& ts) {
    double t = current;
    switch (outcome) {
        case IterationBranch::BetterFound: t = ts.t_init; break;
        case IterationBranch::SuboptimalFound: t = current + ts.t_step; break;
        case IterationBranch::AllFailed: t = current + 2.0 * ts.t_step; break;
    }
    return std::clamp(t, ts.t_min, ts.t_max);
}

EvolutionState run_evolution(const EvolveConfig& cfg, const Dataset& train_data,
                             const Dataset& test_data, Client& client,
                             const TemplateStore& store, const std::string& run_dir) {
    cfg.validate();
    fs::create_directories(run_dir);

    const nlohmann::json cfg_json = cfg;
    const fs::path run_path = fs::path(run_dir) / "run.json";

    EvolutionState state;
    state.temperature = cfg.temperature.t_init;
    if (fs::exists(run_path)) {
        std::ifstream in(run_path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("cannot parse " + run_path.string() + ": " + e.what());
        }
        if (j.at("config") != cfg_json)
            throw ConfigError("run directory was created with a different configuration");
        state = state_from_json(j.at("state"));
    }
    if (auto* mock = dynamic_cast<MockClient*>(&client))
        mock->seek(static_cast<std::size_t>(state.llm_calls));

    std::vector<std::string> examples = cfg.example_rewards;
    if (cfg.mode == PromptContext::Mode::FewShot && examples.empty())
        examples.push_back(dsl::precision_constraint_source(0.5, 0.7));

    const std::string framework = store.load("framework_snippet.txt");
    const std::string grammar = dsl::grammar_text();

    for (int k = state.completed_iterations + 1; k <= cfg.n_iter; ++k) {
        const std::uint64_t llm_calls_at_start = state.llm_calls;

        PromptContext ctx;
        ctx.mode = cfg.mode;
        ctx.task_goal = default_task_goal();
        ctx.framework_code = framework;
        if (cfg.mode == PromptContext::Mode::FewShot) ctx.example_rewards = examples;
        if (state.f_best)
            ctx.best_so_far = BestSoFar{state.f_best->source, state.f_best->success_score};
        ctx.dsl_grammar = grammar;
        ctx.guidance = tail(state.guidance, 3);
        ctx.feedback_text = state.latest_feedback;

        CompletionRequest req;
        req.messages = build_initial(ctx, store);
        req.temperature = state.temperature;
        req.max_tokens = cfg.max_tokens;

        // Sequential sampling keeps fixture replay and context deterministic.
        std::vector<CandidateRecord> sampled(static_cast<std::size_t>(cfg.n_samples));
        std::vector<std::shared_ptr<const dsl::RewardProgram>> programs(
            static_cast<std::size_t>(cfg.n_samples));
        for (int s = 0; s < cfg.n_samples; ++s) {
            CandidateRecord rec;
            rec.iteration = k;
            rec.sample = s;
            rec.train_seed = mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(k)),
                                      static_cast<std::uint64_t>(s));
            std::shared_ptr<const dsl::RewardProgram> program;
            for (int attempt = 0; attempt < cfg.max_resamples_per_slot && !program; ++attempt) {
                std::string text;
                try {
                    text = client.complete(req);
                    ++state.llm_calls;
                } catch (const ClientError& e) {
                    rec.resample_history.push_back(std::string("client error: ") + e.what());
                    continue;
                }
                rec.raw_text = text;
                try {
                    const std::string source = dsl::extract_program(text);
                    dsl::RewardProgram parsed = dsl::parse(source);
                    const dsl::ValidationReport vr = dsl::validate(parsed);
                    if (!vr.ok()) {
                        rec.resample_history.push_back("validation error: " +
                                                       join_violations(vr));
                        continue;
                    }
                    rec.source = source;
                    program = std::make_shared<const dsl::RewardProgram>(std::move(parsed));
                } catch (const ExtractionError& e) {
                    rec.resample_history.push_back(std::string("extraction error: ") + e.what());
                } catch (const DslParseError& e) {
                    rec.resample_history.push_back(std::string("parse error: ") + e.what());
                }
            }
            if (!program) {
                rec.status = CandidateRecord::Status::ValidationFailed;
                rec.validation_error = rec.resample_history.empty()
                                           ? "no sampling attempts made"
                                           : rec.resample_history.back();
            }
            sampled[static_cast<std::size_t>(s)] = std::move(rec);
            programs[static_cast<std::size_t>(s)] = std::move(program);
        }

        // Valid candidates train and evaluate concurrently; results merge in
        // sample order so the run stays deterministic.
        struct JobResult {
            CandidateRecord rec;
            std::optional<PolicyParams> params;
        };
        auto run_candidate = [&cfg, &train_data, &test_data](
                                 CandidateRecord rec,
                                 std::shared_ptr<const dsl::RewardProgram> prog) -> JobResult {
            TrainConfig tc = cfg.train;
            tc.n_episodes = cfg.n_episodes;
            tc.seed = rec.train_seed;
            TrainResult result;
            try {
                result = train_agent(train_data, dsl::make_reward_fn(std::move(prog)), tc,
                                     cfg.issuer, cfg.layout);
                rec.train_stats = result.stats;
            } catch (const std::exception& e) {
                rec.status = CandidateRecord::Status::TrainError;
                rec.train_error = e.what();
                return {std::move(rec), std::nullopt};
            }
            try {
                rec.eval_report =
                    evaluate_policy(result.params, test_data, cfg.recall_levels, cfg.layout, cfg.issuer);
            } catch (const std::exception& e) {
                rec.status = CandidateRecord::Status::EvalError;
                rec.eval_error = e.what();
                return {std::move(rec), std::move(result.params)};
            }
            rec.success_score = success_score(rec.eval_report);
            rec.status = CandidateRecord::Status::Complete;
            return {std::move(rec), std::move(result.params)};
        };

        std::vector<std::future<JobResult>> jobs(static_cast<std::size_t>(cfg.n_samples));
        for (std::size_t s = 0; s < sampled.size(); ++s)
            if (programs[s])
                jobs[s] = std::async(std::launch::async, run_candidate, sampled[s], programs[s]);

        const std::string iter_name = "iter_" + std::to_string(k);
        fs::create_directories(fs::path(run_dir) / iter_name);
        std::vector<CandidateRecord> merged;
        for (std::size_t s = 0; s < sampled.size(); ++s) {
            JobResult r = jobs[s].valid() ? jobs[s].get() : JobResult{sampled[s], std::nullopt};
            const std::string cand_name = "cand_" + std::to_string(static_cast<int>(s));
            if (r.params) {
                r.rec.policy_path = iter_name + "/" + cand_name + ".policy";
                save_policy(*r.params, fs::path(run_dir) / r.rec.policy_path);
            }
            write_json(fs::path(run_dir) / iter_name / (cand_name + ".json"), r.rec);
            merged.push_back(std::move(r.rec));
        }

        const CandidateRecord* best_iter = nullptr;
        for (const CandidateRecord& rec : merged)
            if (rec.status == CandidateRecord::Status::Complete &&
                (best_iter == nullptr || rec.success_score > best_iter->success_score))
                best_iter = &rec;

        IterationSummary summary;
        summary.iteration = k;
        if (best_iter == nullptr) {
            summary.branch = IterationBranch::AllFailed;
            ReflectionOutcome outcome;
            outcome.kind = ReflectionOutcome::Kind::AllFailed;
            for (const CandidateRecord& rec : merged) outcome.failures.push_back(failure_entry(rec));
            CompletionRequest reflection_req;
            reflection_req.messages = {req.messages[0],
                                       Message{"user", build_reflection(outcome, store)}};
            reflection_req.temperature = state.temperature;
            reflection_req.max_tokens = cfg.max_tokens;
            std::string guidance_text;
            try {
                guidance_text = client.complete(reflection_req);
                ++state.llm_calls;
            } catch (const ClientError& e) {
                // Roll the cursor back so a resume replays this iteration
                // from its first sample.
                state.llm_calls = llm_calls_at_start;
                nlohmann::json j;
                j["config"] = cfg_json;
                j["state"] = state_to_json(state);
                write_json(run_path, j);
                throw ClientError("reflection call failed in iteration " + std::to_string(k) +
                                  ": " + e.what());
            }
            state.guidance.push_back(guidance_text);
            state.latest_feedback.clear();
        } else if (!state.f_best || best_iter->success_score > state.f_best->success_score) {
            summary.branch = IterationBranch::BetterFound;
            ReflectionOutcome outcome;
            outcome.kind = ReflectionOutcome::Kind::BetterFound;
            outcome.iteration = k;
            outcome.candidate_source = best_iter->source;
            outcome.recall_levels = cfg.recall_levels;
            if (state.f_best)
                for (const LevelResult& lv : state.f_best->eval_report.levels)
                    outcome.previous_precision.push_back(lv.precision);
            else
                outcome.previous_precision = best_iter->eval_report.baseline_precisions;
            state.guidance.push_back(build_reflection(outcome, store));
            state.f_best = *best_iter;
            state.latest_feedback = build_feedback(make_feedback(*best_iter, cfg), store);
        } else {
            summary.branch = IterationBranch::SuboptimalFound;
            ReflectionOutcome outcome;
            outcome.kind = ReflectionOutcome::Kind::SuboptimalFound;
            outcome.iteration = k;
            outcome.candidate_source = best_iter->source;
            state.guidance.push_back(build_reflection(outcome, store));
            state.latest_feedback = build_feedback(make_feedback(*best_iter, cfg), store);
        }

        state.temperature = update_temperature(state.temperature, summary.branch, cfg.temperature);
        if (best_iter != nullptr) summary.best_score = best_iter->success_score;
        if (state.f_best) summary.f_best_score_after = state.f_best->success_score;
        summary.temperature_after = state.temperature;
        summary.llm_calls_after = state.llm_calls;
        state.history.push_back(summary);
        state.records.insert(state.records.end(), merged.begin(), merged.end());
        state.completed_iterations = k;

        if (state.f_best) write_json(fs::path(run_dir) / "best.json", *state.f_best);
        nlohmann::json j;
        j["config"] = cfg_json;
        j["state"] = state_to_json(state);
        write_json(run_path, j);
    }
    return state;
}

void to_json(nlohmann::json& j, const TemperatureSchedule& ts) {
    j = {{"t_init", ts.t_init}, {"t_min", ts.t_min}, {"t_max", ts.t_max}, {"t_step", ts.t_step}};
}

void from_json(const nlohmann::json& j, TemperatureSchedule& ts) {
    TemperatureSchedule def;
    ts.t_init = j.value("t_init", def.t_init);
    ts.t_min = j.value("t_min", def.t_min);
    ts.t_max = j.value("t_max", def.t_max);
    ts.t_step = j.value("t_step", def.t_step);
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = {{"n_episodes", cfg.n_episodes},
         {"batch_size", cfg.batch_size},
         {"lr", cfg.lr},
         {"beta1", cfg.beta1},
         {"beta2", cfg.beta2},
         {"eps", cfg.eps},
         {"entropy_coef", cfg.entropy_coef},
         {"center_returns", cfg.center_returns},
         {"seed", cfg.seed}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    TrainConfig def;
    cfg.n_episodes = j.value("n_episodes", def.n_episodes);
    cfg.batch_size = j.value("batch_size", def.batch_size);
    cfg.lr = j.value("lr", def.lr);
    cfg.beta1 = j.value("beta1", def.beta1);
    cfg.beta2 = j.value("beta2", def.beta2);
    cfg.eps = j.value("eps", def.eps);
    cfg.entropy_coef = j.value("entropy_coef", def.entropy_coef);
    cfg.center_returns = j.value("center_returns", def.center_returns);
    cfg.seed = j.value("seed", def.seed);
}

void to_json(nlohmann::json& j, const IssuerConfig& cfg) {
    j = {{"enabled", cfg.enabled},
         {"p_approve_legit", cfg.p_approve_legit},
         {"p_approve_fraud", cfg.p_approve_fraud}};
}

void from_json(const nlohmann::json& j, IssuerConfig& cfg) {
    IssuerConfig def;
    cfg.enabled = j.value("enabled", def.enabled);
    cfg.p_approve_legit = j.value("p_approve_legit", def.p_approve_legit);
    cfg.p_approve_fraud = j.value("p_approve_fraud", def.p_approve_fraud);
}

std::string to_string(StateLayout layout) {
    return layout == StateLayout::ScoresWithStage ? "scores_with_stage" : "scores_only";
}

StateLayout layout_from_string(const std::string& s) {
    if (s == "scores_with_stage") return StateLayout::ScoresWithStage;
    if (s == "scores_only") return StateLayout::ScoresOnly;
    throw ConfigError("unknown state layout: " + s);
}

std::string to_string(PromptContext::Mode mode) {
    return mode == PromptContext::Mode::ZeroShot ? "zero_shot" : "few_shot";
}

PromptContext::Mode mode_from_string(const std::string& s) {
    if (s == "zero_shot") return PromptContext::Mode::ZeroShot;
    if (s == "few_shot") return PromptContext::Mode::FewShot;
    throw ConfigError("unknown prompt mode: " + s);
}

void to_json(nlohmann::json& j, const EvolveConfig& cfg) {
    j = {{"n_iter", cfg.n_iter},
         {"n_samples", cfg.n_samples},
         {"n_episodes", cfg.n_episodes},
         {"recall_levels", cfg.recall_levels},
         {"max_resamples_per_slot", cfg.max_resamples_per_slot},
         {"temperature", cfg.temperature},
         {"seed", cfg.seed},
         {"max_tokens", cfg.max_tokens},
         {"mode", to_string(cfg.mode)},
         {"example_rewards", cfg.example_rewards},
         {"train", cfg.train},
         {"issuer", cfg.issuer},
         {"layout", to_string(cfg.layout)}};
}

void from_json(const nlohmann::json& j, EvolveConfig& cfg) {
    EvolveConfig def;
    cfg.n_iter = j.value("n_iter", def.n_iter);
    cfg.n_samples = j.value("n_samples", def.n_samples);
    cfg.n_episodes = j.value("n_episodes", def.n_episodes);
    cfg.recall_levels = j.value("recall_levels", def.recall_levels);
    cfg.max_resamples_per_slot = j.value("max_resamples_per_slot", def.max_resamples_per_slot);
    if (j.contains("temperature")) j.at("temperature").get_to(cfg.temperature);
    cfg.seed = j.value("seed", def.seed);
    cfg.max_tokens = j.value("max_tokens", def.max_tokens);
    cfg.mode = mode_from_string(j.value("mode", to_string(def.mode)));
    cfg.example_rewards = j.value("example_rewards", def.example_rewards);
    if (j.contains("train")) j.at("train").get_to(cfg.train);
    if (j.contains("issuer")) j.at("issuer").get_to(cfg.issuer);
    cfg.layout = layout_from_string(j.value("layout", to_string(def.layout)));
}

namespace {

nlohmann::json train_stats_to_json(const TrainStats& s) {
    return {{"episode_mean_reward", s.episode_mean_reward},
            {"initial_total_reward", s.initial_total_reward},
            {"final_total_reward", s.final_total_reward},
            {"final_blocks_step0", s.final_blocks_step0},
            {"final_blocks_step1", s.final_blocks_step1}};
}

TrainStats train_stats_from_json(const nlohmann::json& j) {
    TrainStats s;
    s.episode_mean_reward = j.at("episode_mean_reward").get<std::vector<double>>();
    s.initial_total_reward = j.at("initial_total_reward").get<double>();
    s.final_total_reward = j.at("final_total_reward").get<double>();
    s.final_blocks_step0 = j.at("final_blocks_step0").get<int>();
    s.final_blocks_step1 = j.at("final_blocks_step1").get<int>();
    return s;
}

CandidateRecord::Status status_from_string(const std::string& s) {
    if (s == "validation_failed") return CandidateRecord::Status::ValidationFailed;
    if (s == "train_error") return CandidateRecord::Status::TrainError;
    if (s == "eval_error") return CandidateRecord::Status::EvalError;
    if (s == "complete") return CandidateRecord::Status::Complete;
    throw ConfigError("unknown candidate status: " + s);
}

}  // namespace

void to_json(nlohmann::json& j, const CandidateRecord& rec) {
    const bool trained = rec.status == CandidateRecord::Status::EvalError ||
                         rec.status == CandidateRecord::Status::Complete;
    const bool complete = rec.status == CandidateRecord::Status::Complete;
    j = nlohmann::json::object();
    j["iteration"] = rec.iteration;
    j["sample"] = rec.sample;
    j["status"] = to_string(rec.status);
    j["raw_text"] = rec.raw_text;
    j["source"] = rec.source;
    j["resample_history"] = rec.resample_history;
    j["validation_error"] = rec.validation_error;
    j["train_error"] = rec.train_error;
    j["eval_error"] = rec.eval_error;
    j["train_seed"] = rec.train_seed;
    j["train_stats"] = trained ? train_stats_to_json(rec.train_stats) : nlohmann::json(nullptr);
    j["eval_report"] = complete ? nlohmann::json(rec.eval_report) : nlohmann::json(nullptr);
    j["success_score"] = complete ? nlohmann::json(rec.success_score) : nlohmann::json(nullptr);
    j["policy_path"] =
        rec.policy_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(rec.policy_path);
}

void from_json(const nlohmann::json& j, CandidateRecord& rec) {
    rec = CandidateRecord{};
    rec.iteration = j.at("iteration").get<int>();
    rec.sample = j.at("sample").get<int>();
    rec.status = status_from_string(j.at("status").get<std::string>());
    rec.raw_text = j.at("raw_text").get<std::string>();
    rec.source = j.at("source").get<std::string>();
    rec.resample_history = j.at("resample_history").get<std::vector<std::string>>();
    rec.validation_error = j.at("validation_error").get<std::string>();
    rec.train_error = j.at("train_error").get<std::string>();
    rec.eval_error = j.at("eval_error").get<std::string>();
    rec.train_seed = j.at("train_seed").get<std::uint64_t>();
    if (!j.at("train_stats").is_null()) rec.train_stats = train_stats_from_json(j.at("train_stats"));
    if (!j.at("eval_report").is_null()) rec.eval_report = j.at("eval_report").get<EvalReport>();
    if (!j.at("success_score").is_null()) rec.success_score = j.at("success_score").get<double>();
    if (!j.at("policy_path").is_null()) rec.policy_path = j.at("policy_path").get<std::string>();
}

}  // namespace trisk
