#pragma once

// Evolutionary reward search: sample candidate reward programs from an LLM,
// resample invalid ones, train and evaluate every valid candidate, keep the
// best, and feed reflection context back into the next iteration. The whole
// run is persisted to a run directory and can resume after a crash.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trisk/env.hpp"
#include "trisk/eval.hpp"
#include "trisk/llm.hpp"
#include "trisk/policy.hpp"
#include "trisk/prompts.hpp"
#include "trisk/synthdata.hpp"

namespace trisk {

struct TemperatureSchedule {
    double t_init = 0.7;
    double t_min = 0.2;
    double t_max = 1.2;
    double t_step = 0.1;
};

struct EvolveConfig {
    int n_iter = 3;
    int n_samples = 4;
    int n_episodes = 150;            // per-candidate training episodes
    std::vector<double> recall_levels = {0.80, 0.85, 0.90};
    int max_resamples_per_slot = 3;  // total attempt budget per slot
    TemperatureSchedule temperature;
    std::uint64_t seed = 42;
    int max_tokens = 2048;
    PromptContext::Mode mode = PromptContext::Mode::ZeroShot;
    std::vector<std::string> example_rewards;  // few-shot; empty = built-in default
    TrainConfig train;                         // n_episodes/seed superseded per candidate
    IssuerConfig issuer;
    StateLayout layout = StateLayout::ScoresWithStage;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

struct CandidateRecord {
    enum class Status { ValidationFailed, TrainError, EvalError, Complete };

    int iteration = 0;  // 1-based
    int sample = 0;     // 0-based slot index
    Status status = Status::ValidationFailed;
    std::string raw_text;  // last LLM response for the slot
    std::string source;    // extracted program source (empty if never extracted)
    std::vector<std::string> resample_history;  // one entry per failed attempt
    std::string validation_error;
    std::string train_error;
    std::string eval_error;
    std::uint64_t train_seed = 0;
    TrainStats train_stats;
    EvalReport eval_report;
    double success_score = 0.0;  // meaningful only when Complete
    std::string policy_path;     // run-dir-relative, empty if never trained
};

enum class IterationBranch { BetterFound, SuboptimalFound, AllFailed };

std::string to_string(IterationBranch branch);
std::string to_string(CandidateRecord::Status status);

struct IterationSummary {
    int iteration = 0;
    IterationBranch branch = IterationBranch::AllFailed;
    std::optional<double> best_score;  // best completed candidate this iteration
    std::optional<double> f_best_score_after;
    double temperature_after = 0.0;
    std::uint64_t llm_calls_after = 0;
};

struct EvolutionState {
    int completed_iterations = 0;
    double temperature = 0.0;
    std::uint64_t llm_calls = 0;  // fixture cursor for scripted-mock resume
    std::optional<CandidateRecord> f_best;
    std::vector<std::string> guidance;  // accumulated reflection texts
    std::string latest_feedback;        // feedback message for the next iteration
    std::vector<IterationSummary> history;
    std::vector<CandidateRecord> records;  // all candidates, (iteration, sample) order
};

// Mean precision uplift over the recall levels, minus 1.0 when the report
// violates the stage constraint tp_gmv_step0 > tp_gmv_step1.
double success_score(const EvalReport& report);

double update_temperature(double current, IterationBranch outcome,
                          const TemperatureSchedule& ts);

// Runs (or resumes) the search against run_dir. Candidate sampling is
// sequential; valid candidates train and evaluate concurrently and results
// merge in sample order. A candidate's train/eval failure never aborts the
// loop; an LLM failure during the reflection call aborts the iteration with
// all state persisted.
EvolutionState run_evolution(const EvolveConfig& cfg, const Dataset& train_data,
                             const Dataset& test_data, Client& client,
                             const TemplateStore& store, const std::string& run_dir);

std::string to_string(StateLayout layout);
StateLayout layout_from_string(const std::string& s);
std::string to_string(PromptContext::Mode mode);
PromptContext::Mode mode_from_string(const std::string& s);

void to_json(nlohmann::json& j, const TemperatureSchedule& ts);
void from_json(const nlohmann::json& j, TemperatureSchedule& ts);
void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);
void to_json(nlohmann::json& j, const IssuerConfig& cfg);
void from_json(const nlohmann::json& j, IssuerConfig& cfg);
void to_json(nlohmann::json& j, const EvolveConfig& cfg);
void from_json(const nlohmann::json& j, EvolveConfig& cfg);
void to_json(nlohmann::json& j, const CandidateRecord& rec);
void from_json(const nlohmann::json& j, CandidateRecord& rec);

}  // namespace trisk
