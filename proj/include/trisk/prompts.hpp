#pragma once

// Prompt assembly for the reward-search loop: an initial instruction pair
// (system + user), a metric feedback message, and three reflection variants.
// Templates live as text files with {slot_name} placeholders; assembly is a
// pure function of its inputs.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trisk/llm.hpp"

namespace trisk {

class TemplateStore {
   public:
    explicit TemplateStore(std::string dir);

    // Directory from TRISK_PROMPT_DIR, falling back to the compiled-in
    // default (the repository's prompts/ directory).
    static TemplateStore from_env();

    // Reads <dir>/<name>. Throws IoError when missing.
    std::string load(const std::string& name) const;

    const std::string& dir() const { return dir_; }

   private:
    std::string dir_;
};

// Replaces every well-formed {slot_name} placeholder. Throws PromptError on
// a placeholder without a value or a value without a placeholder. Substituted
// values are not re-scanned, so they may contain braces.
std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots);

struct BestSoFar {
    std::string source;
    double success_score = 0.0;
};

struct PromptContext {
    enum class Mode { ZeroShot, FewShot };

    Mode mode = Mode::ZeroShot;
    std::string task_goal;
    std::string framework_code;                 // environment/training interface description
    std::vector<std::string> example_rewards;   // few-shot only
    std::optional<BestSoFar> best_so_far;
    std::string dsl_grammar;
    std::vector<std::string> guidance;          // accumulated reflection summaries
    std::string feedback_text;                  // appended to the user message when non-empty

    // Throws PromptError: empty grammar, empty task goal, or example list
    // inconsistent with the mode.
    void validate() const;
};

// The task-goal sentence used by default configurations.
std::string default_task_goal();

struct MetricFeedback {
    int episodes = 0;
    long long blocks_step0 = 0;
    long long blocks_step1 = 0;
    double initial_reward = 0.0;
    double final_reward = 0.0;
    std::vector<double> recall_levels;
    std::vector<double> reached_recall;
    std::vector<double> best_precision;
    std::vector<double> baseline_precision;
    double bad_gmv_step0 = 0.0;    // ratio convention: numerator is step 0
    double bad_gmv_step1 = 0.0;
    double total_gmv_step0 = 0.0;
    double total_gmv_step1 = 0.0;
    std::string training_error;    // empty: section omitted
    std::string evaluation_error;  // empty: section omitted
};

struct ReflectionOutcome {
    enum class Kind { AllFailed, BetterFound, SuboptimalFound };

    Kind kind = Kind::AllFailed;
    std::vector<std::string> failures;       // AllFailed: one entry per failed design
    int iteration = 0;                       // BetterFound / SuboptimalFound
    std::string candidate_source;            // BetterFound / SuboptimalFound
    std::vector<double> recall_levels;       // BetterFound
    std::vector<double> previous_precision;  // BetterFound
};

// System message (role preamble, code-generation rules, grammar, optional
// examples/best-so-far, accumulated guidance) plus user message (domain
// context, optional feedback text).
std::vector<Message> build_initial(const PromptContext& ctx, const TemplateStore& store);

std::string build_feedback(const MetricFeedback& fb, const TemplateStore& store);

std::string build_reflection(const ReflectionOutcome& outcome, const TemplateStore& store);

// Shortest clean decimal rendering: 9.0 -> "9", 0.85 -> "0.85".
std::string fmt_number(double v);
// "[a, b, c]" with fmt_number elements.
std::string fmt_list(const std::vector<double>& v);

}  // namespace trisk
