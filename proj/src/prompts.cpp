#include "trisk/prompts.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "trisk/errors.hpp"

#ifndef TRISK_PROMPT_DIR_DEFAULT
#define TRISK_PROMPT_DIR_DEFAULT "prompts"
#endif

namespace trisk {

namespace {

std::string rtrim(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
}

bool slot_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
}

}  // namespace

TemplateStore::TemplateStore(std::string dir) : dir_(std::move(dir)) {}

TemplateStore TemplateStore::from_env() {
    if (const char* dir = std::getenv("TRISK_PROMPT_DIR"))
        if (*dir != '\0') return TemplateStore(dir);
    return TemplateStore(TRISK_PROMPT_DIR_DEFAULT);
}

std::string TemplateStore::load(const std::string& name) const {
    const std::string path = dir_ + "/" + name;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open prompt template: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string render_template(const std::string& tmpl,
                            const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tmpl.size());
    std::set<std::string> used;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] != '{') {
            out += tmpl[i++];
            continue;
        }
        std::size_t j = i + 1;
        while (j < tmpl.size() && slot_char(tmpl[j])) ++j;
        if (j == i + 1 || j == tmpl.size() || tmpl[j] != '}') {
            // Not a well-formed placeholder; keep the brace literally.
            out += tmpl[i++];
            continue;
        }
        const std::string name = tmpl.substr(i + 1, j - i - 1);
        auto it = slots.find(name);
        if (it == slots.end()) throw PromptError("no value for placeholder {" + name + "}");
        out += it->second;
        used.insert(name);
        i = j + 1;
    }
    for (const auto& [name, value] : slots)
        if (!used.count(name)) throw PromptError("unused slot value: " + name);
    return out;
}

std::string fmt_number(double v) {
    char buf[64];
    if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 1e15)
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    else
        std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ", ";
        out += fmt_number(v[i]);
    }
    return out + "]";
}

std::string default_task_goal() {
    return "Design a reward function that enables the RL agent to make more effective decisions "
           "across 2 steps for improved overall performance in identifying and blocking risky "
           "transactions comparing to a baseline scores in the 1st step";
}

void PromptContext::validate() const {
    if (dsl_grammar.empty()) throw PromptError("prompt context: missing grammar text");
    if (task_goal.empty()) throw PromptError("prompt context: missing task goal");
    if (framework_code.empty()) throw PromptError("prompt context: missing framework snippet");
    if (mode == Mode::FewShot && example_rewards.empty())
        throw PromptError("prompt context: few-shot mode requires example rewards");
    if (mode == Mode::ZeroShot && !example_rewards.empty())
        throw PromptError("prompt context: zero-shot mode forbids example rewards");
}

std::vector<Message> build_initial(const PromptContext& ctx, const TemplateStore& store) {
    ctx.validate();

    std::string examples_section;
    if (ctx.mode == PromptContext::Mode::FewShot) {
        examples_section =
            "\nAs some examples, here are some examples reward functions proposed by human:\n"
            "```\n";
        for (std::size_t i = 0; i < ctx.example_rewards.size(); ++i) {
            examples_section += rtrim(ctx.example_rewards[i]);
            examples_section += i + 1 < ctx.example_rewards.size() ? "\n\n" : "\n";
        }
        examples_section += "```";
    }
    std::string best_section;
    if (ctx.best_so_far) {
        best_section = "\nHere is the best reward function found so far (success score " +
                       fmt_number(ctx.best_so_far->success_score) + "):\n```\n" +
                       rtrim(ctx.best_so_far->source) + "\n```";
    }

    std::string system =
        render_template(store.load("initial_instruction.txt"),
                        {{"task_goal", ctx.task_goal}, {"framework_code", ctx.framework_code}});
    system += "\n";
    system += render_template(store.load("code_generation.txt"),
                              {{"examples_section", examples_section},
                               {"best_so_far_section", best_section},
                               {"dsl_grammar", rtrim(ctx.dsl_grammar)}});
    if (!ctx.guidance.empty()) {
        system += "\nGuidance from your previous reflections:\n";
        for (std::size_t i = 0; i < ctx.guidance.size(); ++i)
            system += "(" + std::to_string(i + 1) + ") " + rtrim(ctx.guidance[i]) + "\n";
    }

    std::string user = store.load("domain_context.txt");
    if (!ctx.feedback_text.empty()) {
        user += "\n" + ctx.feedback_text;
        if (user.back() != '\n') user += "\n";
    }
    return {{"system", system}, {"user", user}};
}

std::string build_feedback(const MetricFeedback& fb, const TemplateStore& store) {
    std::string text =
        render_template(store.load("feedback.txt"),
                        {{"episodes", std::to_string(fb.episodes)},
                         {"blocks_step0", std::to_string(fb.blocks_step0)},
                         {"blocks_step1", std::to_string(fb.blocks_step1)},
                         {"final_reward", fmt_number(fb.final_reward)},
                         {"initial_reward", fmt_number(fb.initial_reward)},
                         {"recall_levels", fmt_list(fb.recall_levels)},
                         {"reached_recall", fmt_list(fb.reached_recall)},
                         {"best_precision", fmt_list(fb.best_precision)},
                         {"baseline_precision", fmt_list(fb.baseline_precision)},
                         {"bad_gmv_step0", fmt_number(fb.bad_gmv_step0)},
                         {"bad_gmv_step1", fmt_number(fb.bad_gmv_step1)},
                         {"total_gmv_step0", fmt_number(fb.total_gmv_step0)},
                         {"total_gmv_step1", fmt_number(fb.total_gmv_step1)}});
    if (!fb.training_error.empty())
        text += "\nError occurred during training: " + fb.training_error + "\n";
    if (!fb.evaluation_error.empty())
        text += "\nError occurred during evaluating: " + fb.evaluation_error + "\n";
    return text;
}

std::string build_reflection(const ReflectionOutcome& outcome, const TemplateStore& store) {
    switch (outcome.kind) {
        case ReflectionOutcome::Kind::AllFailed: {
            std::string log;
            for (std::size_t i = 0; i < outcome.failures.size(); ++i) {
                if (i > 0) log += "\n\n";
                log += "(" + std::to_string(i + 1) + ") " + rtrim(outcome.failures[i]);
            }
            return render_template(store.load("reflection_all_failed.txt"),
                                   {{"failure_log", log}});
        }
        case ReflectionOutcome::Kind::BetterFound:
            return render_template(
                store.load("reflection_better.txt"),
                {{"recall_levels", fmt_list(outcome.recall_levels)},
                 {"previous_precision", fmt_list(outcome.previous_precision)},
                 {"iteration", std::to_string(outcome.iteration)},
                 {"candidate_source", rtrim(outcome.candidate_source)}});
        case ReflectionOutcome::Kind::SuboptimalFound:
            return render_template(store.load("reflection_suboptimal.txt"),
                                   {{"iteration", std::to_string(outcome.iteration)},
                                    {"candidate_source", rtrim(outcome.candidate_source)}});
    }
    throw PromptError("reflection outcome: unknown kind");
}

}  // namespace trisk
