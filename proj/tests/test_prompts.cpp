#include <doctest.h>

#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "golden_prompts.hpp"
#include "helpers.hpp"
#include "trisk/errors.hpp"
#include "trisk/prompts.hpp"
#include "trisk/reward_dsl.hpp"
#include "trisk/rewards.hpp"

using namespace trisk;
using doctest::Contains;

namespace {

const std::string kPromptDir = TRISK_SOURCE_DIR "/prompts";

// Restores one environment variable on scope exit.
class EnvGuard {
   public:
    explicit EnvGuard(const char* name) : name_(name) {
        const char* v = std::getenv(name);
        if (v) old_ = v;
    }
    ~EnvGuard() {
        if (old_)
            ::setenv(name_, old_->c_str(), 1);
        else
            ::unsetenv(name_);
    }

   private:
    const char* name_;
    std::optional<std::string> old_;
};

}  // namespace

TEST_SUITE("prompts") {

TEST_CASE("template store loads files and reports missing ones") {
    const TemplateStore store(kPromptDir);
    CHECK(store.dir() == kPromptDir);
    CHECK(store.load("feedback.txt").find("We trained a RL policy") == 0);
    CHECK_THROWS_WITH_AS(store.load("nope.txt"),
                         Contains("cannot open prompt template"), IoError);
    CHECK_THROWS_WITH_AS(store.load("nope.txt"), Contains("nope.txt"), IoError);
}

TEST_CASE("template store honors the environment override") {
    EnvGuard guard("TRISK_PROMPT_DIR");

    ::unsetenv("TRISK_PROMPT_DIR");
    CHECK(TemplateStore::from_env().dir() == kPromptDir);
    // An empty value counts as unset.
    ::setenv("TRISK_PROMPT_DIR", "", 1);
    CHECK(TemplateStore::from_env().dir() == kPromptDir);

    testutil::TempDir tmp;
    testutil::write_file(tmp.path() / "feedback.txt", "custom template\n");
    ::setenv("TRISK_PROMPT_DIR", tmp.str().c_str(), 1);
    const TemplateStore store = TemplateStore::from_env();
    CHECK(store.dir() == tmp.str());
    CHECK(store.load("feedback.txt") == "custom template\n");
}

TEST_CASE("render_template substitutes every well-formed slot") {
    CHECK(render_template("a {x} b {y_2} c", {{"x", "1"}, {"y_2", "2"}}) == "a 1 b 2 c");
    CHECK(render_template("{x} and {x}", {{"x", "t"}}) == "t and t");
    // Substituted values are not re-scanned.
    CHECK(render_template("{x}", {{"x", "{y}"}}) == "{y}");
    // Only lowercase/digit/underscore names count as placeholders.
    CHECK(render_template("{X} { a} {} {a b}", {}) == "{X} { a} {} {a b}");
}

TEST_CASE("render_template rejects missing and unused values") {
    CHECK_THROWS_WITH_AS(render_template("{x} {y}", {{"x", "1"}}),
                         "no value for placeholder {y}", PromptError);
    CHECK_THROWS_WITH_AS(render_template("{x}", {{"x", "1"}, {"extra", "2"}}),
                         "unused slot value: extra", PromptError);
}

TEST_CASE("numbers and lists render in their shortest clean form") {
    CHECK(fmt_number(9.0) == "9");
    CHECK(fmt_number(-3.0) == "-3");
    CHECK(fmt_number(0.85) == "0.85");
    CHECK(fmt_number(-1520.5) == "-1520.5");
    CHECK(fmt_number(30125.0) == "30125");
    CHECK(fmt_number(1e15) == "1e+15");
    CHECK(fmt_number(0.123456789) == "0.123457");
    CHECK(fmt_list({}) == "[]");
    CHECK(fmt_list({0.8, 0.85, 0.9}) == "[0.8, 0.85, 0.9]");
}

TEST_CASE("prompt context validation names the missing piece") {
    const TemplateStore store(kPromptDir);
    PromptContext ctx = goldens::golden_zero_context(store);
    CHECK_NOTHROW(ctx.validate());

    PromptContext bad = ctx;
    bad.dsl_grammar.clear();
    CHECK_THROWS_WITH_AS(bad.validate(), "prompt context: missing grammar text", PromptError);
    bad = ctx;
    bad.task_goal.clear();
    CHECK_THROWS_WITH_AS(bad.validate(), "prompt context: missing task goal", PromptError);
    bad = ctx;
    bad.framework_code.clear();
    CHECK_THROWS_WITH_AS(bad.validate(), "prompt context: missing framework snippet", PromptError);
    bad = ctx;
    bad.example_rewards = {"def get_reward..."};
    CHECK_THROWS_WITH_AS(bad.validate(), "prompt context: zero-shot mode forbids example rewards",
                         PromptError);
    bad = goldens::golden_few_context(store);
    bad.example_rewards.clear();
    CHECK_THROWS_WITH_AS(bad.validate(), "prompt context: few-shot mode requires example rewards",
                         PromptError);
}

TEST_CASE("zero-shot initial prompt carries goal and grammar only") {
    const TemplateStore store(kPromptDir);
    const PromptContext ctx = goldens::golden_zero_context(store);
    const std::vector<Message> msgs = build_initial(ctx, store);

    REQUIRE(msgs.size() == 2);
    CHECK(msgs[0].role == "system");
    CHECK(msgs[1].role == "user");

    const std::string& system = msgs[0].content;
    CHECK(system.find(default_task_goal()) != std::string::npos);
    CHECK(system.find("You are a reward engineer") == 0);
    CHECK(system.find(ctx.framework_code) != std::string::npos);
    CHECK(system.find("def\" \"get_reward\"") == std::string::npos);
    CHECK(system.find(dsl::grammar_text().substr(0, 40)) != std::string::npos);
    CHECK(system.find("proposed by human") == std::string::npos);
    CHECK(system.find("best reward function found so far") == std::string::npos);
    CHECK(system.find("Guidance from your previous reflections") == std::string::npos);
    // The user message is exactly the domain context; no feedback appended.
    CHECK(msgs[1].content == store.load("domain_context.txt"));
}

TEST_CASE("few-shot initial prompt embeds examples, best-so-far and guidance") {
    const TemplateStore store(kPromptDir);
    const PromptContext ctx = goldens::golden_few_context(store);
    const std::vector<Message> msgs = build_initial(ctx, store);

    REQUIRE(msgs.size() == 2);
    const std::string& system = msgs[0].content;
    CHECK(system.find("As some examples, here are some examples reward functions proposed by "
                      "human:") != std::string::npos);
    for (const std::string& example : ctx.example_rewards)
        CHECK(system.find(example) != std::string::npos);
    CHECK(system.find("Here is the best reward function found so far (success score 0.0425):") !=
          std::string::npos);
    CHECK(system.find(ctx.best_so_far->source) != std::string::npos);
    CHECK(system.find("Guidance from your previous reflections:\n(1) ") != std::string::npos);
    CHECK(system.find("\n(2) ") != std::string::npos);

    // Feedback rides along in the user message after the domain context.
    const std::string domain = store.load("domain_context.txt");
    CHECK(msgs[1].content.find(domain) == 0);
    CHECK(msgs[1].content.find(ctx.feedback_text) != std::string::npos);
    CHECK(msgs[1].content.back() == '\n');
    CHECK(msgs[1].content.size() > domain.size() + ctx.feedback_text.size());
}

TEST_CASE("feedback message reports every metric exactly once") {
    const TemplateStore store(kPromptDir);
    const std::string text = build_feedback(goldens::golden_feedback(), store);

    for (const char* sentinel :
         {"after training in 120 episodes", "first step is: 5123, and",
          "second step is: 1287, and", "final reward value is: 30125 comparing",
          "initial reward value is: -1520.5.", "levels: [0.8, 0.85, 0.9] and",
          "similar recall: [0.801, 0.853, 0.902] and",
          "best the precision: [0.71, 0.66, 0.58], while",
          "reach the precision: [0.64, 0.55, 0.47].", "second step is: 9/1, and",
          "second step is 8.5/1;"})
        CHECK_MESSAGE(testutil::count_occurrences(text, sentinel) == 1, sentinel);
    CHECK(text.find("Error occurred") == std::string::npos);
    CHECK(text.find('{') == std::string::npos);
}

TEST_CASE("feedback message appends error sections in order") {
    const TemplateStore store(kPromptDir);
    MetricFeedback fb = goldens::golden_feedback_errors();
    const std::string both = build_feedback(fb, store);
    const std::size_t train_pos = both.find("Error occurred during training: policy loss became "
                                            "non-finite in episode 3");
    const std::size_t eval_pos =
        both.find("Error occurred during evaluating: recall target unreachable");
    REQUIRE(train_pos != std::string::npos);
    REQUIRE(eval_pos != std::string::npos);
    CHECK(train_pos < eval_pos);

    fb.evaluation_error.clear();
    const std::string train_only = build_feedback(fb, store);
    CHECK(train_only.find("Error occurred during training:") != std::string::npos);
    CHECK(train_only.find("Error occurred during evaluating:") == std::string::npos);

    fb = goldens::golden_feedback_errors();
    fb.training_error.clear();
    const std::string eval_only = build_feedback(fb, store);
    CHECK(eval_only.find("Error occurred during training:") == std::string::npos);
    CHECK(eval_only.find("Error occurred during evaluating:") != std::string::npos);
}

TEST_CASE("reflection variants render their outcome") {
    const TemplateStore store(kPromptDir);

    const std::string failed = build_reflection(goldens::golden_all_failed(), store);
    CHECK(failed.find("all of your designed reward functions failed") != std::string::npos);
    for (const std::string& entry : goldens::golden_all_failed().failures)
        CHECK(failed.find(entry) != std::string::npos);
    CHECK(failed.find("less than length of 1000 tokens") != std::string::npos);
    CHECK(failed.find("{failure_log}") == std::string::npos);

    const ReflectionOutcome better = goldens::golden_better();
    const std::string better_text = build_reflection(better, store);
    CHECK(better_text.find("A better new found reward function in iteration 2:") !=
          std::string::npos);
    CHECK(better_text.find("recall threshold is [0.8, 0.85, 0.9]") != std::string::npos);
    CHECK(better_text.find("reach the precision: [0.64, 0.55, 0.47].") != std::string::npos);
    CHECK(better_text.find(better.candidate_source) != std::string::npos);

    const ReflectionOutcome sub = goldens::golden_suboptimal();
    const std::string sub_text = build_reflection(sub, store);
    CHECK(sub_text.find("You found a sub-optimal new reward function in iteration 3") !=
          std::string::npos);
    CHECK(sub_text.find(sub.candidate_source) != std::string::npos);
}

TEST_CASE("rendered prompts match the golden transcripts byte for byte") {
    const TemplateStore store(kPromptDir);
    for (const auto& [name, text] : goldens::golden_prompt_files(store)) {
        INFO(name);
        CHECK(text == testutil::read_file(TRISK_SOURCE_DIR "/tests/golden/prompts/" + name));
    }
}

}
