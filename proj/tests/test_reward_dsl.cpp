#include <doctest.h>

#include <memory>
#include <string>

#include <Eigen/Dense>

#include "trisk/errors.hpp"
#include "trisk/reward_dsl.hpp"
#include "trisk/rewards.hpp"

using namespace trisk;

namespace {

RewardContext grid_ctx(int step, double action, double target, double wgt) {
    RewardContext c;
    c.current_step = step;
    c.action = Eigen::ArrayXd::Constant(1, action);
    c.target = Eigen::ArrayXd::Constant(1, target);
    c.wgt = Eigen::ArrayXd::Constant(1, wgt);
    return c;
}

const std::string kValidTiny =
    "def get_reward(current_step, action, target, wgt):\n"
    "    return action * wgt\n";

}  // namespace

TEST_SUITE("reward_dsl") {

TEST_CASE("extract_program returns the first fenced block") {
    const std::string text = "Here is my function:\n```python\n" + kValidTiny + "```\nDone.";
    CHECK(dsl::extract_program(text) == kValidTiny);

    const std::string two = "```\nfirst\n```\nand\n```\nsecond\n```\n";
    CHECK(dsl::extract_program(two) == "first\n");
}

TEST_CASE("extract_program rejects text without a complete fence") {
    CHECK_THROWS_AS(dsl::extract_program("plain prose, no code"), ExtractionError);
    CHECK_THROWS_AS(dsl::extract_program("starts a fence ```python\nbut never closes"),
                    ExtractionError);
}

TEST_CASE("the reference sources parse and validate cleanly") {
    for (const std::string& src :
         {dsl::evolved_zero_shot_source(), dsl::evolved_few_shot_source(),
          dsl::precision_constraint_source(0.5, 0.7)}) {
        const dsl::RewardProgram p = dsl::parse(src);
        const dsl::ValidationReport report = dsl::validate(p);
        CHECK(report.ok());
        CHECK(report.violations.empty());
    }
}

TEST_CASE("parse rejects a wrong signature") {
    CHECK_THROWS_AS(dsl::parse("def get_reward(a, b):\n    return a\n"), DslParseError);
    CHECK_THROWS_AS(dsl::parse("def other_name(current_step, action, target, wgt):\n"
                               "    return wgt\n"),
                    DslParseError);
}

TEST_CASE("parse names an undefined identifier with its position") {
    try {
        dsl::parse("def get_reward(current_step, action, target, wgt):\n    return foo * wgt\n");
        FAIL("expected DslParseError");
    } catch (const DslParseError& e) {
        CHECK(std::string(e.what()).find("foo") != std::string::npos);
        CHECK(e.line == 2);
        CHECK(e.col > 0);
    }
}

TEST_CASE("let bindings shadow correctly and comments plus continuations lex") {
    const std::string src =
        "def get_reward(current_step, action, target, wgt):  # header\n"
        "    let scaled = action * \\\n"
        "        wgt  # continuation\n"
        "    return scaled * 2\n";
    const dsl::RewardProgram p = dsl::parse(src);
    CHECK(dsl::validate(p).ok());
    const Eigen::ArrayXd r = dsl::evaluate(p, grid_ctx(0, 1, 1, 21));
    CHECK(r[0] == doctest::Approx(42.0));
}

TEST_CASE("validate flags a scalar return") {
    const dsl::RewardProgram p =
        dsl::parse("def get_reward(current_step, action, target, wgt):\n    return 1.5\n");
    const dsl::ValidationReport report = dsl::validate(p);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].code == "non-vector-return");
}

TEST_CASE("validate flags expressions past the depth bound") {
    std::string deep = "def get_reward(current_step, action, target, wgt):\n    return ";
    for (int i = 0; i < 70; ++i) deep += "abs(";
    deep += "wgt";
    for (int i = 0; i < 70; ++i) deep += ")";
    deep += "\n";
    const dsl::RewardProgram p = dsl::parse(deep);
    const dsl::ValidationReport report = dsl::validate(p);
    REQUIRE_FALSE(report.ok());
    bool found = false;
    for (const auto& v : report.violations) found = found || v.code == "depth";
    CHECK(found);
}

TEST_CASE("validate flags builtin arity misuse") {
    const dsl::RewardProgram p = dsl::parse(
        "def get_reward(current_step, action, target, wgt):\n    return min(wgt)\n");
    const dsl::ValidationReport report = dsl::validate(p);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].code == "arity");
}

TEST_CASE("validate flags non-finite literals") {
    const dsl::RewardProgram p = dsl::parse(
        "def get_reward(current_step, action, target, wgt):\n    return wgt * 1e999\n");
    const dsl::ValidationReport report = dsl::validate(p);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].code == "non-finite-literal");
}

TEST_CASE("validate reports unknown identifiers on a hand-built program") {
    dsl::RewardProgram p = dsl::parse(kValidTiny);
    p.body.return_expr.kind = dsl::Expr::Kind::Ident;
    p.body.return_expr.name = "mystery";
    p.body.return_expr.args.clear();
    const dsl::ValidationReport report = dsl::validate(p);
    REQUIRE_FALSE(report.ok());
    CHECK(report.violations[0].code == "unknown-identifier");
    CHECK(report.violations[0].message.find("mystery") != std::string::npos);
}

TEST_CASE("evaluate matches the hand-derived zero-shot value") {
    const dsl::RewardProgram p = dsl::parse(dsl::evolved_zero_shot_source());
    const Eigen::ArrayXd r = dsl::evaluate(p, grid_ctx(0, 1, 1, 100));
    CHECK(r[0] == doctest::Approx(1.2).epsilon(1e-12));
}

TEST_CASE("guarded math raises evaluation errors") {
    const dsl::RewardProgram div = dsl::parse(
        "def get_reward(current_step, action, target, wgt):\n    return wgt / (wgt - wgt)\n");
    CHECK_THROWS_WITH_AS(dsl::evaluate(div, grid_ctx(0, 1, 1, 10)),
                         doctest::Contains("division by zero"), DslEvalError);

    const dsl::RewardProgram log = dsl::parse(
        "def get_reward(current_step, action, target, wgt):\n    return log(0 - wgt)\n");
    CHECK_THROWS_WITH_AS(dsl::evaluate(log, grid_ctx(0, 1, 1, 10)),
                         doctest::Contains("log of non-positive"), DslEvalError);
}

TEST_CASE("DSL transcriptions match the built-in rewards over the exhaustive grid") {
    const dsl::RewardProgram zero = dsl::parse(dsl::evolved_zero_shot_source());
    const dsl::RewardProgram few = dsl::parse(dsl::evolved_few_shot_source());
    const dsl::RewardProgram precision = dsl::parse(dsl::precision_constraint_source(0.5, 0.7));
    const PrecisionRewardParams params;

    const double weights[] = {1, 10, 40, 50, 100};
    for (int step : {0, 1})
        for (double action : {0.0, 1.0})
            for (double target : {0.0, 1.0})
                for (double wgt : weights) {
                    const RewardContext c = grid_ctx(step, action, target, wgt);
                    CHECK(dsl::evaluate(zero, c)[0] ==
                          doctest::Approx(evolved_zero_shot_reward(c)[0]).epsilon(1e-9));
                    CHECK(dsl::evaluate(few, c)[0] ==
                          doctest::Approx(evolved_few_shot_reward(c)[0]).epsilon(1e-9));
                    CHECK(dsl::evaluate(precision, c)[0] ==
                          doctest::Approx(precision_reward(c, params)[0]).epsilon(1e-9));
                }
}

TEST_CASE("branches select on current_step with else and fallback") {
    const std::string src =
        "def get_reward(current_step, action, target, wgt):\n"
        "    if current_step == 0:\n"
        "        return wgt * 1\n"
        "    else:\n"
        "        return wgt * 2\n"
        "    return wgt * 3\n";
    const dsl::RewardProgram p = dsl::parse(src);
    CHECK(dsl::evaluate(p, grid_ctx(0, 1, 1, 10))[0] == doctest::Approx(10.0));
    CHECK(dsl::evaluate(p, grid_ctx(1, 1, 1, 10))[0] == doctest::Approx(20.0));

    const std::string fallthrough =
        "def get_reward(current_step, action, target, wgt):\n"
        "    if current_step == 0:\n"
        "        return wgt * 1\n"
        "    return wgt * 9\n";
    const dsl::RewardProgram q = dsl::parse(fallthrough);
    CHECK(dsl::evaluate(q, grid_ctx(1, 1, 1, 10))[0] == doctest::Approx(90.0));
}

TEST_CASE("comparison and boolean operators produce 0/1 vectors") {
    const std::string src =
        "def get_reward(current_step, action, target, wgt):\n"
        "    return ((action == 1) & (target == 1)) * wgt - !(wgt < 50) * 2\n";
    const dsl::RewardProgram p = dsl::parse(src);
    CHECK(dsl::evaluate(p, grid_ctx(0, 1, 1, 100))[0] == doctest::Approx(98.0));
    CHECK(dsl::evaluate(p, grid_ctx(0, 0, 1, 10))[0] == doctest::Approx(0.0));
}

TEST_CASE("builtins clip, min, max, abs and exp behave elementwise") {
    const std::string src =
        "def get_reward(current_step, action, target, wgt):\n"
        "    let capped = clip(wgt, 5, 50)\n"
        "    return min(capped, wgt) + max(abs(0 - wgt), exp(0 * wgt))\n";
    const dsl::RewardProgram p = dsl::parse(src);
    // wgt = 100: clip -> 50, min(50, 100) = 50, max(|-100|, 1) = 100.
    CHECK(dsl::evaluate(p, grid_ctx(0, 1, 1, 100))[0] == doctest::Approx(150.0));
    // wgt = 2: clip -> 5, min(5, 2) = 2, max(2, 1) = 2.
    CHECK(dsl::evaluate(p, grid_ctx(0, 1, 1, 2))[0] == doctest::Approx(4.0));
}

TEST_CASE("to_source reaches a fixed point and preserves semantics") {
    for (const std::string& src :
         {dsl::evolved_zero_shot_source(), dsl::evolved_few_shot_source(), kValidTiny}) {
        const dsl::RewardProgram p = dsl::parse(src);
        const std::string once = dsl::to_source(p);
        const dsl::RewardProgram p2 = dsl::parse(once);
        CHECK(dsl::to_source(p2) == once);
        const RewardContext c = grid_ctx(0, 1, 1, 40);
        CHECK(dsl::evaluate(p2, c)[0] == doctest::Approx(dsl::evaluate(p, c)[0]).epsilon(1e-12));
    }
}

TEST_CASE("make_reward_fn adapts a program to the reward interface") {
    auto program = std::make_shared<const dsl::RewardProgram>(dsl::parse(kValidTiny));
    const RewardFn fn = dsl::make_reward_fn(program);
    const Eigen::ArrayXd r = fn(grid_ctx(0, 1, 1, 7));
    CHECK(r[0] == doctest::Approx(7.0));
}

TEST_CASE("grammar text names the signature and the builtins") {
    const std::string g = dsl::grammar_text();
    CHECK(g.find("get_reward") != std::string::npos);
    CHECK(g.find("clip") != std::string::npos);
    CHECK(g.find("depth 64") != std::string::npos);
}

}  // TEST_SUITE
