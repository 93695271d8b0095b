#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trisk/errors.hpp"
#include "trisk/rewards.hpp"

namespace trisk {
// Raised by extract_program when no complete fenced block exists.
struct ExtractionError : Error {
    using Error::Error;
};
}  // namespace trisk

namespace trisk::dsl {

// AST for the restricted reward expression language:
//
//   program := "def" "get_reward" "(" "current_step" "," "action" "," "target" "," "wgt" ")" ":" body
//   body    := { "let" IDENT "=" expr } [ branch ] "return" expr
//   branch  := "if" "current_step" "==" INT ":" body
//              { "elif" "current_step" "==" INT ":" body } [ "else" ":" body ]
//   expr    := arithmetic over (IDENT | NUMBER | "(" expr ")" | call | comparison | boolean-ops)
//   call    := ("min" | "max" | "abs" | "clip" | "log" | "exp") "(" expr {"," expr} ")"
//
// comparisons: == != < <= > >= ; boolean: & | ! ;
// precedence (tightest first): unary, * /, + -, comparisons, &, |.
//
// Lexically, newlines are ordinary whitespace, '#' starts a line comment and a
// backslash before a newline is a continuation. There are no loops, no
// recursion and no identifiers beyond the four parameters, let-bound names and
// the six builtins.

enum class BinOp { Add, Sub, Mul, Div, Eq, Ne, Lt, Le, Gt, Ge, And, Or };
enum class UnOp { Neg, Not };
enum class BuiltinFn { Min, Max, Abs, Clip, Log, Exp };

struct Expr {
    enum class Kind { Number, Ident, Unary, Binary, Call };
    Kind kind = Kind::Number;
    double number = 0.0;    // Kind::Number
    std::string name;       // Kind::Ident
    UnOp un = UnOp::Neg;    // Kind::Unary
    BinOp bin = BinOp::Add; // Kind::Binary
    BuiltinFn fn = BuiltinFn::Min;  // Kind::Call
    std::vector<Expr> args; // children (1 for unary, 2 for binary, n for call)
    int line = 0;
    int col = 0;
};

struct LetBinding {
    std::string name;
    Expr value;
    int line = 0;
    int col = 0;
};

struct Branch;

struct Body {
    std::vector<LetBinding> lets;
    std::vector<Branch> branch;  // empty or exactly one
    Expr return_expr;
};

struct BranchArm {
    int step_value = 0;
    Body body;
};

struct Branch {
    std::vector<BranchArm> arms;  // the if plus any elifs
    std::vector<Body> else_body;  // empty or exactly one
};

struct RewardProgram {
    Body body;
    std::string source;
};

// Returns the contents of the first triple-backtick fenced block of an LLM
// reply (any info string on the fence line is dropped). Throws
// ExtractionError when there is no complete fenced block.
std::string extract_program(const std::string& llm_text);

// Throws DslParseError (with position) on any grammar, signature or unknown
// identifier problem.
RewardProgram parse(const std::string& source);

struct Violation {
    std::string code;  // "unknown-identifier", "arity", "non-vector-return",
                       // "depth", "non-finite-literal", "builtin-misuse"
    std::string message;
    int line = 0;
    int col = 0;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

// Structural checks beyond the grammar: identifier whitelist, builtin arity,
// AST depth bound (64), numeric literal finiteness, and vector-typed returns
// on every branch. Never throws; every problem maps to a coded violation.
ValidationReport validate(const RewardProgram& p);

// Evaluates a validated program on a batch. Division by zero, log of a
// non-positive value and non-finite results raise DslEvalError.
Eigen::ArrayXd evaluate(const RewardProgram& p, const RewardContext& ctx);

// Canonical normal form: one statement per line, expressions fully
// parenthesized. parse(to_source(parse(s))) is a fixed point.
std::string to_source(const RewardProgram& p);

// Wraps a parsed program as a RewardFn sharing ownership of the AST.
RewardFn make_reward_fn(std::shared_ptr<const RewardProgram> p);

// Reference programs in DSL form, equivalent to the built-in rewards.
std::string precision_constraint_source(double alpha_step0, double alpha_step1);
std::string evolved_zero_shot_source();
std::string evolved_few_shot_source();

// Grammar and usage notes shipped to code-generation prompts; describes
// exactly what parse/validate accept.
std::string grammar_text();

}  // namespace trisk::dsl
