#include "trisk/reward_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>

namespace trisk::dsl {

namespace {

// ====================== lexer ======================

enum class Tok {
    KwDef,
    KwLet,
    KwIf,
    KwElif,
    KwElse,
    KwReturn,
    Ident,
    Number,
    LParen,
    RParen,
    Colon,
    Comma,
    Assign,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Amp,
    Pipe,
    Bang,
    End,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(const std::string& src) {
    std::vector<Token> out;
    int line = 1;
    int col = 1;
    std::size_t i = 0;
    auto bump = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k) {
            if (src[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < src.size()) {
        const char c = src[i];
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') bump(1);
            continue;
        }
        if (c == '\\' && i + 1 < src.size() && (src[i + 1] == '\n' || src[i + 1] == '\r')) {
            bump(src[i + 1] == '\r' && i + 2 < src.size() && src[i + 2] == '\n' ? 3 : 2);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            bump(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < src.size() && ident_char(src[j])) ++j;
            t.text = src.substr(i, j - i);
            if (t.text == "def")
                t.kind = Tok::KwDef;
            else if (t.text == "let")
                t.kind = Tok::KwLet;
            else if (t.text == "if")
                t.kind = Tok::KwIf;
            else if (t.text == "elif")
                t.kind = Tok::KwElif;
            else if (t.text == "else")
                t.kind = Tok::KwElse;
            else if (t.text == "return")
                t.kind = Tok::KwReturn;
            else
                t.kind = Tok::Ident;
            bump(j - i);
            out.push_back(t);
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::size_t j = i;
            while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.'))
                ++j;
            if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
                if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
                    ++k;
                    while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
                    j = k;
                }
            }
            t.text = src.substr(i, j - i);
            char* end = nullptr;
            t.number = std::strtod(t.text.c_str(), &end);
            if (end != t.text.c_str() + t.text.size())
                throw DslParseError("bad numeric literal '" + t.text + "'", line, col);
            t.kind = Tok::Number;
            bump(j - i);
            out.push_back(t);
            continue;
        }
        auto two = [&](char a, char b) {
            return c == a && i + 1 < src.size() && src[i + 1] == b;
        };
        if (two('=', '=')) {
            t.kind = Tok::Eq;
            t.text = "==";
            bump(2);
        } else if (two('!', '=')) {
            t.kind = Tok::Ne;
            t.text = "!=";
            bump(2);
        } else if (two('<', '=')) {
            t.kind = Tok::Le;
            t.text = "<=";
            bump(2);
        } else if (two('>', '=')) {
            t.kind = Tok::Ge;
            t.text = ">=";
            bump(2);
        } else {
            switch (c) {
                case '(': t.kind = Tok::LParen; break;
                case ')': t.kind = Tok::RParen; break;
                case ':': t.kind = Tok::Colon; break;
                case ',': t.kind = Tok::Comma; break;
                case '=': t.kind = Tok::Assign; break;
                case '+': t.kind = Tok::Plus; break;
                case '-': t.kind = Tok::Minus; break;
                case '*': t.kind = Tok::Star; break;
                case '/': t.kind = Tok::Slash; break;
                case '<': t.kind = Tok::Lt; break;
                case '>': t.kind = Tok::Gt; break;
                case '&': t.kind = Tok::Amp; break;
                case '|': t.kind = Tok::Pipe; break;
                case '!': t.kind = Tok::Bang; break;
                default:
                    throw DslParseError(std::string("unexpected character '") + c + "'", line, col);
            }
            t.text = std::string(1, c);
            bump(1);
        }
        out.push_back(t);
    }
    Token end;
    end.kind = Tok::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

// ====================== parser ======================

const char* kParamNames[4] = {"current_step", "action", "target", "wgt"};

std::optional<BuiltinFn> builtin_by_name(const std::string& n) {
    if (n == "min") return BuiltinFn::Min;
    if (n == "max") return BuiltinFn::Max;
    if (n == "abs") return BuiltinFn::Abs;
    if (n == "clip") return BuiltinFn::Clip;
    if (n == "log") return BuiltinFn::Log;
    if (n == "exp") return BuiltinFn::Exp;
    return std::nullopt;
}

const char* builtin_name(BuiltinFn f) {
    switch (f) {
        case BuiltinFn::Min: return "min";
        case BuiltinFn::Max: return "max";
        case BuiltinFn::Abs: return "abs";
        case BuiltinFn::Clip: return "clip";
        case BuiltinFn::Log: return "log";
        case BuiltinFn::Exp: return "exp";
    }
    return "?";
}

class Parser {
public:
    explicit Parser(const std::string& src) : toks_(lex(src)) {}

    RewardProgram parse_program(const std::string& src) {
        expect(Tok::KwDef, "expected 'def'");
        const Token& name = expect(Tok::Ident, "expected 'get_reward'");
        if (name.text != "get_reward")
            throw DslParseError("function must be named get_reward, got '" + name.text + "'",
                                name.line, name.col);
        expect(Tok::LParen, "expected '('");
        for (int p = 0; p < 4; ++p) {
            const Token& param = expect(Tok::Ident, "expected parameter name");
            if (param.text != kParamNames[p])
                throw DslParseError("signature must be get_reward(current_step, action, target, "
                                    "wgt); parameter " + std::to_string(p + 1) + " is '" +
                                    param.text + "'",
                                    param.line, param.col);
            if (p < 3) expect(Tok::Comma, "expected ','");
        }
        expect(Tok::RParen, "expected ')'");
        expect(Tok::Colon, "expected ':'");
        scopes_.push_back({kParamNames[0], kParamNames[1], kParamNames[2], kParamNames[3]});
        RewardProgram prog;
        prog.body = parse_body();
        prog.source = src;
        const Token& t = peek();
        if (t.kind != Tok::End)
            throw DslParseError("unexpected token '" + t.text + "' after program end", t.line,
                                t.col);
        return prog;
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    const Token& advance() { return toks_[pos_++]; }

    const Token& expect(Tok k, const std::string& what) {
        const Token& t = peek();
        if (t.kind != k) {
            const std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
            throw DslParseError(what + ", got " + got, t.line, t.col);
        }
        return advance();
    }

    bool in_scope(const std::string& name) const {
        for (const auto& frame : scopes_)
            if (std::find(frame.begin(), frame.end(), name) != frame.end()) return true;
        return false;
    }

    Body parse_body() {
        Body body;
        scopes_.push_back({});
        while (peek().kind == Tok::KwLet) {
            advance();
            const Token& name = expect(Tok::Ident, "expected binding name after 'let'");
            if (builtin_by_name(name.text))
                throw DslParseError("cannot bind builtin name '" + name.text + "'", name.line,
                                    name.col);
            if (in_scope(name.text))
                throw DslParseError("redefinition of '" + name.text + "'", name.line, name.col);
            expect(Tok::Assign, "expected '=' in let binding");
            LetBinding b;
            b.name = name.text;
            b.line = name.line;
            b.col = name.col;
            b.value = parse_expr();
            scopes_.back().push_back(b.name);
            body.lets.push_back(std::move(b));
        }
        if (peek().kind == Tok::KwIf) body.branch.push_back(parse_branch());
        expect(Tok::KwReturn, "expected 'return'");
        body.return_expr = parse_expr();
        scopes_.pop_back();
        return body;
    }

    Branch parse_branch() {
        Branch br;
        bool first = true;
        while (peek().kind == (first ? Tok::KwIf : Tok::KwElif)) {
            advance();
            const Token& head = expect(Tok::Ident, "expected 'current_step' in branch condition");
            if (head.text != "current_step")
                throw DslParseError("branch condition must test current_step", head.line, head.col);
            expect(Tok::Eq, "expected '==' in branch condition");
            const Token& num = expect(Tok::Number, "expected integer step value");
            if (!std::all_of(num.text.begin(), num.text.end(),
                             [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
                throw DslParseError("step value must be an integer literal, got '" + num.text + "'",
                                    num.line, num.col);
            expect(Tok::Colon, "expected ':' after branch condition");
            BranchArm arm;
            arm.step_value = static_cast<int>(num.number);
            arm.body = parse_body();
            br.arms.push_back(std::move(arm));
            first = false;
            if (peek().kind != Tok::KwElif && peek().kind != Tok::KwElse) break;
        }
        if (peek().kind == Tok::KwElse) {
            advance();
            expect(Tok::Colon, "expected ':' after else");
            br.else_body.push_back(parse_body());
        }
        return br;
    }

    Expr parse_expr() {
        if (++expr_depth_ > 256) {
            const Token& t = peek();
            throw DslParseError("expression too deeply nested", t.line, t.col);
        }
        Expr e = parse_or();
        --expr_depth_;
        return e;
    }

    Expr binary(BinOp op, Expr lhs, Expr rhs, const Token& at) {
        Expr e;
        e.kind = Expr::Kind::Binary;
        e.bin = op;
        e.line = at.line;
        e.col = at.col;
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

    Expr parse_or() {
        Expr e = parse_and();
        while (peek().kind == Tok::Pipe) {
            const Token& t = advance();
            e = binary(BinOp::Or, std::move(e), parse_and(), t);
        }
        return e;
    }

    Expr parse_and() {
        Expr e = parse_cmp();
        while (peek().kind == Tok::Amp) {
            const Token& t = advance();
            e = binary(BinOp::And, std::move(e), parse_cmp(), t);
        }
        return e;
    }

    Expr parse_cmp() {
        Expr e = parse_add();
        for (;;) {
            BinOp op;
            switch (peek().kind) {
                case Tok::Eq: op = BinOp::Eq; break;
                case Tok::Ne: op = BinOp::Ne; break;
                case Tok::Lt: op = BinOp::Lt; break;
                case Tok::Le: op = BinOp::Le; break;
                case Tok::Gt: op = BinOp::Gt; break;
                case Tok::Ge: op = BinOp::Ge; break;
                default: return e;
            }
            const Token& t = advance();
            e = binary(op, std::move(e), parse_add(), t);
        }
    }

    Expr parse_add() {
        Expr e = parse_mul();
        for (;;) {
            if (peek().kind == Tok::Plus) {
                const Token& t = advance();
                e = binary(BinOp::Add, std::move(e), parse_mul(), t);
            } else if (peek().kind == Tok::Minus) {
                const Token& t = advance();
                e = binary(BinOp::Sub, std::move(e), parse_mul(), t);
            } else {
                return e;
            }
        }
    }

    Expr parse_mul() {
        Expr e = parse_unary();
        for (;;) {
            if (peek().kind == Tok::Star) {
                const Token& t = advance();
                e = binary(BinOp::Mul, std::move(e), parse_unary(), t);
            } else if (peek().kind == Tok::Slash) {
                const Token& t = advance();
                e = binary(BinOp::Div, std::move(e), parse_unary(), t);
            } else {
                return e;
            }
        }
    }

    Expr parse_unary() {
        if (++expr_depth_ > 256) {
            const Token& t = peek();
            throw DslParseError("expression too deeply nested", t.line, t.col);
        }
        Expr out;
        if (peek().kind == Tok::Minus || peek().kind == Tok::Bang) {
            const Token& t = advance();
            Expr e;
            e.kind = Expr::Kind::Unary;
            e.un = t.kind == Tok::Minus ? UnOp::Neg : UnOp::Not;
            e.line = t.line;
            e.col = t.col;
            e.args.push_back(parse_unary());
            out = std::move(e);
        } else {
            out = parse_primary();
        }
        --expr_depth_;
        return out;
    }

    Expr parse_primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            advance();
            Expr e;
            e.kind = Expr::Kind::Number;
            e.number = t.number;
            e.line = t.line;
            e.col = t.col;
            return e;
        }
        if (t.kind == Tok::LParen) {
            advance();
            Expr e = parse_expr();
            expect(Tok::RParen, "expected ')'");
            return e;
        }
        if (t.kind == Tok::Ident) {
            advance();
            if (auto fn = builtin_by_name(t.text)) {
                if (peek().kind != Tok::LParen)
                    throw DslParseError("builtin '" + t.text + "' must be called", t.line, t.col);
                advance();
                Expr e;
                e.kind = Expr::Kind::Call;
                e.fn = *fn;
                e.line = t.line;
                e.col = t.col;
                e.args.push_back(parse_expr());
                while (peek().kind == Tok::Comma) {
                    advance();
                    e.args.push_back(parse_expr());
                }
                expect(Tok::RParen, "expected ')' after call arguments");
                return e;
            }
            if (!in_scope(t.text))
                throw DslParseError("unknown identifier '" + t.text + "'", t.line, t.col);
            Expr e;
            e.kind = Expr::Kind::Ident;
            e.name = t.text;
            e.line = t.line;
            e.col = t.col;
            return e;
        }
        const std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw DslParseError("expected expression, got " + got, t.line, t.col);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::vector<std::vector<std::string>> scopes_;
    int expr_depth_ = 0;
};

// ====================== validation ======================

constexpr int kMaxDepth = 64;

struct TypeScope {
    // name -> is_vector
    std::vector<std::map<std::string, bool>> frames;

    const bool* lookup(const std::string& n) const {
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
            auto f = it->find(n);
            if (f != it->end()) return &f->second;
        }
        return nullptr;
    }
};

struct Validator {
    std::vector<Violation> out;

    void report(const std::string& code, const std::string& msg, int line, int col) {
        out.push_back({code, msg, line, col});
    }

    int expr_depth(const Expr& e) {
        int d = 0;
        for (const Expr& a : e.args) d = std::max(d, expr_depth(a));
        return d + 1;
    }

    // Returns whether the expression is vector-typed.
    bool infer(const Expr& e, const TypeScope& scope) {
        switch (e.kind) {
            case Expr::Kind::Number:
                if (!std::isfinite(e.number))
                    report("non-finite-literal", "numeric literal is not finite", e.line, e.col);
                return false;
            case Expr::Kind::Ident: {
                const bool* t = scope.lookup(e.name);
                if (!t) {
                    report("unknown-identifier", "unknown identifier '" + e.name + "'", e.line,
                           e.col);
                    return true;
                }
                return *t;
            }
            case Expr::Kind::Unary:
                return infer(e.args[0], scope);
            case Expr::Kind::Binary: {
                const bool l = infer(e.args[0], scope);
                const bool r = infer(e.args[1], scope);
                return l || r;
            }
            case Expr::Kind::Call: {
                std::size_t want = 0;
                switch (e.fn) {
                    case BuiltinFn::Min:
                    case BuiltinFn::Max: want = 2; break;
                    case BuiltinFn::Clip: want = 3; break;
                    case BuiltinFn::Abs:
                    case BuiltinFn::Log:
                    case BuiltinFn::Exp: want = 1; break;
                }
                if (e.args.size() != want)
                    report("arity", std::string(builtin_name(e.fn)) + " takes " +
                                        std::to_string(want) + " argument(s), got " +
                                        std::to_string(e.args.size()),
                           e.line, e.col);
                bool vec = false;
                for (const Expr& a : e.args) vec = infer(a, scope) || vec;
                return vec;
            }
        }
        return false;
    }

    void check_body(const Body& body, TypeScope& scope, int depth) {
        if (depth > kMaxDepth) return;  // depth violation already reported at the top
        scope.frames.push_back({});
        for (const LetBinding& b : body.lets) {
            const bool vec = infer(b.value, scope);
            scope.frames.back()[b.name] = vec;
        }
        if (!body.branch.empty()) {
            for (const BranchArm& arm : body.branch[0].arms) check_body(arm.body, scope, depth + 1);
            if (!body.branch[0].else_body.empty())
                check_body(body.branch[0].else_body[0], scope, depth + 1);
        }
        const bool vec = infer(body.return_expr, scope);
        if (!vec)
            report("non-vector-return", "return expression must be vector-typed",
                   body.return_expr.line, body.return_expr.col);
        scope.frames.pop_back();
    }

    int body_depth(const Body& body) {
        int d = 0;
        for (const LetBinding& b : body.lets) d = std::max(d, expr_depth(b.value));
        d = std::max(d, expr_depth(body.return_expr));
        if (!body.branch.empty()) {
            int inner = 0;
            for (const BranchArm& arm : body.branch[0].arms)
                inner = std::max(inner, body_depth(arm.body));
            if (!body.branch[0].else_body.empty())
                inner = std::max(inner, body_depth(body.branch[0].else_body[0]));
            d = std::max(d, inner + 1);
        }
        return d;
    }
};

// ====================== evaluation ======================

struct Value {
    bool is_vec = false;
    double s = 0.0;
    Eigen::ArrayXd v;
};

struct EvalScope {
    std::vector<std::map<std::string, Value>> frames;

    const Value* lookup(const std::string& n) const {
        for (auto it = frames.rbegin(); it != frames.rend(); ++it) {
            auto f = it->find(n);
            if (f != it->end()) return &f->second;
        }
        return nullptr;
    }
};

Eigen::ArrayXd broadcast(const Value& x, Eigen::Index n) {
    if (x.is_vec) return x.v;
    return Eigen::ArrayXd::Constant(n, x.s);
}

template <typename ScalarOp>
Value apply_binary(const Value& a, const Value& b, ScalarOp op) {
    if (!a.is_vec && !b.is_vec) return {false, op(a.s, b.s), {}};
    const Eigen::Index n = a.is_vec ? a.v.size() : b.v.size();
    const Eigen::ArrayXd av = broadcast(a, n);
    const Eigen::ArrayXd bv = broadcast(b, n);
    if (av.size() != bv.size()) throw DslEvalError("vector length mismatch");
    Value out;
    out.is_vec = true;
    out.v = av.binaryExpr(bv, op);
    return out;
}

template <typename ScalarOp>
Value apply_unary(const Value& a, ScalarOp op) {
    if (!a.is_vec) return {false, op(a.s), {}};
    Value out;
    out.is_vec = true;
    out.v = a.v.unaryExpr(op);
    return out;
}

bool any_zero(const Value& x) {
    if (!x.is_vec) return x.s == 0.0;
    return (x.v == 0.0).any();
}

bool any_nonpositive(const Value& x) {
    if (!x.is_vec) return x.s <= 0.0;
    return (x.v <= 0.0).any();
}

struct Evaluator {
    int current_step;

    Value eval(const Expr& e, const EvalScope& scope) {
        switch (e.kind) {
            case Expr::Kind::Number:
                return {false, e.number, {}};
            case Expr::Kind::Ident: {
                const Value* v = scope.lookup(e.name);
                if (!v) throw DslEvalError("unknown identifier '" + e.name + "'");
                return *v;
            }
            case Expr::Kind::Unary: {
                const Value a = eval(e.args[0], scope);
                if (e.un == UnOp::Neg) return apply_unary(a, [](double x) { return -x; });
                return apply_unary(a, [](double x) { return x == 0.0 ? 1.0 : 0.0; });
            }
            case Expr::Kind::Binary:
                return eval_binary(e, scope);
            case Expr::Kind::Call:
                return eval_call(e, scope);
        }
        throw DslEvalError("malformed expression node");
    }

    Value eval_binary(const Expr& e, const EvalScope& scope) {
        const Value a = eval(e.args[0], scope);
        const Value b = eval(e.args[1], scope);
        switch (e.bin) {
            case BinOp::Add: return apply_binary(a, b, [](double x, double y) { return x + y; });
            case BinOp::Sub: return apply_binary(a, b, [](double x, double y) { return x - y; });
            case BinOp::Mul: return apply_binary(a, b, [](double x, double y) { return x * y; });
            case BinOp::Div:
                if (any_zero(b)) throw DslEvalError("division by zero");
                return apply_binary(a, b, [](double x, double y) { return x / y; });
            case BinOp::Eq:
                return apply_binary(a, b, [](double x, double y) { return x == y ? 1.0 : 0.0; });
            case BinOp::Ne:
                return apply_binary(a, b, [](double x, double y) { return x != y ? 1.0 : 0.0; });
            case BinOp::Lt:
                return apply_binary(a, b, [](double x, double y) { return x < y ? 1.0 : 0.0; });
            case BinOp::Le:
                return apply_binary(a, b, [](double x, double y) { return x <= y ? 1.0 : 0.0; });
            case BinOp::Gt:
                return apply_binary(a, b, [](double x, double y) { return x > y ? 1.0 : 0.0; });
            case BinOp::Ge:
                return apply_binary(a, b, [](double x, double y) { return x >= y ? 1.0 : 0.0; });
            case BinOp::And:
                return apply_binary(a, b, [](double x, double y) {
                    return x != 0.0 && y != 0.0 ? 1.0 : 0.0;
                });
            case BinOp::Or:
                return apply_binary(a, b, [](double x, double y) {
                    return x != 0.0 || y != 0.0 ? 1.0 : 0.0;
                });
        }
        throw DslEvalError("malformed binary node");
    }

    Value eval_call(const Expr& e, const EvalScope& scope) {
        std::vector<Value> args;
        args.reserve(e.args.size());
        for (const Expr& a : e.args) args.push_back(eval(a, scope));
        auto want = [&](std::size_t n) {
            if (args.size() != n)
                throw DslEvalError(std::string(builtin_name(e.fn)) + ": wrong argument count");
        };
        switch (e.fn) {
            case BuiltinFn::Min:
                want(2);
                return apply_binary(args[0], args[1],
                                    [](double x, double y) { return std::fmin(x, y); });
            case BuiltinFn::Max:
                want(2);
                return apply_binary(args[0], args[1],
                                    [](double x, double y) { return std::fmax(x, y); });
            case BuiltinFn::Abs:
                want(1);
                return apply_unary(args[0], [](double x) { return std::fabs(x); });
            case BuiltinFn::Log:
                want(1);
                if (any_nonpositive(args[0]))
                    throw DslEvalError("log of non-positive value");
                return apply_unary(args[0], [](double x) { return std::log(x); });
            case BuiltinFn::Exp:
                want(1);
                return apply_unary(args[0], [](double x) { return std::exp(x); });
            case BuiltinFn::Clip: {
                want(3);
                const Value lo = apply_binary(args[0], args[1],
                                              [](double x, double y) { return std::fmax(x, y); });
                return apply_binary(lo, args[2],
                                    [](double x, double y) { return std::fmin(x, y); });
            }
        }
        throw DslEvalError("malformed call node");
    }

    // Evaluates a body; lets are evaluated eagerly in order.
    Value eval_body(const Body& body, EvalScope& scope) {
        scope.frames.push_back({});
        for (const LetBinding& b : body.lets) scope.frames.back()[b.name] = eval(b.value, scope);
        Value result;
        bool done = false;
        if (!body.branch.empty()) {
            const Branch& br = body.branch[0];
            for (const BranchArm& arm : br.arms) {
                if (arm.step_value == current_step) {
                    result = eval_body(arm.body, scope);
                    done = true;
                    break;
                }
            }
            if (!done && !br.else_body.empty()) {
                result = eval_body(br.else_body[0], scope);
                done = true;
            }
        }
        if (!done) result = eval(body.return_expr, scope);
        scope.frames.pop_back();
        return result;
    }
};

// ====================== pretty printer ======================

std::string fmt_number(double x) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void print_expr(const Expr& e, std::string& out) {
    switch (e.kind) {
        case Expr::Kind::Number:
            out += fmt_number(e.number);
            return;
        case Expr::Kind::Ident:
            out += e.name;
            return;
        case Expr::Kind::Unary:
            out += '(';
            out += e.un == UnOp::Neg ? '-' : '!';
            print_expr(e.args[0], out);
            out += ')';
            return;
        case Expr::Kind::Binary: {
            const char* op = "?";
            switch (e.bin) {
                case BinOp::Add: op = "+"; break;
                case BinOp::Sub: op = "-"; break;
                case BinOp::Mul: op = "*"; break;
                case BinOp::Div: op = "/"; break;
                case BinOp::Eq: op = "=="; break;
                case BinOp::Ne: op = "!="; break;
                case BinOp::Lt: op = "<"; break;
                case BinOp::Le: op = "<="; break;
                case BinOp::Gt: op = ">"; break;
                case BinOp::Ge: op = ">="; break;
                case BinOp::And: op = "&"; break;
                case BinOp::Or: op = "|"; break;
            }
            out += '(';
            print_expr(e.args[0], out);
            out += ' ';
            out += op;
            out += ' ';
            print_expr(e.args[1], out);
            out += ')';
            return;
        }
        case Expr::Kind::Call: {
            out += builtin_name(e.fn);
            out += '(';
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out += ", ";
                print_expr(e.args[i], out);
            }
            out += ')';
            return;
        }
    }
}

void print_body(const Body& body, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent) * 4, ' ');
    for (const LetBinding& b : body.lets) {
        out += pad + "let " + b.name + " = ";
        print_expr(b.value, out);
        out += '\n';
    }
    if (!body.branch.empty()) {
        const Branch& br = body.branch[0];
        for (std::size_t i = 0; i < br.arms.size(); ++i) {
            out += pad + (i == 0 ? "if" : "elif");
            out += " current_step == " + std::to_string(br.arms[i].step_value) + ":\n";
            print_body(br.arms[i].body, indent + 1, out);
        }
        if (!br.else_body.empty()) {
            out += pad + "else:\n";
            print_body(br.else_body[0], indent + 1, out);
        }
    }
    out += pad + "return ";
    print_expr(body.return_expr, out);
    out += '\n';
}

}  // namespace

// ====================== public entry points ======================

std::string extract_program(const std::string& llm_text) {
    const std::size_t open = llm_text.find("```");
    if (open == std::string::npos) throw ExtractionError("no fenced code block found");
    std::size_t start = llm_text.find('\n', open + 3);
    if (start == std::string::npos) throw ExtractionError("unterminated code block");
    ++start;  // content begins after the fence line (info string dropped)
    const std::size_t close = llm_text.find("```", start);
    if (close == std::string::npos) throw ExtractionError("unterminated code block");
    return llm_text.substr(start, close - start);
}

RewardProgram parse(const std::string& source) {
    Parser p(source);
    return p.parse_program(source);
}

ValidationReport validate(const RewardProgram& p) {
    Validator v;
    const int depth = v.body_depth(p.body);
    if (depth > kMaxDepth)
        v.report("depth", "AST depth " + std::to_string(depth) + " exceeds bound " +
                              std::to_string(kMaxDepth),
                 0, 0);
    TypeScope scope;
    scope.frames.push_back({{"current_step", false}, {"action", true}, {"target", true},
                            {"wgt", true}});
    v.check_body(p.body, scope, 1);
    return ValidationReport{std::move(v.out)};
}

Eigen::ArrayXd evaluate(const RewardProgram& p, const RewardContext& ctx) {
    ctx.validate();
    Evaluator ev;
    ev.current_step = ctx.current_step;
    EvalScope scope;
    scope.frames.push_back({});
    scope.frames.back()["current_step"] = {false, static_cast<double>(ctx.current_step), {}};
    scope.frames.back()["action"] = {true, 0.0, ctx.action};
    scope.frames.back()["target"] = {true, 0.0, ctx.target};
    scope.frames.back()["wgt"] = {true, 0.0, ctx.wgt};
    const Value result = ev.eval_body(p.body, scope);
    if (!result.is_vec) throw DslEvalError("reward expression returned a scalar");
    if (result.v.size() != ctx.action.size())
        throw DslEvalError("reward vector length mismatch");
    if (!result.v.isFinite().all()) throw DslEvalError("non-finite reward value");
    return result.v;
}

std::string to_source(const RewardProgram& p) {
    std::string out = "def get_reward(current_step, action, target, wgt):\n";
    print_body(p.body, 1, out);
    return out;
}

RewardFn make_reward_fn(std::shared_ptr<const RewardProgram> p) {
    return [p](const RewardContext& ctx) { return evaluate(*p, ctx); };
}

std::string precision_constraint_source(double alpha_step0, double alpha_step1) {
    const std::string a0 = fmt_number(alpha_step0);
    const std::string a1 = fmt_number(alpha_step1);
    return "def get_reward(current_step, action, target, wgt):\n"
           "    let blocked_fraud = action * target * wgt\n"
           "    let blocked_legit = action * (1 - target) * wgt\n"
           "    if current_step == 0:\n"
           "        return (1 - " + a0 + ") * blocked_fraud - " + a0 + " * blocked_legit\n"
           "    elif current_step == 1:\n"
           "        return (1 - " + a1 + ") * blocked_fraud - " + a1 + " * blocked_legit\n"
           "    return 0 * wgt\n";
}

std::string evolved_zero_shot_source() {
    return "def get_reward(current_step, action, target, wgt):\n"
           "    let base = action * target * wgt\n"
           "    let fn = (1 - action) * target * wgt\n"
           "    let fp = action * (1 - target) * wgt\n"
           "    let low_weight_penalty = action * (wgt < 50)\n"
           "    if current_step == 0:\n"
           "        return (base * 1.2 - fn * 0.5 - fp * 0.1 - low_weight_penalty * 0.005) / wgt\n"
           "    elif current_step == 1:\n"
           "        return (base * 0.9 - fn * 0.5 - fp * 0.1 - low_weight_penalty * 0.005) / wgt\n"
           "    return (base - fn * 0.5 - fp * 0.1 - low_weight_penalty * 0.005) / wgt\n";
}

std::string evolved_few_shot_source() {
    return "def get_reward(current_step, action, target, wgt):\n"
           "    let gamma_positive = 1.15\n"
           "    let gamma_negative = 0.9\n"
           "    let alpha = 1.2\n"
           "    if current_step == 0:\n"
           "        return gamma_positive * (((action == 1) & (target == 1)) * wgt"
           " - ((action == 1) & (target == 0)) * (alpha * 0.005) * wgt"
           " - 0.15 * ((action == 0) & (target == 1)) * wgt)\n"
           "    elif current_step == 1:\n"
           "        return gamma_negative * (((action == 1) & (target == 1)) * wgt"
           " - ((action == 1) & (target == 0)) * (alpha * 0.002) * wgt"
           " - 0.10 * ((action == 0) & (target == 1)) * wgt)\n"
           "    return 0 * wgt\n";
}

std::string grammar_text() {
    return
        "program := \"def\" \"get_reward\" \"(\" \"current_step\" \",\" \"action\" \",\" "
        "\"target\" \",\" \"wgt\" \")\" \":\" body\n"
        "body := { \"let\" IDENT \"=\" expr } [ branch ] \"return\" expr\n"
        "branch := \"if\" \"current_step\" \"==\" INT \":\" body { \"elif\" \"current_step\" "
        "\"==\" INT \":\" body } [ \"else\" \":\" body ]\n"
        "expr := arithmetic over (IDENT | NUMBER | \"(\" expr \")\" | call | comparison | "
        "boolean-ops)\n"
        "call := (\"min\" | \"max\" | \"abs\" | \"clip\" | \"log\" | \"exp\") \"(\" expr {\",\" "
        "expr} \")\"\n"
        "comparisons: == != < <= > >= ; boolean: & | ! ; precedence: unary, * /, + -, "
        "comparisons, &, |.\n"
        "\n"
        "Rules:\n"
        "- action, target and wgt are vectors over the transaction batch; current_step is a "
        "scalar (0 or 1). Scalars broadcast over vectors; comparisons and boolean operators "
        "produce 0/1 values.\n"
        "- every return expression must be vector-typed (multiply by wgt or another vector if "
        "needed, e.g. \"return 0 * wgt\").\n"
        "- the only identifiers allowed are the four parameters, names you introduce with "
        "\"let\", and the builtins min(a, b), max(a, b), abs(x), clip(x, lo, hi), log(x), "
        "exp(x).\n"
        "- no loops, no recursion, no helper functions, no attribute access, no indexing; "
        "expression nesting is limited to depth 64.\n"
        "- the body is a sequence of let bindings, an optional if/elif/else on current_step "
        "whose arms each end in their own return, and a final fallback return.\n"
        "- '#' starts a comment to end of line; a backslash before a newline continues the "
        "line; division by zero and log of a non-positive value are runtime errors.\n";
}

}  // namespace trisk::dsl
