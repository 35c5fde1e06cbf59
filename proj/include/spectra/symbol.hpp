#pragma once

#include <cctype>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "spectra/transform.hpp"

namespace spectra {

/**
 * Expression AST for symbols sigma(x, xi).
 *
 * Grammar (comparisons bind loosest, then +/-, then * and /, then unary
 * minus, then ^ which is right-associative):
 *
 *   compare := expr (("<" | "<=" | "==") expr)?
 *   expr    := term (("+" | "-") term)*
 *   term    := factor (("*" | "/") factor)*
 *   factor  := atom ("^" factor)?
 *   atom    := number | var | func "(" compare {"," compare} ")"
 *            | "(" compare ")" | "-" atom
 *   var     := "norm_x" | "norm_xi" | "bracket_xi"
 *            | "digit" "(" "x" "," int ")"
 *            | "re_char" "(" int ("/" int)? "," "x" ")"
 *   func    := "exp" | "log" | "sin" | "cos" | "abs" | "min" | "max" | "if"
 *
 * Division and log are guarded at evaluation time, not parse time. Nodes are
 * immutable and shared.
 */
class SymbolExpr {
public:
    enum class Kind {
        number, norm_x, norm_xi, bracket_xi, digit, re_char,
        add, sub, mul, div, pow, neg,
        exp_fn, log_fn, sin_fn, cos_fn, abs_fn, min_fn, max_fn, if_fn,
        lt, le, eq
    };

    struct Node {
        Kind kind;
        double number = 0.0;
        std::int64_t digit_index = 0;     // digit
        std::int64_t rat_num = 0, rat_den = 1;  // re_char literal
        int line = 1, col = 1;
        std::vector<std::shared_ptr<const Node>> args;
    };

    using NodePtr = std::shared_ptr<const Node>;

    SymbolExpr() = default;
    explicit SymbolExpr(NodePtr root) : root_(std::move(root)) {}

    const Node& root() const { return *root_; }
    bool valid() const { return root_ != nullptr; }

    /// Canonical text form; parse(print(e)) reproduces the same tree.
    std::string print() const;

    /// True when the expression never reads xi (usable as a multiplier in x).
    bool x_only() const { return x_only(*root_); }

    bool structurally_equal(const SymbolExpr& o) const { return equal(*root_, *o.root_); }

private:
    static bool x_only(const Node& n) {
        if (n.kind == Kind::norm_xi || n.kind == Kind::bracket_xi) return false;
        for (const auto& a : n.args)
            if (!x_only(*a)) return false;
        return true;
    }

    static bool equal(const Node& a, const Node& b) {
        if (a.kind != b.kind || a.args.size() != b.args.size()) return false;
        switch (a.kind) {
            case Kind::number:
                if (a.number != b.number) return false;
                break;
            case Kind::digit:
                if (a.digit_index != b.digit_index) return false;
                break;
            case Kind::re_char:
                if (a.rat_num != b.rat_num || a.rat_den != b.rat_den) return false;
                break;
            default: break;
        }
        for (std::size_t i = 0; i < a.args.size(); ++i)
            if (!equal(*a.args[i], *b.args[i])) return false;
        return true;
    }

    NodePtr root_;
};

namespace detail {

class SymbolParser {
public:
    explicit SymbolParser(std::string_view text) : text_(text) {}

    SymbolExpr::NodePtr parse() {
        auto e = compare();
        skip_ws();
        if (pos_ < text_.size()) fail("end of input");
        return e;
    }

private:
    using Kind = SymbolExpr::Kind;
    using NodePtr = SymbolExpr::NodePtr;

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1, col_ = 1;

    [[noreturn]] void fail(const std::string& expected) const {
        throw SyntaxError(line_, col_, expected);
    }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i, ++pos_) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
        }
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            advance(1);
    }

    bool eat(std::string_view tok) {
        skip_ws();
        if (text_.substr(pos_).starts_with(tok)) {
            advance(tok.size());
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    std::shared_ptr<SymbolExpr::Node> node(Kind k) const {
        auto n = std::make_shared<SymbolExpr::Node>();
        n->kind = k;
        n->line = line_;
        n->col = col_;
        return n;
    }

    NodePtr binary(Kind k, NodePtr a, NodePtr b) {
        auto n = node(k);
        n->args = {std::move(a), std::move(b)};
        return n;
    }

    NodePtr compare() {
        NodePtr a = expr();
        skip_ws();
        if (eat("<=")) return binary(Kind::le, std::move(a), expr());
        if (eat("==")) return binary(Kind::eq, std::move(a), expr());
        if (peek() == '<') {
            eat("<");
            return binary(Kind::lt, std::move(a), expr());
        }
        return a;
    }

    NodePtr expr() {
        NodePtr a = term();
        for (;;) {
            if (eat("+"))
                a = binary(Kind::add, std::move(a), term());
            else if (eat("-"))
                a = binary(Kind::sub, std::move(a), term());
            else
                return a;
        }
    }

    NodePtr term() {
        NodePtr a = factor();
        for (;;) {
            if (eat("*"))
                a = binary(Kind::mul, std::move(a), factor());
            else if (eat("/"))
                a = binary(Kind::div, std::move(a), factor());
            else
                return a;
        }
    }

    NodePtr factor() {
        NodePtr a = atom();
        if (eat("^")) return binary(Kind::pow, std::move(a), factor());
        return a;
    }

    std::int64_t integer() {
        skip_ws();
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("integer");
        std::int64_t v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            advance(1);
        }
        return v;
    }

    NodePtr atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("expression");
        const char c = text_[pos_];

        if (c == '-') {
            // unary minus binds a whole power chain: -x^2 is -(x^2)
            auto n = node(Kind::neg);
            advance(1);
            n->args = {factor()};
            return n;
        }
        if (c == '(') {
            advance(1);
            NodePtr e = compare();
            if (!eat(")")) fail("')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("expression");
    }

    NodePtr number() {
        auto n = node(Kind::number);
        std::size_t len = 0;
        const std::string buf(text_.substr(pos_, 64));
        try {
            n->number = std::stod(buf, &len);
        } catch (const std::exception&) {
            fail("number");
        }
        advance(len);
        return n;
    }

    NodePtr identifier() {
        skip_ws();
        std::size_t end = pos_;
        while (end < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
            ++end;
        const std::string_view name = text_.substr(pos_, end - pos_);
        auto n = node(Kind::number);
        n->line = line_;
        n->col = col_;
        advance(name.size());

        if (name == "norm_x") { n->kind = Kind::norm_x; return n; }
        if (name == "norm_xi") { n->kind = Kind::norm_xi; return n; }
        if (name == "bracket_xi") { n->kind = Kind::bracket_xi; return n; }

        if (name == "digit") {
            n->kind = Kind::digit;
            if (!eat("(")) fail("'('");
            if (!eat("x")) fail("'x'");
            if (!eat(",")) fail("','");
            n->digit_index = integer();
            if (!eat(")")) fail("')'");
            return n;
        }
        if (name == "re_char") {
            n->kind = Kind::re_char;
            if (!eat("(")) fail("'('");
            n->rat_num = integer();
            n->rat_den = eat("/") ? integer() : 1;
            if (n->rat_den <= 0) fail("positive denominator");
            if (!eat(",")) fail("','");
            if (!eat("x")) fail("'x'");
            if (!eat(")")) fail("')'");
            return n;
        }

        static const std::pair<std::string_view, Kind> fns[] = {
            {"exp", Kind::exp_fn}, {"log", Kind::log_fn}, {"sin", Kind::sin_fn},
            {"cos", Kind::cos_fn}, {"abs", Kind::abs_fn}, {"min", Kind::min_fn},
            {"max", Kind::max_fn}, {"if", Kind::if_fn}};
        for (const auto& [fname, kind] : fns) {
            if (name != fname) continue;
            n->kind = kind;
            const std::size_t arity =
                (kind == Kind::if_fn) ? 3 : (kind == Kind::min_fn || kind == Kind::max_fn) ? 2 : 1;
            if (!eat("(")) fail("'('");
            for (std::size_t i = 0; i < arity; ++i) {
                if (i > 0 && !eat(",")) fail("','");
                n->args.push_back(compare());
            }
            if (!eat(")")) fail("')'");
            return n;
        }
        fail("known identifier");
    }
};

inline int precedence(SymbolExpr::Kind k) {
    using K = SymbolExpr::Kind;
    switch (k) {
        case K::lt: case K::le: case K::eq: return 0;
        case K::add: case K::sub: return 1;
        case K::mul: case K::div: return 2;
        case K::neg: return 3;
        case K::pow: return 4;
        default: return 5;
    }
}

inline void print_node(const SymbolExpr::Node& n, std::ostream& os) {
    using K = SymbolExpr::Kind;
    auto child = [&](const SymbolExpr::Node& c, bool strict) {
        const bool parens = precedence(c.kind) < precedence(n.kind) ||
                            (strict && precedence(c.kind) == precedence(n.kind));
        if (parens) os << '(';
        print_node(c, os);
        if (parens) os << ')';
    };
    switch (n.kind) {
        case K::number: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n.number;
            os << tmp.str();
            return;
        }
        case K::norm_x: os << "norm_x"; return;
        case K::norm_xi: os << "norm_xi"; return;
        case K::bracket_xi: os << "bracket_xi"; return;
        case K::digit: os << "digit(x," << n.digit_index << ")"; return;
        case K::re_char:
            os << "re_char(" << n.rat_num;
            if (n.rat_den != 1) os << "/" << n.rat_den;
            os << ",x)";
            return;
        case K::neg: os << "-"; child(*n.args[0], false); return;
        case K::add: child(*n.args[0], false); os << " + "; child(*n.args[1], true); return;
        case K::sub: child(*n.args[0], false); os << " - "; child(*n.args[1], true); return;
        case K::mul: child(*n.args[0], false); os << "*"; child(*n.args[1], true); return;
        case K::div: child(*n.args[0], false); os << "/"; child(*n.args[1], true); return;
        case K::pow: child(*n.args[0], true); os << "^"; child(*n.args[1], false); return;
        case K::lt: child(*n.args[0], true); os << " < "; child(*n.args[1], true); return;
        case K::le: child(*n.args[0], true); os << " <= "; child(*n.args[1], true); return;
        case K::eq: child(*n.args[0], true); os << " == "; child(*n.args[1], true); return;
        case K::exp_fn: case K::log_fn: case K::sin_fn: case K::cos_fn: case K::abs_fn: {
            static const char* names[] = {"exp", "log", "sin", "cos", "abs"};
            os << names[static_cast<int>(n.kind) - static_cast<int>(K::exp_fn)] << "(";
            print_node(*n.args[0], os);
            os << ")";
            return;
        }
        case K::min_fn: case K::max_fn:
            os << (n.kind == K::min_fn ? "min(" : "max(");
            print_node(*n.args[0], os);
            os << ", ";
            print_node(*n.args[1], os);
            os << ")";
            return;
        case K::if_fn:
            os << "if(";
            print_node(*n.args[0], os);
            os << ", ";
            print_node(*n.args[1], os);
            os << ", ";
            print_node(*n.args[2], os);
            os << ")";
            return;
    }
}

}  // namespace detail

inline std::string SymbolExpr::print() const {
    std::ostringstream os;
    detail::print_node(root(), os);
    return os.str();
}

/// Parses the tiny expression grammar; total and deterministic, errors carry
/// line/column and the expected token.
inline SymbolExpr parse_symbol(std::string_view text) {
    detail::SymbolParser p(text);
    return SymbolExpr(p.parse());
}

/**
 * sigma(x, xi) sampled on (point grid) x (truncated dual), both in canonical
 * order, column-major: column xi is the point function sigma(., xi).
 */
struct SymbolGrid {
    Level level;
    std::vector<cplx> a;  // a[xi * M + x]
    std::string provenance;
    bool norm_x_floor_used = false;  // |x| hit the truncation floor somewhere

    cplx& at(std::int64_t x, std::int64_t xi) {
        return a[static_cast<std::size_t>(xi * level.m() + x)];
    }
    const cplx& at(std::int64_t x, std::int64_t xi) const {
        return a[static_cast<std::size_t>(xi * level.m() + x)];
    }

    std::span<const cplx> column(std::int64_t xi) const {
        return {a.data() + xi * level.m(), static_cast<std::size_t>(level.m())};
    }

    static SymbolGrid zeros(const Level& lv, std::string prov = {}) {
        return SymbolGrid{lv,
                          std::vector<cplx>(static_cast<std::size_t>(lv.m() * lv.m())),
                          std::move(prov), false};
    }
};

inline constexpr std::int64_t kDefaultMatrixCap = 1024;

namespace detail {

struct EvalContext {
    const Level* level;
    std::int64_t x = 0;
    std::int64_t xi = 0;
    double norm_x = 0.0;
    double norm_xi = 0.0;
    double bracket_xi = 1.0;
    bool* floor_flag = nullptr;
};

inline cplx eval_node(const SymbolExpr::Node& n, const EvalContext& c) {
    using K = SymbolExpr::Kind;
    auto real_of = [&](const cplx& z, const SymbolExpr::Node& at) {
        if (std::abs(z.imag()) > 1e-12 * std::max(1.0, std::abs(z.real())))
            throw EvalError("comparison of non-real values", at.line, at.col);
        return z.real();
    };
    switch (n.kind) {
        case K::number: return {n.number, 0.0};
        case K::norm_x: {
            // the truncation floor binds exactly at the all-zero residue
            if (c.floor_flag && c.x == 0) *c.floor_flag = true;
            return {c.norm_x, 0.0};
        }
        case K::norm_xi: return {c.norm_xi, 0.0};
        case K::bracket_xi: return {c.bracket_xi, 0.0};
        case K::digit: {
            const auto axes = static_cast<std::int64_t>(c.level->axis_count());
            const auto desc = c.level->descriptor();
            std::int64_t j = n.digit_index;
            if (desc.kind == GroupKind::padic) {
                // digits 0..N*d-1: coordinate j/N, base-p digit j%N
                const std::int64_t N = c.level->n();
                if (N == 0 || j >= N * desc.d)
                    throw EvalError("digit index out of range", n.line, n.col);
                std::int64_t coord = c.level->point_digit(c.x, static_cast<std::size_t>(j / N));
                for (std::int64_t t = 0; t < j % N; ++t) coord /= desc.p;
                return {static_cast<double>(coord % desc.p), 0.0};
            }
            if (j >= axes) throw EvalError("digit index out of range", n.line, n.col);
            return {static_cast<double>(c.level->point_digit(c.x, static_cast<std::size_t>(j))), 0.0};
        }
        case K::re_char: {
            const auto& desc = c.level->descriptor();
            if (desc.kind != GroupKind::padic)
                throw EvalError("re_char literal requires a padic group", n.line, n.col);
            Rational r = Rational::reduced(n.rat_num, n.rat_den);
            int k = 0;
            std::int64_t d = r.den;
            while (d % desc.p == 0) {
                d /= desc.p;
                ++k;
            }
            if (d != 1)
                throw EvalError("re_char denominator is not a power of p", n.line, n.col);
            if (k > c.level->n())
                throw EvalError("re_char character finer than the level", n.line, n.col);
            const std::int64_t x0 = c.level->point_digit(c.x, 0);
            const std::int64_t pk = r.den;
            return {unit_phase(Rational::reduced(r.num * (x0 % pk), pk)).real(), 0.0};
        }
        case K::neg: return -eval_node(*n.args[0], c);
        case K::add: return eval_node(*n.args[0], c) + eval_node(*n.args[1], c);
        case K::sub: return eval_node(*n.args[0], c) - eval_node(*n.args[1], c);
        case K::mul: return eval_node(*n.args[0], c) * eval_node(*n.args[1], c);
        case K::div: {
            const cplx b = eval_node(*n.args[1], c);
            if (b == cplx(0.0, 0.0)) throw EvalError("division by zero", n.line, n.col);
            return eval_node(*n.args[0], c) / b;
        }
        case K::pow: {
            const cplx a = eval_node(*n.args[0], c);
            const cplx b = eval_node(*n.args[1], c);
            if (a == cplx(0.0, 0.0)) {
                const double br = b.real();
                if (b.imag() == 0.0 && br > 0.0) return {0.0, 0.0};
                if (b == cplx(0.0, 0.0)) return {1.0, 0.0};
                throw EvalError("zero raised to a non-positive power", n.line, n.col);
            }
            if (a.imag() == 0.0 && b.imag() == 0.0) {
                // keep real powers real (incl. integral exponents of negatives)
                const double ar = a.real(), br = b.real();
                if (ar > 0.0 || br == std::rint(br))
                    return {std::pow(ar, br), 0.0};
            }
            return std::pow(a, b);
        }
        case K::exp_fn: return std::exp(eval_node(*n.args[0], c));
        case K::log_fn: {
            const cplx a = eval_node(*n.args[0], c);
            if (a == cplx(0.0, 0.0)) throw EvalError("log of zero", n.line, n.col);
            if (a.imag() == 0.0 && a.real() > 0.0) return {std::log(a.real()), 0.0};
            return std::log(a);
        }
        case K::sin_fn: return std::sin(eval_node(*n.args[0], c));
        case K::cos_fn: return std::cos(eval_node(*n.args[0], c));
        case K::abs_fn: return {std::abs(eval_node(*n.args[0], c)), 0.0};
        case K::min_fn: case K::max_fn: {
            const double a = real_of(eval_node(*n.args[0], c), n);
            const double b = real_of(eval_node(*n.args[1], c), n);
            return {n.kind == K::min_fn ? std::min(a, b) : std::max(a, b), 0.0};
        }
        case K::lt: case K::le: case K::eq: {
            const double a = real_of(eval_node(*n.args[0], c), n);
            const double b = real_of(eval_node(*n.args[1], c), n);
            const bool r = n.kind == K::lt ? a < b : n.kind == K::le ? a <= b : a == b;
            return {r ? 1.0 : 0.0, 0.0};
        }
        case K::if_fn: {
            const double cond = real_of(eval_node(*n.args[0], c), n);
            return eval_node(*n.args[cond != 0.0 ? 1 : 2], c);
        }
    }
    throw EvalError("unreachable node", n.line, n.col);
}

inline void check_grid_cap(const Level& lv, std::int64_t cap) {
    if (lv.m() > cap)
        throw LevelTooLarge("dense M x M storage capped at M = " + std::to_string(cap) +
                            " (got M = " + std::to_string(lv.m()) + "); raise the cap explicitly");
}

}  // namespace detail

/// Dense sampling of an expression on the level grid, canonical orders.
inline SymbolGrid eval_grid(const SymbolExpr& expr, const Level& lv,
                            std::int64_t max_m = kDefaultMatrixCap) {
    detail::check_grid_cap(lv, max_m);
    const std::int64_t m = lv.m();
    SymbolGrid g = SymbolGrid::zeros(lv, expr.print());

    std::vector<double> xnorm(static_cast<std::size_t>(m));
    for (std::int64_t x = 0; x < m; ++x) xnorm[static_cast<std::size_t>(x)] = lv.point_norm(x);

    detail::EvalContext c;
    c.level = &lv;
    c.floor_flag = &g.norm_x_floor_used;
    for (std::int64_t xi = 0; xi < m; ++xi) {
        c.xi = xi;
        c.norm_xi = lv.dual_norm(xi);
        c.bracket_xi = lv.dual_bracket(xi);
        for (std::int64_t x = 0; x < m; ++x) {
            c.x = x;
            c.norm_x = xnorm[static_cast<std::size_t>(x)];
            g.at(x, xi) = detail::eval_node(expr.root(), c);
        }
    }
    return g;
}

// --- built-in symbol families ---------------------------------------------

/// ||xi||^s with 0^s := 0: the Vladimirov multiplier D^s.
inline SymbolGrid builtin_vladimirov(const Level& lv, double s,
                                     std::int64_t max_m = kDefaultMatrixCap) {
    detail::check_grid_cap(lv, max_m);
    SymbolGrid g = SymbolGrid::zeros(lv, "vladimirov(s=" + std::to_string(s) + ")");
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        const double w = frequency_weight(lv, xi, s, FrequencyScale::vladimirov);
        for (std::int64_t x = 0; x < lv.m(); ++x) g.at(x, xi) = {w, 0.0};
    }
    return g;
}

/// <xi>^s: the Bessel-type multiplier J_s.
inline SymbolGrid builtin_bessel(const Level& lv, double s,
                                 std::int64_t max_m = kDefaultMatrixCap) {
    detail::check_grid_cap(lv, max_m);
    SymbolGrid g = SymbolGrid::zeros(lv, "bessel(s=" + std::to_string(s) + ")");
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        const double w = std::pow(lv.dual_bracket(xi), s);
        for (std::int64_t x = 0; x < lv.m(); ++x) g.at(x, xi) = {w, 0.0};
    }
    return g;
}

/// Multiplication operator by g(x); the expression must not read xi.
inline SymbolGrid builtin_mult(const Level& lv, const SymbolExpr& g_expr,
                               std::int64_t max_m = kDefaultMatrixCap) {
    if (!g_expr.x_only())
        throw ConfigError("mult() expression must depend on x only: " + g_expr.print());
    SymbolGrid g = eval_grid(g_expr, lv, max_m);
    g.provenance = "mult(" + g_expr.print() + ")";
    return g;
}

/// Radial symbol from a table of per-shell values v[0..N].
inline SymbolGrid builtin_radial(const Level& lv, std::span<const double> shell_values,
                                 std::int64_t max_m = kDefaultMatrixCap) {
    detail::check_grid_cap(lv, max_m);
    if (shell_values.size() < static_cast<std::size_t>(lv.max_shell()) + 1)
        throw ConfigError("radial table needs " + std::to_string(lv.max_shell() + 1) +
                          " shell values");
    SymbolGrid g = SymbolGrid::zeros(lv, "radial");
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        const double w = shell_values[static_cast<std::size_t>(lv.dual_shell(xi))];
        for (std::int64_t x = 0; x < lv.m(); ++x) g.at(x, xi) = {w, 0.0};
    }
    return g;
}

// --- difference calculus ---------------------------------------------------

/// shift(sigma, eta)(x, xi) = sigma(x, xi + eta); exact column permutation.
inline SymbolGrid shift_symbol(const SymbolGrid& s, const DualIndex& eta) {
    const Level& lv = s.level;
    const std::int64_t ceta = canonical_index(lv, eta);
    SymbolGrid out = SymbolGrid::zeros(lv, "shift(" + s.provenance + ")");
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        const std::int64_t src = lv.dual_add(xi, ceta);
        std::copy_n(s.a.data() + src * lv.m(), static_cast<std::size_t>(lv.m()),
                    out.a.data() + xi * lv.m());
    }
    return out;
}

/// First difference (Delta_eta sigma)(x, xi) = sigma(x, xi + eta) - sigma(x, xi).
inline SymbolGrid difference(const SymbolGrid& s, const DualIndex& eta) {
    const Level& lv = s.level;
    const std::int64_t ceta = canonical_index(lv, eta);
    SymbolGrid out = SymbolGrid::zeros(lv, "difference(" + s.provenance + ")");
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        const std::int64_t src = lv.dual_add(xi, ceta);
        const cplx* from = s.a.data() + src * lv.m();
        const cplx* base = s.a.data() + xi * lv.m();
        cplx* to = out.a.data() + xi * lv.m();
        for (std::int64_t x = 0; x < lv.m(); ++x) to[x] = from[x] - base[x];
    }
    return out;
}

/// D^beta_x column by column: the x-Sobolev multiplier applied to each
/// sigma(., xi).
inline SymbolGrid x_derivative(const SymbolGrid& s, double beta,
                               FrequencyScale scale = FrequencyScale::vladimirov) {
    const Level& lv = s.level;
    SymbolGrid out = SymbolGrid::zeros(lv, s.provenance);
    GridFunction col = GridFunction::zeros(lv);
    for (std::int64_t xi = 0; xi < lv.m(); ++xi) {
        std::copy_n(s.a.data() + xi * lv.m(), static_cast<std::size_t>(lv.m()), col.v.data());
        GridFunction d = sobolev_apply(col, beta, scale);
        std::copy_n(d.v.data(), static_cast<std::size_t>(lv.m()), out.a.data() + xi * lv.m());
    }
    return out;
}

// --- Hoermander class estimation -------------------------------------------

/**
 * Estimated constants C_{alpha,beta} = sup |D^beta_x Delta_eta sigma| /
 * (||eta||^alpha <xi>^{m - rho alpha + delta beta}), the sup running over all
 * grid nodes and all eta with 0 < ||eta|| <= <xi> (no difference at alpha=0).
 * One table per level plus the cross-level max; "stable" when every (alpha,
 * beta) sequence is non-increasing or moves < 10% over the last two levels.
 */
struct HoermanderReport {
    double m = 0.0, rho = 1.0, delta = 0.0;
    FrequencyScale scale = FrequencyScale::vladimirov;
    int alpha_max = 0, beta_max = 0;
    std::vector<int> levels;
    std::vector<std::vector<double>> constants;  // [level][alpha*(beta_max+1)+beta]
    std::vector<double> cross_level_max;
    std::string verdict;

    double at(std::size_t level_idx, int alpha, int beta) const {
        return constants[level_idx][static_cast<std::size_t>(alpha * (beta_max + 1) + beta)];
    }
};

inline HoermanderReport hoermander_estimate(
    const std::function<SymbolGrid(const Level&)>& symbol_at, const GroupDescriptor& desc,
    std::span<const int> level_list, double m, double rho, double delta, int alpha_max,
    int beta_max, FrequencyScale scale = FrequencyScale::vladimirov,
    std::int64_t max_m = kDefaultMatrixCap) {
    if (!(0.0 <= delta && delta <= rho && rho <= 1.0))
        throw BadExponent("need 0 <= delta <= rho <= 1");
    if (level_list.empty()) throw ConfigError("at least one level required");

    HoermanderReport rep;
    rep.m = m;
    rep.rho = rho;
    rep.delta = delta;
    rep.scale = scale;
    rep.alpha_max = alpha_max;
    rep.beta_max = beta_max;
    rep.levels.assign(level_list.begin(), level_list.end());

    for (int n : level_list) {
        Level lv = make_level(desc, n);
        detail::check_grid_cap(lv, max_m);
        SymbolGrid sigma = symbol_at(lv);
        const std::int64_t M = lv.m();

        std::vector<double> table(static_cast<std::size_t>((alpha_max + 1) * (beta_max + 1)), 0.0);
        for (int beta = 0; beta <= beta_max; ++beta) {
            SymbolGrid dbs = beta == 0 ? sigma : x_derivative(sigma, beta, scale);
            for (int alpha = 0; alpha <= alpha_max; ++alpha) {
                double best = 0.0;
                for (std::int64_t xi = 0; xi < M; ++xi) {
                    const double br = lv.dual_bracket(xi);
                    const double denom_xi = std::pow(br, m - rho * alpha + delta * beta);
                    if (alpha == 0) {
                        double sup = 0.0;
                        const cplx* colp = dbs.a.data() + xi * M;
                        for (std::int64_t x = 0; x < M; ++x)
                            sup = std::max(sup, std::abs(colp[x]));
                        best = std::max(best, sup / denom_xi);
                        continue;
                    }
                    for (std::int64_t eta = 1; eta < M; ++eta) {
                        const double eta_norm = lv.dual_norm(eta);
                        if (eta_norm > br) break;  // norms ascend in canonical order
                        const std::int64_t shifted = lv.dual_add(xi, eta);
                        const cplx* colp = dbs.a.data() + xi * M;
                        const cplx* cols = dbs.a.data() + shifted * M;
                        double sup = 0.0;
                        for (std::int64_t x = 0; x < M; ++x)
                            sup = std::max(sup, std::abs(cols[x] - colp[x]));
                        best = std::max(best, sup / (std::pow(eta_norm, alpha) * denom_xi));
                    }
                }
                table[static_cast<std::size_t>(alpha * (beta_max + 1) + beta)] = best;
            }
        }
        rep.constants.push_back(std::move(table));
    }

    rep.cross_level_max.assign(rep.constants.front().size(), 0.0);
    for (const auto& t : rep.constants)
        for (std::size_t i = 0; i < t.size(); ++i)
            rep.cross_level_max[i] = std::max(rep.cross_level_max[i], t[i]);

    bool stable = true;
    for (std::size_t i = 0; i < rep.cross_level_max.size() && stable; ++i) {
        bool nonincreasing = true;
        for (std::size_t l = 1; l < rep.constants.size(); ++l)
            if (rep.constants[l][i] > rep.constants[l - 1][i] * (1.0 + 1e-12))
                nonincreasing = false;
        if (nonincreasing) continue;
        if (rep.constants.size() >= 2) {
            const double prev = rep.constants[rep.constants.size() - 2][i];
            const double last = rep.constants.back()[i];
            const double ref = std::max({prev, last, 1e-300});
            if (std::abs(last - prev) / ref >= 0.10) stable = false;
        }
    }
    rep.verdict = stable ? "stable" : "unstable";
    return rep;
}

}  // namespace spectra
