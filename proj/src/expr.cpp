#include "perihom/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

enum class Fn { sin, cos, exp, min, max };

int fn_arity(Fn f) { return f == Fn::min || f == Fn::max ? 2 : 1; }

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::sin: return "sin";
        case Fn::cos: return "cos";
        case Fn::exp: return "exp";
        case Fn::min: return "min";
        default: return "max";
    }
}

}  // namespace

namespace detail {

struct ExprNode {
    enum class Kind { number, var, neg, add, sub, mul, div, pow, call } kind;
    double number = 0.0;
    int var_index = 0;
    long exponent = 0;
    Fn fn = Fn::sin;
    std::shared_ptr<const ExprNode> a, b;
};

}  // namespace detail

namespace {

using Node = detail::ExprNode;
using NodePtr = std::shared_ptr<const Node>;
using Kind = Node::Kind;

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

// --- recursive descent parser ---------------------------------------------

struct Parser {
    std::string_view text;
    std::size_t pos = 0;
    int arity;
    VarKind kind;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool at_end() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    [[noreturn]] void fail(const std::string& expected) {
        throw ParseError("expected " + expected, pos);
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos;
            NodePtr rhs = parse_term();
            lhs = make({c == '+' ? Kind::add : Kind::sub, 0, 0, 0, Fn::sin, lhs, rhs});
        }
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_unary();
        for (;;) {
            char c = peek();
            if (c != '*' && c != '/') return lhs;
            ++pos;
            NodePtr rhs = parse_unary();
            lhs = make({c == '*' ? Kind::mul : Kind::div, 0, 0, 0, Fn::sin, lhs, rhs});
        }
    }

    NodePtr parse_unary() {
        if (peek() == '-') {
            ++pos;
            NodePtr inner = parse_unary();
            return make({Kind::neg, 0, 0, 0, Fn::sin, inner, nullptr});
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (peek() != '^') return base;
        ++pos;
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        if (pos == start || pos - start > 9) {
            pos = start;
            fail("integer exponent literal");
        }
        long e = std::strtol(std::string(text.substr(start, pos - start)).c_str(), nullptr, 10);
        return make({Kind::pow, 0, 0, e, Fn::sin, base, nullptr});
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos >= text.size()) fail("number, identifier, function, or '('");
        char c = text[pos];
        if (c == '(') {
            ++pos;
            NodePtr inner = parse_expr();
            if (peek() != ')') fail("')'");
            ++pos;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
        fail("number, identifier, function, or '('");
    }

    NodePtr parse_number() {
        const char* begin = text.data() + pos;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("number");
        pos += static_cast<std::size_t>(end - begin);
        return make({Kind::number, v, 0, 0, Fn::sin, nullptr, nullptr});
    }

    NodePtr parse_ident() {
        std::size_t start = pos;
        while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])))) ++pos;
        std::string_view name = text.substr(start, pos - start);
        for (Fn f : {Fn::sin, Fn::cos, Fn::exp, Fn::min, Fn::max}) {
            if (name == fn_name(f)) return parse_call(f);
        }
        char prefix = kind == VarKind::species ? 'u' : 'y';
        int limit = kind == VarKind::species ? arity : 2;
        if (name.size() >= 2 && name[0] == prefix) {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i) {
                if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
            }
            if (digits) {
                long idx = std::strtol(std::string(name.substr(1)).c_str(), nullptr, 10);
                if (idx < 1 || idx > limit) {
                    throw ArityError("identifier '" + std::string(name) + "' out of range (max " +
                                     std::string(1, prefix) + std::to_string(limit) + ")");
                }
                return make({Kind::var, 0, static_cast<int>(idx - 1), 0, Fn::sin, nullptr, nullptr});
            }
        }
        pos = start;
        fail(kind == VarKind::species ? "identifier u1..uN or function name"
                                      : "identifier y1,y2 or function name");
    }

    NodePtr parse_call(Fn f) {
        if (peek() != '(') fail("'(' after function name");
        ++pos;
        NodePtr a = parse_expr();
        NodePtr b = nullptr;
        if (fn_arity(f) == 2) {
            if (peek() != ',') fail("','");
            ++pos;
            b = parse_expr();
        }
        if (peek() != ')') fail("')'");
        ++pos;
        return make({Kind::call, 0, 0, 0, f, a, b});
    }
};

// --- evaluation ------------------------------------------------------------

double eval_node(const Node& n, std::span<const double> v) {
    switch (n.kind) {
        case Kind::number: return n.number;
        case Kind::var: return v[n.var_index];
        case Kind::neg: return -eval_node(*n.a, v);
        case Kind::add: return eval_node(*n.a, v) + eval_node(*n.b, v);
        case Kind::sub: return eval_node(*n.a, v) - eval_node(*n.b, v);
        case Kind::mul: return eval_node(*n.a, v) * eval_node(*n.b, v);
        case Kind::div: {
            double den = eval_node(*n.b, v);
            if (den == 0.0) throw DomainError("division by zero");
            return eval_node(*n.a, v) / den;
        }
        case Kind::pow: return std::pow(eval_node(*n.a, v), static_cast<double>(n.exponent));
        case Kind::call: {
            double a = eval_node(*n.a, v);
            switch (n.fn) {
                case Fn::sin: return std::sin(a);
                case Fn::cos: return std::cos(a);
                case Fn::exp: return std::exp(a);
                case Fn::min: return std::min(a, eval_node(*n.b, v));
                default: return std::max(a, eval_node(*n.b, v));
            }
        }
    }
    return 0.0;  // unreachable
}

struct Dual {
    double value;
    std::vector<double> grad;
};

Dual eval_dual(const Node& n, std::span<const double> v, int arity) {
    auto zero = [arity] { return std::vector<double>(arity, 0.0); };
    switch (n.kind) {
        case Kind::number: return {n.number, zero()};
        case Kind::var: {
            Dual d{v[n.var_index], zero()};
            d.grad[n.var_index] = 1.0;
            return d;
        }
        case Kind::neg: {
            Dual a = eval_dual(*n.a, v, arity);
            for (double& g : a.grad) g = -g;
            a.value = -a.value;
            return a;
        }
        case Kind::add: {
            Dual a = eval_dual(*n.a, v, arity), b = eval_dual(*n.b, v, arity);
            for (int i = 0; i < arity; ++i) a.grad[i] += b.grad[i];
            a.value += b.value;
            return a;
        }
        case Kind::sub: {
            Dual a = eval_dual(*n.a, v, arity), b = eval_dual(*n.b, v, arity);
            for (int i = 0; i < arity; ++i) a.grad[i] -= b.grad[i];
            a.value -= b.value;
            return a;
        }
        case Kind::mul: {
            Dual a = eval_dual(*n.a, v, arity), b = eval_dual(*n.b, v, arity);
            Dual r{a.value * b.value, zero()};
            for (int i = 0; i < arity; ++i) r.grad[i] = a.grad[i] * b.value + a.value * b.grad[i];
            return r;
        }
        case Kind::div: {
            Dual a = eval_dual(*n.a, v, arity), b = eval_dual(*n.b, v, arity);
            if (b.value == 0.0) throw DomainError("division by zero");
            Dual r{a.value / b.value, zero()};
            for (int i = 0; i < arity; ++i) {
                r.grad[i] = (a.grad[i] * b.value - a.value * b.grad[i]) / (b.value * b.value);
            }
            return r;
        }
        case Kind::pow: {
            Dual a = eval_dual(*n.a, v, arity);
            double e = static_cast<double>(n.exponent);
            Dual r{std::pow(a.value, e), std::vector<double>(arity, 0.0)};
            if (n.exponent != 0) {
                double f = e * std::pow(a.value, e - 1.0);
                for (int i = 0; i < arity; ++i) r.grad[i] = f * a.grad[i];
            }
            return r;
        }
        case Kind::call: {
            Dual a = eval_dual(*n.a, v, arity);
            switch (n.fn) {
                case Fn::sin: {
                    double f = std::cos(a.value);
                    for (double& g : a.grad) g *= f;
                    a.value = std::sin(a.value);
                    return a;
                }
                case Fn::cos: {
                    double f = -std::sin(a.value);
                    for (double& g : a.grad) g *= f;
                    a.value = std::cos(a.value);
                    return a;
                }
                case Fn::exp: {
                    double f = std::exp(a.value);
                    for (double& g : a.grad) g *= f;
                    a.value = f;
                    return a;
                }
                case Fn::min: {
                    Dual b = eval_dual(*n.b, v, arity);
                    return a.value <= b.value ? a : b;
                }
                default: {
                    Dual b = eval_dual(*n.b, v, arity);
                    return a.value >= b.value ? a : b;
                }
            }
        }
    }
    return {0.0, zero()};  // unreachable
}

// --- printing --------------------------------------------------------------

int precedence(const Node& n) {
    switch (n.kind) {
        case Kind::add:
        case Kind::sub: return 1;
        case Kind::mul:
        case Kind::div: return 2;
        case Kind::neg: return 3;
        case Kind::pow: return 4;
        default: return 5;
    }
}

void print_node(const Node& n, VarKind kind, std::string& out);

void print_child(const Node& child, VarKind kind, int min_prec, std::string& out) {
    if (precedence(child) < min_prec) {
        out += '(';
        print_node(child, kind, out);
        out += ')';
    } else {
        print_node(child, kind, out);
    }
}

void print_node(const Node& n, VarKind kind, std::string& out) {
    switch (n.kind) {
        case Kind::number: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            return;
        }
        case Kind::var:
            out += kind == VarKind::species ? 'u' : 'y';
            out += std::to_string(n.var_index + 1);
            return;
        case Kind::neg:
            out += '-';
            print_child(*n.a, kind, 3, out);
            return;
        case Kind::add:
        case Kind::sub:
            print_child(*n.a, kind, 1, out);
            out += n.kind == Kind::add ? " + " : " - ";
            print_child(*n.b, kind, 2, out);
            return;
        case Kind::mul:
        case Kind::div:
            print_child(*n.a, kind, 2, out);
            out += n.kind == Kind::mul ? '*' : '/';
            print_child(*n.b, kind, 3, out);
            return;
        case Kind::pow:
            print_child(*n.a, kind, 5, out);
            out += '^';
            out += std::to_string(n.exponent);
            return;
        case Kind::call:
            out += fn_name(n.fn);
            out += '(';
            print_node(*n.a, kind, out);
            if (n.b) {
                out += ", ";
                print_node(*n.b, kind, out);
            }
            out += ')';
            return;
    }
}

bool nodes_equal(const Node* a, const Node* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case Kind::number: return a->number == b->number;
        case Kind::var: return a->var_index == b->var_index;
        case Kind::pow: return a->exponent == b->exponent && nodes_equal(a->a.get(), b->a.get());
        case Kind::call:
            if (a->fn != b->fn) return false;
            [[fallthrough]];
        default: return nodes_equal(a->a.get(), b->a.get()) && nodes_equal(a->b.get(), b->b.get());
    }
}

}  // namespace

ReactionExpr ReactionExpr::parse(std::string_view text, int arity, VarKind kind) {
    if (text.empty()) throw ParseError("expected nonempty expression", 0);
    if (arity < 1) throw ArityError("arity must be at least 1");
    Parser p{text, 0, arity, kind};
    ReactionExpr e;
    e.root_ = p.parse_expr();
    if (!p.at_end()) p.fail("operator or end of input");
    e.arity_ = kind == VarKind::cell ? 2 : arity;
    e.kind_ = kind;
    return e;
}

ReactionExpr ReactionExpr::constant(double value) {
    ReactionExpr e;
    e.root_ = make({detail::ExprNode::Kind::number, value, 0, 0, Fn::sin, nullptr, nullptr});
    e.arity_ = 1;
    e.kind_ = VarKind::species;
    return e;
}

double ReactionExpr::eval(std::span<const double> values) const {
    return eval_node(*root_, values);
}

double ReactionExpr::eval_gradient(std::span<const double> values, std::span<double> grad) const {
    Dual d = eval_dual(*root_, values, arity_);
    for (int i = 0; i < arity_; ++i) grad[i] = d.grad[i];
    return d.value;
}

std::string ReactionExpr::print() const {
    std::string out;
    print_node(*root_, kind_, out);
    return out;
}

bool ReactionExpr::structurally_equal(const ReactionExpr& other) const {
    return nodes_equal(root_.get(), other.root_.get());
}

bool ReactionExpr::is_literal_zero() const {
    return root_ && root_->kind == detail::ExprNode::Kind::number && root_->number == 0.0;
}

namespace {

// Halton sequence, deterministic space filler for the sampling box.
double halton(int index, int base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

constexpr int kHaltonBases[6] = {2, 3, 5, 7, 11, 13};

}  // namespace

LipschitzEstimate estimate_lipschitz(const ReactionExpr& expr, std::span<const double> box_lo,
                                     std::span<const double> box_hi, int samples) {
    const int arity = expr.arity();
    LipschitzEstimate est;
    est.box_lo.assign(box_lo.begin(), box_lo.end());
    est.box_hi.assign(box_hi.begin(), box_hi.end());

    std::vector<double> point(arity), grad(arity);
    auto probe = [&](std::span<const double> p) {
        expr.eval_gradient(p, grad);
        double g1 = 0.0;
        for (double g : grad) g1 += std::abs(g);
        est.constant = std::max(est.constant, g1);
        est.samples++;
    };

    // corners first: polynomial gradients peak there
    const int n_corners = 1 << arity;
    for (int c = 0; c < n_corners && arity <= 16; ++c) {
        for (int i = 0; i < arity; ++i) point[i] = (c >> i) & 1 ? box_hi[i] : box_lo[i];
        probe(point);
    }
    for (int i = 0; i < arity; ++i) point[i] = 0.5 * (box_lo[i] + box_hi[i]);
    probe(point);
    for (int s = 0; s < samples; ++s) {
        for (int i = 0; i < arity; ++i) {
            double t = halton(s + 1, kHaltonBases[i % 6]);
            point[i] = box_lo[i] + t * (box_hi[i] - box_lo[i]);
        }
        probe(point);
    }
    return est;
}

}  // namespace perihom
