#include <doctest.h>

#include <cmath>
#include <random>

#include "expr_gen.hpp"
#include "perihom/errors.hpp"
#include "perihom/expr.hpp"

using namespace perihom;

namespace {

double eval2(const ReactionExpr& e, double a, double b) {
    double v[2] = {a, b};
    return e.eval(v);
}

// central finite differences with Richardson extrapolation (kills the
// O(h^2) truncation term so the 1e-6 tolerance is meaningful)
// Returns false when the oracle has not converged at this point (the two
// step sizes disagree): nothing can be certified at 1e-6 there.
bool fd_gradient(const ReactionExpr& e, std::vector<double> x, std::vector<double>& out) {
    out.resize(x.size());
    auto central = [&](std::size_t i, double h) {
        double save = x[i];
        x[i] = save + h;
        double fp = e.eval(x);
        x[i] = save - h;
        double fm = e.eval(x);
        x[i] = save;
        return (fp - fm) / (2 * h);
    };
    for (std::size_t i = 0; i < x.size(); ++i) {
        double h = 1e-4 * std::max(1.0, std::abs(x[i]));
        double d1 = central(i, h);
        double d2 = central(i, 0.5 * h);
        out[i] = (4.0 * d2 - d1) / 3.0;
        if (std::abs(d1 - d2) > 1e-7 * std::max({1.0, std::abs(d1), std::abs(d2)})) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("worked two-species reaction parses and evaluates") {
    ReactionExpr e = ReactionExpr::parse("u1*u2 - u1^2", 2, VarKind::species);
    CHECK(eval2(e, 2, 3) == doctest::Approx(2.0));
    double v[2] = {1, 1};
    double g[2];
    CHECK(e.eval_gradient(v, g) == doctest::Approx(0.0));
    CHECK(g[0] == doctest::Approx(-1.0));
    CHECK(g[1] == doctest::Approx(1.0));
}

TEST_CASE("redundant parentheses collapse to the same tree") {
    ReactionExpr a = ReactionExpr::parse("((u1))", 2, VarKind::species);
    ReactionExpr b = ReactionExpr::parse("u1", 2, VarKind::species);
    CHECK(a.structurally_equal(b));
}

TEST_CASE("identifier out of declared arity") {
    CHECK_THROWS_AS(ReactionExpr::parse("u3", 2, VarKind::species), ArityError);
    CHECK_THROWS_AS(ReactionExpr::parse("y3", 2, VarKind::cell), ArityError);
}

TEST_CASE("variable families are disjoint by kind") {
    CHECK_NOTHROW(ReactionExpr::parse("y1*y2", 2, VarKind::cell));
    CHECK_THROWS_AS(ReactionExpr::parse("u1", 2, VarKind::cell), ParseError);
    CHECK_THROWS_AS(ReactionExpr::parse("y1", 2, VarKind::species), ParseError);
}

TEST_CASE("exp value and derivative at zero") {
    ReactionExpr e = ReactionExpr::parse("exp(u1)", 1, VarKind::species);
    double v[1] = {0.0};
    double g[1];
    CHECK(e.eval_gradient(v, g) == doctest::Approx(1.0));
    CHECK(g[0] == doctest::Approx(1.0));
}

TEST_CASE("precedence: power binds tighter than unary minus") {
    ReactionExpr e = ReactionExpr::parse("-u1^2", 1, VarKind::species);
    double v[1] = {2.0};
    CHECK(e.eval(v) == doctest::Approx(-4.0));
    ReactionExpr f = ReactionExpr::parse("u1 - u1 - u1", 1, VarKind::species);
    v[0] = 5.0;
    CHECK(f.eval(v) == doctest::Approx(-5.0));  // left associative
}

TEST_CASE("parse errors carry byte offsets") {
    try {
        ReactionExpr::parse("u1 + * u2", 2, VarKind::species);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byte_offset == 5);
    }
    CHECK_THROWS_AS(ReactionExpr::parse("", 1, VarKind::species), ParseError);
    CHECK_THROWS_AS(ReactionExpr::parse("u1^u1", 1, VarKind::species), ParseError);
    CHECK_THROWS_AS(ReactionExpr::parse("u1^2^3", 1, VarKind::species), ParseError);
    CHECK_THROWS_AS(ReactionExpr::parse("u1 u2", 2, VarKind::species), ParseError);
    CHECK_THROWS_AS(ReactionExpr::parse("min(u1)", 1, VarKind::species), ParseError);
}

TEST_CASE("division by zero raises DomainError") {
    ReactionExpr e = ReactionExpr::parse("1/u1", 1, VarKind::species);
    double v[1] = {0.0};
    CHECK_THROWS_AS(e.eval(v), DomainError);
    v[0] = 2.0;
    CHECK(e.eval(v) == doctest::Approx(0.5));
}

TEST_CASE("min and max select branches, gradient follows the branch") {
    ReactionExpr e = ReactionExpr::parse("min(u1, 3)", 1, VarKind::species);
    double v[1] = {2.0};
    double g[1];
    CHECK(e.eval_gradient(v, g) == doctest::Approx(2.0));
    CHECK(g[0] == 1.0);
    v[0] = 4.0;
    CHECK(e.eval_gradient(v, g) == doctest::Approx(3.0));
    CHECK(g[0] == 0.0);

    ReactionExpr m = ReactionExpr::parse("max(u1, u2)", 2, VarKind::species);
    double w[2] = {1.0, 5.0};
    double gw[2];
    CHECK(m.eval_gradient(w, gw) == doctest::Approx(5.0));
    CHECK(gw[0] == 0.0);
    CHECK(gw[1] == 1.0);
}

TEST_CASE("round-trip: parse(print(tree)) reproduces the tree") {
    for (unsigned seed = 0; seed < 200; ++seed) {
        testgen::ExprGen gen(seed, 3);
        std::string text = gen.tree(3);
        ReactionExpr e = ReactionExpr::parse(text, 3, VarKind::species);
        ReactionExpr back = ReactionExpr::parse(e.print(), 3, VarKind::species);
        REQUIRE_MESSAGE(back.structurally_equal(e), "expression: ", text, " printed: ", e.print());
        CHECK(back.print() == e.print());
    }
}

TEST_CASE("forward gradients match central differences on random trees") {
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> x(3), fd, ad(3);
    for (unsigned seed = 1000; seed < 1050; ++seed) {
        testgen::ExprGen gen(seed, 3);
        ReactionExpr e = ReactionExpr::parse(gen.tree(3), 3, VarKind::species);
        for (int pt = 0; pt < 20; ++pt) {
            for (double& v : x) v = dist(rng);
            double val = e.eval_gradient(x, ad);
            if (!std::isfinite(val) || std::abs(val) > 1e4) continue;
            if (!fd_gradient(e, x, fd)) continue;
            for (int i = 0; i < 3; ++i) {
                double scale = std::max({1.0, std::abs(ad[i]), std::abs(fd[i])});
                CHECK(std::abs(ad[i] - fd[i]) / scale <= 1e-6);
            }
        }
    }
}

TEST_CASE("gradient of a sum is the sum of gradients") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> dist(-1.5, 1.5);
    for (unsigned seed = 0; seed < 20; ++seed) {
        testgen::ExprGen gen(seed, 2);
        std::string a = gen.tree(2), b = gen.tree(2);
        ReactionExpr ea = ReactionExpr::parse(a, 2, VarKind::species);
        ReactionExpr eb = ReactionExpr::parse(b, 2, VarKind::species);
        ReactionExpr esum = ReactionExpr::parse("(" + a + ") + (" + b + ")", 2, VarKind::species);
        double x[2] = {dist(rng), dist(rng)};
        double ga[2], gb[2], gs[2];
        ea.eval_gradient(x, ga);
        eb.eval_gradient(x, gb);
        esum.eval_gradient(x, gs);
        for (int i = 0; i < 2; ++i) CHECK(gs[i] == doctest::Approx(ga[i] + gb[i]).epsilon(1e-12));
    }
}

TEST_CASE("Lipschitz estimates: linear, worked reaction, constant") {
    ReactionExpr lin = ReactionExpr::parse("0.5*u1", 1, VarKind::species);
    double lo1[1] = {0.0}, hi1[1] = {10.0};
    CHECK(estimate_lipschitz(lin, lo1, hi1, 100).constant == doctest::Approx(0.5));

    ReactionExpr r = ReactionExpr::parse("u1*u2 - u1^2", 2, VarKind::species);
    double lo[2] = {0.0, 0.0}, hi[2] = {1.0, 1.0};
    CHECK(estimate_lipschitz(r, lo, hi, 512).constant == doctest::Approx(3.0).epsilon(0.05 / 3.0));

    ReactionExpr c = ReactionExpr::parse("4.25", 1, VarKind::species);
    CHECK(estimate_lipschitz(c, lo1, hi1, 100).constant == 0.0);
}

TEST_CASE("Lipschitz estimate grows with the box") {
    ReactionExpr r = ReactionExpr::parse("u1*u2 - u1^2", 2, VarKind::species);
    double prev = 0.0;
    for (double m : {0.5, 1.0, 2.0, 4.0}) {
        double lo[2] = {0.0, 0.0}, hi[2] = {m, m};
        double L = estimate_lipschitz(r, lo, hi, 256).constant;
        CHECK(L >= prev);
        prev = L;
    }
}

TEST_CASE("literal zero detection") {
    CHECK(ReactionExpr::parse("0", 1, VarKind::species).is_literal_zero());
    CHECK_FALSE(ReactionExpr::parse("0.1", 1, VarKind::species).is_literal_zero());
    CHECK_FALSE(ReactionExpr::parse("u1", 1, VarKind::species).is_literal_zero());
}
