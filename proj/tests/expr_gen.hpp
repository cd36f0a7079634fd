#pragma once

// Seeded random expression generator shared by the unit and acceptance
// suites. Trees cover every grammar production; divisions get denominators
// bounded away from zero and min/max arguments are offset so the generated
// trees stay smooth at sample points (the gradient contract is for smooth
// points only).

#include <random>
#include <string>

namespace testgen {

class ExprGen {
public:
    ExprGen(unsigned seed, int arity) : rng_(seed), arity_(arity) {}

    std::string tree(int depth = 3) { return gen(depth); }

private:
    std::mt19937 rng_;
    int arity_;

    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    std::string literal() {
        double v = std::uniform_real_distribution<double>(0.5, 3.0)(rng_);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return buf;
    }

    std::string var() { return "u" + std::to_string(pick(arity_) + 1); }

    std::string atom() { return pick(2) == 0 ? literal() : var(); }

    std::string gen(int depth) {
        if (depth <= 0) return atom();
        switch (pick(10)) {
            case 0: return gen(depth - 1) + " + " + gen(depth - 1);
            case 1: return gen(depth - 1) + " - " + gen(depth - 1);
            case 2: return "(" + gen(depth - 1) + ")*(" + gen(depth - 1) + ")";
            case 3: {
                // denominator bounded below by 1
                std::string den = pick(2) == 0 ? literal() : "(" + var() + "*" + var() + " + 1)";
                return "(" + gen(depth - 1) + ")/" + den;
            }
            case 4: return "-(" + gen(depth - 1) + ")";
            case 5: return "(" + gen(depth - 1) + ")^" + std::to_string(pick(4));
            case 6: return "sin(" + gen(depth - 1) + ")";
            case 7: return "cos(" + gen(depth - 1) + ")";
            case 8: return "exp(sin(" + gen(depth - 1) + "))";
            default: {
                // offset keeps the selected branch fixed near sample points
                std::string a = gen(depth - 1);
                const char* fn = pick(2) == 0 ? "min" : "max";
                return std::string(fn) + "(" + a + ", " + a + " + " + literal() + ")";
            }
        }
    }
};

}  // namespace testgen
