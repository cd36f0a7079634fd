#pragma once

// Shipped solver configurations shared between the unit and acceptance
// suites, with regression values frozen from the first verified runs.

#include "perihom/micro.hpp"
#include "perihom/problem.hpp"

namespace catalog {

/// Two-species surface-reaction system on the r = 0.25 disk geometry.
inline perihom::ProblemSpec two_species() {
    using namespace perihom;
    ProblemSpec spec;
    SpeciesSpec s1;
    s1.d = ReactionExpr::parse("1", 2, VarKind::cell);
    s1.a = ReactionExpr::parse("0.1", 2, VarKind::cell);
    s1.b = ReactionExpr::parse("0.1", 2, VarKind::cell);
    s1.R = ReactionExpr::parse("u1*u2 - u1^2 + 0.5", 2, VarKind::species);
    s1.F = ReactionExpr::parse("u1/(u1 + 1)", 1, VarKind::species);
    s1.alpha = 1.0;
    SpeciesSpec s2 = s1;
    s2.R = ReactionExpr::parse("-(u1*u2) + 1", 2, VarKind::species);
    spec.species = {s1, s2};
    return spec;
}

/// Linear single-species benchmark of the corrector rate verification.
inline perihom::ProblemSpec rate_benchmark() {
    using namespace perihom;
    ProblemSpec spec;
    SpeciesSpec s;
    s.d = ReactionExpr::parse("1", 2, VarKind::cell);
    s.a = ReactionExpr::parse("0", 2, VarKind::cell);
    s.b = ReactionExpr::parse("0", 2, VarKind::cell);
    s.R = ReactionExpr::parse("1", 1, VarKind::species);
    s.F = ReactionExpr::parse("0", 1, VarKind::species);
    s.alpha = 1.0;
    spec.species = {s};
    return spec;
}

inline perihom::PicardOptions tight_picard() {
    perihom::PicardOptions opts;
    opts.tol = 1e-10;
    opts.relax = 1.0;
    opts.max_iter = 60;
    return opts;
}

// golden regression values (catalog two_species, disk r = 0.25, h = eps/8,
// relax = 1, tol = 1e-10)
inline constexpr double kGoldenMax1Eps4 = 0.042429618647061629;
inline constexpr double kGoldenMax2Eps4 = 0.084514694057501893;
inline constexpr double kGoldenRatioEps4 = 0.071785494245741321;
inline constexpr double kGoldenRatioEps8 = 0.069092611366682738;
inline constexpr int kGoldenItersEps4 = 5;

}  // namespace catalog
