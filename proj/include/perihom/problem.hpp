#pragma once

#include <vector>

#include "perihom/expr.hpp"
#include "perihom/fem.hpp"
#include "perihom/geom.hpp"

namespace perihom {

/// Per-species data of the semi-linear system: diffusion d(y), deposition
/// coefficients a(y), b(y) on the hole boundary, volume rate R(u1..uN),
/// surface rate F(u), ellipticity floor alpha.
struct SpeciesSpec {
    ReactionExpr d;
    ReactionExpr a;
    ReactionExpr b;
    ReactionExpr R;
    ReactionExpr F;
    double alpha = 1.0;
};

struct ProblemSpec {
    std::vector<SpeciesSpec> species;

    int n_species() const { return static_cast<int>(species.size()); }

    /// Sampled admissibility checks on a unit-cell mesh: d >= alpha at every
    /// element centroid, a and b nonnegative at hole-edge quadrature points.
    /// Throws ValidationError.
    void validate_on(const Mesh& cell_mesh) const;
};

/// Coefficient expression evaluated at the cell coordinate y = x/eps mod 1
/// (periodic extension). Pass eps = 1 with cell-mesh coordinates unchanged.
ScalarCoeff cell_coeff(const ReactionExpr& e, double epsilon);

}  // namespace perihom
