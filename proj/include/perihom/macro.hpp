#pragma once

#include <vector>

#include "perihom/cell.hpp"
#include "perihom/fem.hpp"
#include "perihom/micro.hpp"

namespace perihom {

enum class MacroMode { volume_only, with_surface };

/// Homogenized problem on the unperforated domain: constant effective
/// tensors, porosity-scaled volume reactions, optional zeroth-order surface
/// terms <a>u - <b>F(u) folded into the right-hand side.
struct MacroProblem {
    Mesh mesh;  // no holes, exterior Dirichlet boundary
    int n_species = 1;
    std::vector<Mat2> q;
    double porosity = 1.0;
    std::vector<double> surf_a;
    std::vector<double> surf_b;
    std::vector<ReactionExpr> R;  // arity n_species
    std::vector<ReactionExpr> F;  // arity 1
    MacroMode mode = MacroMode::volume_only;

    static MacroProblem from_cell(Mesh mesh, const ProblemSpec& spec, const CellSolution& cs,
                                  MacroMode mode);
    void validate() const;  // q SPD, porosity in (0,1]
};

std::pair<Field, PicardReport> solve_macro(const MacroProblem& problem, const PicardOptions& opts = {});

/// Area-weighted average of element gradients at the nodes.
std::vector<Vec2> recover_gradient(std::span<const double> nodal, const Mesh& mesh);

/// Gradient recovery applied to each recovered gradient component;
/// H(j,k) approximates d^2 u / dx_j dx_k.
std::vector<Mat2> recover_hessian(std::span<const double> nodal, const Mesh& mesh);

}  // namespace perihom
