#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <vector>

#include "perihom/fem.hpp"
#include "perihom/geom.hpp"
#include "perihom/problem.hpp"

namespace perihom {

using CellVector = std::array<std::vector<double>, 2>;          // chi components
using CellMatrixField = std::array<CellVector, 2>;              // theta components

struct CellOptions {
    double solver_tol = 1e-10;
    int max_iter = 0;
    /// Relative compatibility residual above which the second cell problem
    /// refuses to solve.
    double solvability_tol = 1e-6;
    /// Absorb the mean of nonzero theta boundary data into the macroscopic
    /// balance instead of failing the compatibility check.
    bool balance_theta_boundary = false;
    /// Macroscopic values frozen at an evaluation point; when present the
    /// theta boundary data is b(y) F(u*) - a(y) u* instead of zero.
    std::optional<std::vector<double>> frozen_macro_values;
};

/// First and second cell solutions with the derived effective quantities.
struct CellSolution {
    std::string mesh_hash;
    double porosity = 1.0;  // |Y1| / |Y|
    int n_species = 0;
    std::vector<CellVector> chi;      // per species, zero-mean over Y1
    std::vector<Mat2> q;              // symmetrized effective tensors
    std::vector<double> q_asymmetry;  // Frobenius norm of q - q^T before symmetrization
    std::vector<double> surf_a;
    std::vector<double> surf_b;
    std::vector<CellMatrixField> theta;  // empty unless second order requested
    bool has_theta = false;
};

/// Cell problem for the corrector chi: for each direction k solve
///   int_{Y1} d grad(chi^k) . grad(v) = int_{Y1} d dv/dy_k
/// over periodic test functions (hole-boundary condition is natural), then
/// subtract the Y1-mean.
CellVector solve_chi(const Mesh& cell_mesh, const ScalarCoeff& d, const CellOptions& opts = {});

/// Effective tensor q_jk = (1/|Y|) int_{Y1} d (delta_jk - d chi^k / d y_j).
/// Returns the symmetrized tensor plus the pre-symmetrization asymmetry.
std::pair<Mat2, double> compute_q(const Mesh& cell_mesh, const ScalarCoeff& d, const CellVector& chi);

/// Surface averages <a> = int_{dY0} a dS and <b>.
std::pair<double, double> compute_surface_averages(const Mesh& cell_mesh, const ScalarCoeff& a,
                                                   const ScalarCoeff& b);

/// Second cell problem for theta (one scalar unknown per Hessian slot):
///   int d grad(theta_jk).grad(v) = int (d delta_jk - d d_j chi^k - q_jk/porosity) v
///                                 + int d chi^k d_j v - int_{dY0} g_jk v dS
/// with g_jk = boundary_g * delta_jk / 2 (frozen macroscopic surface data
/// spread over the Hessian trace) or zero in pure-diffusion mode. Checks the
/// compatibility residual and throws SolvabilityViolation beyond tolerance.
CellMatrixField solve_theta(const Mesh& cell_mesh, const ScalarCoeff& d, const CellVector& chi,
                            const Mat2& q, const ScalarCoeff* boundary_g,
                            const CellOptions& opts = {});

/// Full per-species pipeline: chi, q, surface averages, optionally theta
/// (pure-diffusion boundary data unless frozen values are supplied).
CellSolution solve_cell(const Mesh& cell_mesh, const ProblemSpec& spec, bool with_theta,
                        const CellOptions& opts = {});

/// Y1-average of a nodal function, (int_{Y1} f) / |Y1|.
double cell_mean(std::span<const double> nodal, const Mesh& cell_mesh);

void write_cell_solution(const CellSolution& cs, std::ostream& os);
CellSolution read_cell_solution(std::istream& is);

}  // namespace perihom
