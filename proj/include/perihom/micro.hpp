#pragma once

#include <cmath>
#include <vector>

#include "perihom/fem.hpp"
#include "perihom/geom.hpp"
#include "perihom/problem.hpp"

namespace perihom {

struct PicardOptions {
    double tol = 1e-8;        // on ||u^{n+1} - u^n||_Veps relative to ||u^{n+1}||_Veps
    int max_iter = 50;
    double relax = 0.8;       // under-relaxation omega
    double linear_tol = 1e-10;
    bool record_iterates = false;
    bool throw_on_nonconvergence = true;
    bool estimate_contraction_inputs = true;
};

/// Iteration log of one fixed-point solve. kappa_hat is the geometric mean
/// of successive residual ratios, recorded once three iterates exist.
struct PicardReport {
    std::vector<double> residual_norms;  // ||u^{n+1} - u^n||_Veps
    std::vector<double> iterate_norms;   // ||u^{n+1}||_Veps
    int iterations = 0;
    bool converged = false;
    bool immediate = false;  // residual hit the tolerance on the first sweep
    double kappa_hat = std::nan("");
    bool kappa_valid = false;
    double relax = 1.0;
    // contraction inputs (filled when estimation is enabled)
    double cp = std::nan("");
    double alpha = std::nan("");
    double max_lipschitz = std::nan("");
    int n_species = 0;
    double kappa_p = std::nan("");
    std::vector<Field> iterates;  // u^1, u^2, ... when recorded
};

/// Fixed-point solve of the microscopic semi-linear system on a perforated
/// mesh: each sweep solves the N decoupled stiffness systems with the volume
/// reaction and the hole-boundary term lagged at the previous iterate,
/// under-relaxed by omega. Starts from zero.
std::pair<Field, PicardReport> solve_micro(const Mesh& mesh_eps, const ProblemSpec& spec,
                                           const PicardOptions& opts = {});

struct PropertyReport {
    std::vector<double> min_value;  // per species
    std::vector<double> max_value;
    double sup_norm = 0.0;
    double l2_volume = 0.0;
    double l2_surface = 0.0;
    /// ||u||_inf / (1 + ||u||_{L2(Omega)} + ||u||_{L2(Gamma)})
    double boundedness_ratio = 0.0;
};

PropertyReport check_solution_properties(const Field& u, const Mesh& mesh);

/// Largest ||v||_{L2} / ||v||_Veps over a fixed family of probe fields
/// vanishing on the outer boundary.
double measure_poincare_constant(const Mesh& mesh);

struct KappaEstimate {
    double kappa_hat = std::nan("");
    bool kappa_valid = false;
    bool immediate = false;
    double kappa_p = std::nan("");  // cp * maxL * N / alpha
    double cp = 0.0;
    double max_lipschitz = 0.0;
    double alpha = 0.0;
    int n_species = 0;
};

/// Compares the measured contraction factor against the configured bound,
/// with Lipschitz constants sampled on [0, box_hi]^N.
KappaEstimate estimate_kappa(const Mesh& mesh, const ProblemSpec& spec, const PicardReport& report,
                             double box_hi);

}  // namespace perihom
