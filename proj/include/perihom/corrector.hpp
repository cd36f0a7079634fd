#pragma once

#include <iosfwd>
#include <vector>

#include "perihom/cell.hpp"
#include "perihom/macro.hpp"
#include "perihom/micro.hpp"

namespace perihom {

/// Boundary-layer mask orientation. The `paper` profile is 1 within eps of
/// the outer boundary and 0 beyond 2*eps; `standard` is its complement and
/// is the default for rate measurement (the corrector is suppressed exactly
/// where it violates the Dirichlet condition).
enum class CutoffConvention { paper, standard };

struct CutoffSpec {
    CutoffConvention convention = CutoffConvention::standard;
};

/// Piecewise-linear nodal mask in dist(x, Gamma); the interpolated gradient
/// satisfies eps * |grad m| <= 2.
std::vector<double> build_cutoff(const Mesh& mesh_eps, double epsilon, const CutoffSpec& spec);

/// Macro solution bundled with its recovered derivative fields.
struct MacroFields {
    Field u0;
    std::vector<std::vector<Vec2>> grad;  // per species, nodal on the macro mesh
    std::vector<std::vector<Mat2>> hess;  // filled when second order is requested
};

MacroFields prepare_macro_fields(const Mesh& macro_mesh, const Field& u0, int order_M);

/// Two-scale reconstruction on the micro mesh:
///   u0(x) + m(x) * (eps * u1 + eps^2 * u2),
///   u1 = -chi(x/eps) . grad u0,  u2 = theta(x/eps) : hess u0.
/// Cell functions are exact nodal lookups through the tiling provenance;
/// macro fields are P1-interpolated at the micro nodes. Throws MeshMismatch
/// when the micro mesh was not tiled from the cell solution's mesh.
Field reconstruct(const Mesh& macro_mesh, const MacroFields& macro, const CellSolution& cell,
                  const Mesh& mesh_eps, int order_M, std::span<const double> cutoff);

/// (V^eps seminorm, L2 norm) of the difference of two fields on one mesh.
std::pair<double, double> corrector_error(const Field& u_eps, const Field& reconstruction,
                                          const Mesh& mesh_eps);

/// One full pipeline configuration for the rate verification.
struct PipelineConfig {
    CellGeometry geometry;
    ProblemSpec spec;
    double h_ratio = 8.0;  // micro edge length h = eps / h_ratio
    double macro_h = 0.0;  // 0 selects the finest micro h
    PicardOptions picard;
    CellOptions cell;
    MacroMode macro_mode = MacroMode::volume_only;
    CutoffSpec cutoff;
    int jobs = 1;
};

struct RateRow {
    double epsilon;
    double h;
    double err_veps;
    double err_l2;
    int micro_iterations;
};

struct ConvergenceReport {
    std::vector<RateRow> rows;  // epsilon strictly decreasing
    int order_M = 1;
    double slope_veps = 0.0;
    double slope_l2 = 0.0;
    /// Errors at the solver-tolerance floor; the fitted slope is meaningless.
    bool degenerate = false;
};

/// Runs the cell problems once, the macro solve once, then one micro solve
/// and reconstruction per epsilon (optionally in parallel), and fits the
/// log-log convergence slope. Throws InsufficientPoints for fewer than
/// three epsilon values.
ConvergenceReport rate_sweep(const PipelineConfig& config, const std::vector<double>& eps_list,
                             int order_M);

/// CSV with columns epsilon,h,M,err_Veps,err_L2 and a trailing slope line.
void write_report_csv(const ConvergenceReport& report, std::ostream& os);

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace perihom
