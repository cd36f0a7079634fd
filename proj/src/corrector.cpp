#include "perihom/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <thread>

#include "perihom/errors.hpp"

namespace perihom {

std::vector<double> build_cutoff(const Mesh& mesh_eps, double epsilon, const CutoffSpec& spec) {
    std::vector<double> m(mesh_eps.n_vertices());
    for (std::size_t v = 0; v < m.size(); ++v) {
        Vec2 p = mesh_eps.vertices[v];
        double dist = std::min({p.x, 1.0 - p.x, p.y, 1.0 - p.y});
        double paper = std::clamp(2.0 - dist / epsilon, 0.0, 1.0);
        m[v] = spec.convention == CutoffConvention::paper ? paper : 1.0 - paper;
    }
    // the profile is 1-Lipschitz in the distance, so eps*|grad m| <= 2 with
    // room for the diagonal kinks of the nodal interpolant
    for (std::size_t t = 0; t < mesh_eps.triangles.size(); ++t) {
        Vec2 g = element_gradient(mesh_eps, m, static_cast<int>(t));
        if (epsilon * norm(g) > 2.0 + 1e-9) {
            throw Error("cut-off gradient bound violated on triangle " + std::to_string(t));
        }
    }
    return m;
}

MacroFields prepare_macro_fields(const Mesh& macro_mesh, const Field& u0, int order_M) {
    MacroFields f;
    f.u0 = u0;
    for (int s = 0; s < u0.n_species; ++s) {
        if (order_M >= 1) f.grad.push_back(recover_gradient(u0.species(s), macro_mesh));
        if (order_M >= 2) f.hess.push_back(recover_hessian(u0.species(s), macro_mesh));
    }
    return f;
}

Field reconstruct(const Mesh& macro_mesh, const MacroFields& macro, const CellSolution& cell,
                  const Mesh& mesh_eps, int order_M, std::span<const double> cutoff) {
    if (order_M < 0 || order_M > 2) throw Error("expansion order must be 0, 1 or 2");
    if (order_M >= 1) {
        if (mesh_eps.cell_vertex_of.empty() || mesh_eps.cell_hash != cell.mesh_hash) {
            throw MeshMismatch("micro mesh was not tiled from the cell solution's unit-cell mesh");
        }
        if (order_M >= 2 && !cell.has_theta) {
            throw Error("second-order reconstruction requested without theta cell functions");
        }
    }

    const double eps = mesh_eps.epsilon;
    const int n_species = macro.u0.n_species;
    Field rec = Field::zeros(n_species, mesh_eps.n_vertices(), mesh_eps.content_hash());
    P1Interpolator interp(macro_mesh);

    std::vector<double> gx, gy, h11, h12, h21, h22;
    for (int s = 0; s < n_species; ++s) {
        auto u0s = macro.u0.species(s);
        if (order_M >= 1) {
            gx.resize(macro_mesh.n_vertices());
            gy.resize(macro_mesh.n_vertices());
            for (std::size_t v = 0; v < macro_mesh.n_vertices(); ++v) {
                gx[v] = macro.grad[s][v].x;
                gy[v] = macro.grad[s][v].y;
            }
        }
        if (order_M >= 2) {
            h11.resize(macro_mesh.n_vertices());
            h12.resize(macro_mesh.n_vertices());
            h21.resize(macro_mesh.n_vertices());
            h22.resize(macro_mesh.n_vertices());
            for (std::size_t v = 0; v < macro_mesh.n_vertices(); ++v) {
                h11[v] = macro.hess[s][v].a11;
                h12[v] = macro.hess[s][v].a12;
                h21[v] = macro.hess[s][v].a21;
                h22[v] = macro.hess[s][v].a22;
            }
        }
        auto out = rec.species(s);
        for (std::size_t v = 0; v < mesh_eps.n_vertices(); ++v) {
            Vec2 x = mesh_eps.vertices[v];
            int ids[3];
            double w[3];
            interp.weights(x, ids, w);
            auto at = [&](std::span<const double> nodal) {
                return w[0] * nodal[ids[0]] + w[1] * nodal[ids[1]] + w[2] * nodal[ids[2]];
            };
            double val = at(u0s);
            if (order_M >= 1) {
                const int cv = mesh_eps.cell_vertex_of[v];
                double corr = 0.0;
                double dx = at(gx), dy = at(gy);
                double u1 = -(cell.chi[s][0][cv] * dx + cell.chi[s][1][cv] * dy);
                corr += eps * u1;
                if (order_M >= 2) {
                    double u2 = cell.theta[s][0][0][cv] * at(h11) + cell.theta[s][0][1][cv] * at(h12) +
                                cell.theta[s][1][0][cv] * at(h21) + cell.theta[s][1][1][cv] * at(h22);
                    corr += eps * eps * u2;
                }
                val += cutoff[v] * corr;
            }
            out[v] = val;
        }
    }
    return rec;
}

std::pair<double, double> corrector_error(const Field& u_eps, const Field& reconstruction,
                                          const Mesh& mesh_eps) {
    Field diff = u_eps;
    for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= reconstruction.values[i];
    return {veps_norm(diff, mesh_eps), l2_norm(diff, mesh_eps)};
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        sx += std::log(x[i]);
        sy += std::log(y[i]);
    }
    sx /= n;
    sy /= n;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = std::log(x[i]) - sx;
        num += dx * (std::log(y[i]) - sy);
        den += dx * dx;
    }
    return num / den;
}

ConvergenceReport rate_sweep(const PipelineConfig& config, const std::vector<double>& eps_list,
                             int order_M) {
    if (eps_list.size() < 3) {
        throw InsufficientPoints("rate sweep needs at least 3 epsilon values, got " +
                                 std::to_string(eps_list.size()));
    }
    std::vector<double> eps_sorted = eps_list;
    std::sort(eps_sorted.begin(), eps_sorted.end(), std::greater<>());

    const double h_cell = 1.0 / config.h_ratio;
    Mesh cell_mesh = build_unit_cell_mesh(config.geometry, h_cell);
    config.spec.validate_on(cell_mesh);
    CellSolution cell = solve_cell(cell_mesh, config.spec, order_M >= 2, config.cell);

    double h_macro = config.macro_h;
    if (h_macro <= 0.0) h_macro = eps_sorted.back() / config.h_ratio;
    CellGeometry no_hole{HoleShape::none, 0.0};
    Mesh macro_mesh = build_perforated_domain_mesh(1.0, no_hole, h_macro);
    MacroProblem mp = MacroProblem::from_cell(macro_mesh, config.spec, cell, config.macro_mode);
    auto [u0, macro_report] = solve_macro(mp, config.picard);
    MacroFields mf = prepare_macro_fields(macro_mesh, u0, std::max(order_M, 1));

    ConvergenceReport report;
    report.order_M = order_M;
    report.rows.resize(eps_sorted.size());

    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    auto run_one = [&](std::size_t i) {
        try {
            const double eps = eps_sorted[i];
            Mesh mesh_eps = build_perforated_domain_mesh(eps, config.geometry, eps / config.h_ratio);
            auto [u_eps, rep] = solve_micro(mesh_eps, config.spec, config.picard);
            std::vector<double> cutoff = build_cutoff(mesh_eps, eps, config.cutoff);
            Field rec = reconstruct(macro_mesh, mf, cell, mesh_eps, order_M, cutoff);
            auto [ev, el] = corrector_error(u_eps, rec, mesh_eps);
            report.rows[i] = {eps, eps / config.h_ratio, ev, el, rep.iterations};
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };

    if (config.jobs > 1) {
        std::vector<std::thread> pool;
        std::atomic<std::size_t> next{0};
        int workers = std::min<int>(config.jobs, static_cast<int>(eps_sorted.size()));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= eps_sorted.size()) return;
                    run_one(i);
                }
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < eps_sorted.size(); ++i) run_one(i);
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<double> xs, yv, yl;
    double max_err = 0.0;
    for (const RateRow& r : report.rows) {
        max_err = std::max(max_err, r.err_veps);
    }
    report.degenerate = max_err < 1e-9;
    if (!report.degenerate) {
        for (const RateRow& r : report.rows) {
            if (r.err_veps > 0.0 && r.err_l2 > 0.0) {
                xs.push_back(r.epsilon);
                yv.push_back(r.err_veps);
                yl.push_back(r.err_l2);
            }
        }
        if (xs.size() >= 3) {
            report.slope_veps = fit_loglog_slope(xs, yv);
            report.slope_l2 = fit_loglog_slope(xs, yl);
        } else {
            report.degenerate = true;
        }
    }
    if (report.degenerate) {
        report.slope_veps = std::nan("");
        report.slope_l2 = std::nan("");
    }
    return report;
}

void write_report_csv(const ConvergenceReport& report, std::ostream& os) {
    os << "epsilon,h,M,err_Veps,err_L2\n";
    char buf[160];
    for (const RateRow& r : report.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g\n", r.epsilon, r.h, report.order_M,
                      r.err_veps, r.err_l2);
        os << buf;
    }
    if (report.degenerate) {
        os << "slope=degenerate\n";
    } else {
        std::snprintf(buf, sizeof buf, "slope=%.6f\n", report.slope_veps);
        os << buf;
    }
}

}  // namespace perihom
