#include "perihom/runner.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>

#include "perihom/errors.hpp"

namespace perihom {

namespace fs = std::filesystem;

namespace {

std::string eps_suffix(double eps) {
    long k = std::lround(1.0 / eps);
    return "eps_1_" + std::to_string(k);
}

void write_artifact(const fs::path& path, const std::string& config_hash,
                    const std::function<void(std::ostream&)>& payload) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write artifact '" + path.string() + "'");
    os << "CONFIG " << config_hash << "\n";
    payload(os);
}

std::string artifact_hash(const fs::path& path) {
    std::ifstream is(path);
    std::string kw, hash;
    if (is >> kw >> hash && kw == "CONFIG") return hash;
    return "";
}

void check_provenance(const fs::path& dir, const std::string& hash) {
    if (!fs::exists(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string h = artifact_hash(entry.path());
        if (!h.empty() && h != hash) {
            throw ValidationError("output directory holds artifacts of a different configuration (" +
                                  entry.path().filename().string() + " has config " + h + ")");
        }
    }
}

void write_picard_csv(const PicardReport& rep, std::ostream& os) {
    os << "n,residual,ratio\n";
    char buf[96];
    for (std::size_t i = 0; i < rep.residual_norms.size(); ++i) {
        if (i == 0) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,\n", i + 1, rep.residual_norms[i]);
        } else {
            double ratio = rep.residual_norms[i - 1] > 0.0
                               ? rep.residual_norms[i] / rep.residual_norms[i - 1]
                               : std::nan("");
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i + 1, rep.residual_norms[i], ratio);
        }
        os << buf;
    }
}

struct Pipeline {
    RunConfig config;
    PipelineConfig pc;
    fs::path out;
    std::string hash;

    explicit Pipeline(const RunConfig& c) : config(c), pc(c.build_pipeline()), out(c.out_dir), hash(c.hash()) {
        fs::create_directories(out);
    }

    Mesh cell_mesh() const { return build_unit_cell_mesh(pc.geometry, 1.0 / pc.h_ratio); }

    Mesh macro_mesh() const {
        double h = pc.macro_h;
        if (h <= 0.0) {
            double eps_min = config.eps_list.front();
            for (double e : config.eps_list) eps_min = std::min(eps_min, e);
            h = eps_min / pc.h_ratio;
        }
        return build_perforated_domain_mesh(1.0, CellGeometry{HoleShape::none, 0.0}, h);
    }
};

int cmd_mesh(Pipeline& p, std::ostream& log) {
    Mesh cell = p.cell_mesh();
    write_artifact(p.out / "cell.mesh", p.hash, [&](std::ostream& os) { write_mesh(cell, os); });
    log << "wrote " << (p.out / "cell.mesh").string() << " (" << cell.n_vertices() << " vertices)\n";
    for (double eps : p.config.eps_list) {
        Mesh mesh_eps = build_perforated_domain_mesh(eps, p.pc.geometry, eps / p.pc.h_ratio);
        fs::path path = p.out / (eps_suffix(eps) + ".mesh");
        write_artifact(path, p.hash, [&](std::ostream& os) { write_mesh(mesh_eps, os); });
        log << "wrote " << path.string() << " (" << mesh_eps.n_vertices() << " vertices)\n";
    }
    return kExitOk;
}

int cmd_cell(Pipeline& p, std::ostream& log) {
    Mesh cell_mesh = p.cell_mesh();
    p.pc.spec.validate_on(cell_mesh);
    CellSolution cs = solve_cell(cell_mesh, p.pc.spec, p.config.order >= 2, p.pc.cell);
    write_artifact(p.out / "cell.mesh", p.hash, [&](std::ostream& os) { write_mesh(cell_mesh, os); });
    write_artifact(p.out / "cell_solution.txt", p.hash,
                   [&](std::ostream& os) { write_cell_solution(cs, os); });
    for (int s = 0; s < cs.n_species; ++s) {
        log << "species " << s + 1 << ": q = [" << cs.q[s].a11 << " " << cs.q[s].a12 << "; "
            << cs.q[s].a21 << " " << cs.q[s].a22 << "], <a> = " << cs.surf_a[s]
            << ", <b> = " << cs.surf_b[s] << ", porosity = " << cs.porosity << "\n";
    }
    return kExitOk;
}

int cmd_micro(Pipeline& p, std::ostream& log) {
    PicardOptions opts = p.pc.picard;
    opts.throw_on_nonconvergence = false;
    bool all_converged = true;
    for (double eps : p.config.eps_list) {
        Mesh mesh_eps = build_perforated_domain_mesh(eps, p.pc.geometry, eps / p.pc.h_ratio);
        auto [u, rep] = solve_micro(mesh_eps, p.pc.spec, opts);
        std::string tag = eps_suffix(eps);
        write_artifact(p.out / ("u_" + tag + ".field"), p.hash,
                       [&](std::ostream& os) { write_field(u, os); });
        write_artifact(p.out / ("picard_" + tag + ".csv"), p.hash,
                       [&](std::ostream& os) { write_picard_csv(rep, os); });
        log << tag << ": " << rep.iterations << " sweeps, residual "
            << (rep.residual_norms.empty() ? 0.0 : rep.residual_norms.back())
            << (rep.converged ? "" : " (NOT CONVERGED)") << "\n";
        all_converged = all_converged && rep.converged;
    }
    return all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_macro(Pipeline& p, std::ostream& log) {
    Mesh cell_mesh = p.cell_mesh();
    p.pc.spec.validate_on(cell_mesh);
    CellSolution cs = solve_cell(cell_mesh, p.pc.spec, p.config.order >= 2, p.pc.cell);
    Mesh macro_mesh = p.macro_mesh();
    MacroProblem mp = MacroProblem::from_cell(macro_mesh, p.pc.spec, cs, p.pc.macro_mode);
    PicardOptions opts = p.pc.picard;
    opts.throw_on_nonconvergence = false;
    auto [u0, rep] = solve_macro(mp, opts);
    write_artifact(p.out / "u_macro.field", p.hash, [&](std::ostream& os) { write_field(u0, os); });
    write_artifact(p.out / "picard_macro.csv", p.hash,
                   [&](std::ostream& os) { write_picard_csv(rep, os); });
    log << "macro: " << rep.iterations << " sweeps"
        << (rep.converged ? "" : " (NOT CONVERGED)") << "\n";
    return rep.converged ? kExitOk : kExitNoConvergence;
}

int cmd_verify(Pipeline& p, std::ostream& log, bool gnuplot_script) {
    check_provenance(p.out, p.hash);
    ConvergenceReport report = rate_sweep(p.pc, p.config.eps_list, p.config.order);
    write_artifact(p.out / "report.csv", p.hash,
                   [&](std::ostream& os) { write_report_csv(report, os); });
    if (gnuplot_script) {
        write_artifact(p.out / "errors.dat", p.hash, [&](std::ostream& os) {
            for (const RateRow& r : report.rows) {
                os << r.epsilon << " " << r.err_veps << " " << r.err_l2 << "\n";
            }
        });
        std::ofstream gp(p.out / "plot.gp");
        gp << "set logscale xy\n"
           << "set xlabel 'epsilon'\n"
           << "set ylabel 'error'\n"
           << "set key left top\n"
           << "plot 'errors.dat' using 1:2 with linespoints title 'V^eps error', \\\n"
           << "     'errors.dat' using 1:3 with linespoints title 'L2 error'\n";
    }
    for (const RateRow& r : report.rows) {
        log << "eps = " << r.epsilon << "  h = " << r.h << "  err_Veps = " << r.err_veps
            << "  err_L2 = " << r.err_l2 << "\n";
    }
    if (report.degenerate) {
        log << "slope=degenerate (errors at solver-tolerance floor)\n";
    } else {
        char buf[64];
        std::snprintf(buf, sizeof buf, "slope=%.6f\n", report.slope_veps);
        log << buf;
    }
    return kExitOk;
}

}  // namespace

int run_command(const std::string& subcommand, const RunConfig& config, std::ostream& log,
                bool gnuplot_script) {
    Pipeline p(config);
    if (subcommand == "mesh") return cmd_mesh(p, log);
    if (subcommand == "cell") return cmd_cell(p, log);
    if (subcommand == "micro") return cmd_micro(p, log);
    if (subcommand == "macro") return cmd_macro(p, log);
    if (subcommand == "verify") return cmd_verify(p, log, gnuplot_script);
    throw ValidationError("unknown subcommand '" + subcommand + "'");
}

}  // namespace perihom
