#include "perihom/micro.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "perihom/errors.hpp"
#include "perihom/picard_engine.hpp"

namespace perihom {

namespace {

double clamp0(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

namespace detail {

std::pair<Field, PicardReport> run_picard(const Mesh& mesh, int n_species,
                                          const std::vector<SparseMatrix>& A,
                                          const std::vector<int>& dirichlet,
                                          const RhsBuilder& rhs_of, const PicardOptions& opts) {
    Field u = Field::zeros(n_species, mesh.n_vertices(), mesh.content_hash());
    PicardReport rep;
    rep.relax = opts.relax;
    rep.n_species = n_species;

    SolveOpts sopts;
    sopts.tol = opts.linear_tol;

    Field next = u;
    for (int n = 0; n < opts.max_iter; ++n) {
        for (int s = 0; s < n_species; ++s) {
            std::vector<double> b = rhs_of(s, u);
            for (int v : dirichlet) b[v] = 0.0;
            std::vector<double> sol = solve_linear(A[s], b, sopts);
            auto out = next.species(s);
            auto cur = u.species(s);
            for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
                out[v] = opts.relax * sol[v] + (1.0 - opts.relax) * cur[v];
            }
        }
        Field diff = next;
        for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= u.values[i];
        double res = veps_norm(diff, mesh);
        double unorm = veps_norm(next, mesh);
        rep.residual_norms.push_back(res);
        rep.iterate_norms.push_back(unorm);
        u = next;
        rep.iterations = n + 1;
        if (opts.record_iterates) rep.iterates.push_back(u);
        if (res <= opts.tol * unorm) {
            rep.converged = true;
            rep.immediate = n == 0;
            break;
        }
    }

    // contraction factor from successive residual ratios; the first sweep
    // starts at zero and is excluded as pre-asymptotic
    std::vector<double> log_ratios;
    for (std::size_t i = 2; i < rep.residual_norms.size(); ++i) {
        if (rep.residual_norms[i - 1] > 0.0 && rep.residual_norms[i] > 0.0) {
            log_ratios.push_back(std::log(rep.residual_norms[i] / rep.residual_norms[i - 1]));
        }
    }
    if (!log_ratios.empty()) {
        rep.kappa_hat = std::exp(std::accumulate(log_ratios.begin(), log_ratios.end(), 0.0) /
                                 static_cast<double>(log_ratios.size()));
        rep.kappa_valid = true;
    }

    if (!rep.converged && opts.throw_on_nonconvergence) {
        std::string diag = "stagnating";
        std::size_t m = rep.residual_norms.size();
        if (m >= 2 && rep.residual_norms[m - 1] > rep.residual_norms[m - 2]) diag = "diverging";
        throw NoConvergence("fixed-point iteration: no convergence after " +
                            std::to_string(opts.max_iter) + " sweeps (" + diag + " residual " +
                            std::to_string(rep.residual_norms.empty() ? 0.0 : rep.residual_norms.back()) +
                            ")");
    }
    return {std::move(u), std::move(rep)};
}

}  // namespace detail

std::pair<Field, PicardReport> solve_micro(const Mesh& mesh_eps, const ProblemSpec& spec,
                                           const PicardOptions& opts) {
    const int n_species = spec.n_species();
    const double eps = mesh_eps.epsilon;

    std::vector<int> dirichlet = tagged_vertices(mesh_eps, EdgeTag::exterior);
    if (dirichlet.empty()) throw ValidationError("microscopic mesh has no exterior boundary");

    SparseMatrix M = assemble_mass(mesh_eps);
    std::vector<SparseMatrix> A;
    std::vector<SparseMatrix> Ba, Bb;
    std::vector<char> has_surface;
    for (int s = 0; s < n_species; ++s) {
        const SpeciesSpec& sp = spec.species[s];
        SparseMatrix As = assemble_stiffness(mesh_eps, cell_coeff(sp.d, eps));
        std::vector<char> constrained(As.dim(), 0);
        for (int v : dirichlet) constrained[v] = 1;
        As.eliminate(constrained);
        A.push_back(std::move(As));
        bool surf = !(sp.a.is_literal_zero() && sp.b.is_literal_zero());
        has_surface.push_back(surf);
        if (surf) {
            Ba.push_back(assemble_boundary_mass(mesh_eps, EdgeTag::hole, cell_coeff(sp.a, eps)));
            Bb.push_back(assemble_boundary_mass(mesh_eps, EdgeTag::hole, cell_coeff(sp.b, eps)));
        } else {
            Ba.emplace_back();
            Bb.emplace_back();
        }
    }

    const std::size_t nv = mesh_eps.n_vertices();
    detail::RhsBuilder rhs = [&](int s, const Field& u) {
        const SpeciesSpec& sp = spec.species[s];
        // volume reaction at the previous iterate, inputs clamped at zero
        // (nonlinearities are extended by their value at zero below it)
        std::vector<double> r(nv);
        std::vector<double> args(n_species);
        for (std::size_t v = 0; v < nv; ++v) {
            for (int j = 0; j < n_species; ++j) args[j] = clamp0(u.species(j)[v]);
            r[v] = sp.R.eval(args);
        }
        std::vector<double> b = M.multiply(r);
        if (has_surface[s]) {
            auto us = u.species(s);
            std::vector<double> fs(nv);
            for (std::size_t v = 0; v < nv; ++v) {
                double arg = clamp0(us[v]);
                fs[v] = sp.F.eval(std::span<const double>(&arg, 1));
            }
            std::vector<double> au = Ba[s].multiply(us);
            std::vector<double> bf = Bb[s].multiply(fs);
            for (std::size_t v = 0; v < nv; ++v) b[v] += eps * (au[v] - bf[v]);
        }
        return b;
    };

    auto [u, rep] = detail::run_picard(mesh_eps, n_species, A, dirichlet, rhs, opts);

    if (opts.estimate_contraction_inputs) {
        KappaEstimate ke = estimate_kappa(mesh_eps, spec, rep, std::max(1e-6, u.max_value()));
        rep.cp = ke.cp;
        rep.alpha = ke.alpha;
        rep.max_lipschitz = ke.max_lipschitz;
        rep.kappa_p = ke.kappa_p;
    }
    return {std::move(u), std::move(rep)};
}

PropertyReport check_solution_properties(const Field& u, const Mesh& mesh) {
    PropertyReport rep;
    for (int s = 0; s < u.n_species; ++s) {
        auto us = u.species(s);
        rep.min_value.push_back(*std::min_element(us.begin(), us.end()));
        rep.max_value.push_back(*std::max_element(us.begin(), us.end()));
        for (double v : us) rep.sup_norm = std::max(rep.sup_norm, std::abs(v));
    }
    rep.l2_volume = l2_norm(u, mesh);
    rep.l2_surface = surface_l2_norm(u, mesh, EdgeTag::hole);
    rep.boundedness_ratio = rep.sup_norm / (1.0 + rep.l2_volume + rep.l2_surface);
    return rep;
}

double measure_poincare_constant(const Mesh& mesh) {
    const std::size_t nv = mesh.n_vertices();
    auto probe = [&](const std::function<double(Vec2)>& f) {
        std::vector<double> nodal(nv);
        for (std::size_t v = 0; v < nv; ++v) nodal[v] = f(mesh.vertices[v]);
        double h1 = h1_seminorm(nodal, mesh);
        return h1 > 0.0 ? l2_norm(nodal, mesh) / h1 : 0.0;
    };
    double cp = 0.0;
    cp = std::max(cp, probe([](Vec2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); }));
    cp = std::max(cp, probe([](Vec2 p) { return std::sin(M_PI * p.x) * std::sin(2 * M_PI * p.y); }));
    cp = std::max(cp, probe([](Vec2 p) { return std::sin(2 * M_PI * p.x) * std::sin(M_PI * p.y); }));
    cp = std::max(cp, probe([](Vec2 p) { return p.x * (1 - p.x) * p.y * (1 - p.y); }));
    return cp;
}

KappaEstimate estimate_kappa(const Mesh& mesh, const ProblemSpec& spec, const PicardReport& report,
                             double box_hi) {
    KappaEstimate ke;
    ke.kappa_hat = report.kappa_hat;
    ke.kappa_valid = report.kappa_valid;
    ke.immediate = report.immediate;
    ke.n_species = spec.n_species();
    ke.cp = measure_poincare_constant(mesh);
    ke.alpha = std::numeric_limits<double>::max();
    for (const SpeciesSpec& sp : spec.species) ke.alpha = std::min(ke.alpha, sp.alpha);
    std::vector<double> lo(spec.n_species(), 0.0), hi(spec.n_species(), box_hi);
    for (const SpeciesSpec& sp : spec.species) {
        LipschitzEstimate le = estimate_lipschitz(sp.R, lo, hi, 256);
        ke.max_lipschitz = std::max(ke.max_lipschitz, le.constant);
    }
    ke.kappa_p = ke.cp / ke.alpha * ke.max_lipschitz * spec.n_species();
    return ke;
}

}  // namespace perihom
