#include "perihom/macro.hpp"

#include <cmath>
#include <string>

#include "perihom/errors.hpp"
#include "perihom/picard_engine.hpp"

namespace perihom {

namespace {

double clamp0(double v) { return v > 0.0 ? v : 0.0; }

}  // namespace

MacroProblem MacroProblem::from_cell(Mesh mesh, const ProblemSpec& spec, const CellSolution& cs,
                                     MacroMode mode) {
    MacroProblem p;
    p.mesh = std::move(mesh);
    p.n_species = spec.n_species();
    p.q = cs.q;
    p.porosity = cs.porosity;
    p.surf_a = cs.surf_a;
    p.surf_b = cs.surf_b;
    for (const SpeciesSpec& sp : spec.species) {
        p.R.push_back(sp.R);
        p.F.push_back(sp.F);
    }
    p.mode = mode;
    p.validate();
    return p;
}

void MacroProblem::validate() const {
    if (!(porosity > 0.0 && porosity <= 1.0 + 1e-12)) {
        throw ValidationError("macro problem: porosity must lie in (0, 1]");
    }
    for (int s = 0; s < n_species; ++s) {
        auto ev = q[s].sym_eigenvalues();
        if (!(ev[0] > 0.0)) {
            throw ValidationError("macro problem: effective tensor of species " +
                                  std::to_string(s + 1) + " is not positive definite");
        }
    }
}

std::pair<Field, PicardReport> solve_macro(const MacroProblem& problem, const PicardOptions& opts) {
    problem.validate();
    const Mesh& mesh = problem.mesh;
    const int n_species = problem.n_species;

    std::vector<int> dirichlet = tagged_vertices(mesh, EdgeTag::exterior);
    if (dirichlet.empty()) throw ValidationError("macro mesh has no exterior boundary");

    SparseMatrix M = assemble_mass(mesh);
    std::vector<SparseMatrix> A;
    for (int s = 0; s < n_species; ++s) {
        Mat2 q = problem.q[s];
        SparseMatrix As = assemble_stiffness_tensor(mesh, [q](Vec2) { return q; });
        std::vector<char> constrained(As.dim(), 0);
        for (int v : dirichlet) constrained[v] = 1;
        As.eliminate(constrained);
        A.push_back(std::move(As));
    }

    const std::size_t nv = mesh.n_vertices();
    const bool with_surface = problem.mode == MacroMode::with_surface;
    detail::RhsBuilder rhs = [&](int s, const Field& u) {
        std::vector<double> r(nv);
        std::vector<double> args(n_species);
        auto us = u.species(s);
        for (std::size_t v = 0; v < nv; ++v) {
            for (int j = 0; j < n_species; ++j) args[j] = clamp0(u.species(j)[v]);
            r[v] = problem.porosity * problem.R[s].eval(args);
            if (with_surface) {
                double arg = clamp0(us[v]);
                r[v] += problem.surf_a[s] * us[v] -
                        problem.surf_b[s] * problem.F[s].eval(std::span<const double>(&arg, 1));
            }
        }
        return M.multiply(r);
    };

    return detail::run_picard(mesh, n_species, A, dirichlet, rhs, opts);
}

std::vector<Vec2> recover_gradient(std::span<const double> nodal, const Mesh& mesh) {
    std::vector<Vec2> g(mesh.n_vertices(), Vec2{0.0, 0.0});
    std::vector<double> weight(mesh.n_vertices(), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        double a = mesh.triangle_area(static_cast<int>(t));
        Vec2 gt = element_gradient(mesh, nodal, static_cast<int>(t));
        const Triangle& tr = mesh.triangles[t];
        for (int v = 0; v < 3; ++v) {
            g[tr.v[v]] = g[tr.v[v]] + a * gt;
            weight[tr.v[v]] += a;
        }
    }
    for (std::size_t v = 0; v < g.size(); ++v) {
        if (weight[v] > 0.0) g[v] = (1.0 / weight[v]) * g[v];
    }
    return g;
}

std::vector<Mat2> recover_hessian(std::span<const double> nodal, const Mesh& mesh) {
    std::vector<Vec2> g = recover_gradient(nodal, mesh);
    std::vector<double> gx(mesh.n_vertices()), gy(mesh.n_vertices());
    for (std::size_t v = 0; v < g.size(); ++v) {
        gx[v] = g[v].x;
        gy[v] = g[v].y;
    }
    std::vector<Vec2> hx = recover_gradient(gx, mesh);  // grad of du/dx
    std::vector<Vec2> hy = recover_gradient(gy, mesh);  // grad of du/dy
    std::vector<Mat2> h(mesh.n_vertices());
    for (std::size_t v = 0; v < h.size(); ++v) {
        h[v] = Mat2{hx[v].x, hy[v].x, hx[v].y, hy[v].y};
    }
    return h;
}

}  // namespace perihom
