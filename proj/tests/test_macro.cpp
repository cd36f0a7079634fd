#include <doctest.h>

#include <cmath>

#include "catalog.hpp"
#include "perihom/cell.hpp"
#include "perihom/errors.hpp"
#include "perihom/macro.hpp"

using namespace perihom;

namespace {

Mesh omega_mesh(double h) {
    return build_perforated_domain_mesh(1.0, CellGeometry{HoleShape::none, 0.0}, h);
}

MacroProblem plain_problem(Mesh mesh, double c, double porosity = 1.0) {
    MacroProblem p;
    p.mesh = std::move(mesh);
    p.n_species = 1;
    p.q = {Mat2::isotropic(c)};
    p.porosity = porosity;
    p.surf_a = {0.0};
    p.surf_b = {0.0};
    p.R = {ReactionExpr::parse("1", 1, VarKind::species)};
    p.F = {ReactionExpr::parse("0", 1, VarKind::species)};
    p.mode = MacroMode::volume_only;
    return p;
}

int center_vertex(const Mesh& mesh) {
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
        if (mesh.vertices[v].x == 0.5 && mesh.vertices[v].y == 0.5) return static_cast<int>(v);
    }
    return -1;
}

double poisson_center_oracle() {
    double s = 0.0;
    for (int mi = 0; mi < 50; ++mi) {
        int m = 2 * mi + 1;
        for (int ni = 0; ni < 50; ++ni) {
            int n = 2 * ni + 1;
            s += std::sin(m * M_PI / 2) * std::sin(n * M_PI / 2) /
                 (double(m) * n * (double(m) * m + double(n) * n));
        }
    }
    return 16.0 / std::pow(M_PI, 4) * s;
}

// golden values for the catalog with_surface comparison (macro mesh h=1/64,
// cell mesh h=1/8, relax=1, tol=1e-10)
constexpr double kGoldenVolumeU1 = 0.043006253192054263;
constexpr double kGoldenSurfaceU1 = 0.043024285932565909;

}  // namespace

TEST_CASE("identity tensor with unit porosity reproduces the Poisson oracle") {
    MacroProblem p = plain_problem(omega_mesh(1.0 / 64), 1.0);
    auto [u, rep] = solve_macro(p, catalog::tight_picard());
    CHECK(rep.converged);
    int c = center_vertex(p.mesh);
    REQUIRE(c >= 0);
    CHECK(std::abs(u.species(0)[c] - poisson_center_oracle()) <= 5e-4);
}

TEST_CASE("isotropic tensor scaling divides the linear solution") {
    MacroProblem p1 = plain_problem(omega_mesh(1.0 / 32), 1.0);
    MacroProblem pc = plain_problem(omega_mesh(1.0 / 32), 2.5);
    auto [u1, r1] = solve_macro(p1, catalog::tight_picard());
    auto [uc, rc] = solve_macro(pc, catalog::tight_picard());
    for (std::size_t v = 0; v < p1.mesh.n_vertices(); ++v) {
        CHECK(uc.species(0)[v] == doctest::Approx(u1.species(0)[v] / 2.5).epsilon(1e-11));
    }
}

TEST_CASE("porosity scales the linear response exactly") {
    MacroProblem p1 = plain_problem(omega_mesh(1.0 / 32), 1.0, 1.0);
    MacroProblem pp = plain_problem(omega_mesh(1.0 / 32), 1.0, 0.8);
    auto [u1, r1] = solve_macro(p1, catalog::tight_picard());
    auto [up, rp] = solve_macro(pp, catalog::tight_picard());
    for (std::size_t v = 0; v < p1.mesh.n_vertices(); ++v) {
        CHECK(up.species(0)[v] == doctest::Approx(0.8 * u1.species(0)[v]).epsilon(1e-11));
    }
}

TEST_CASE("macro solve is bit-identical to the plain FEM path for q = cI") {
    Mesh mesh = omega_mesh(1.0 / 64);
    const double c = 2.0;

    LinearSystem sys;
    sys.A = assemble_stiffness(mesh, [c](Vec2) { return c; });
    SparseMatrix M = assemble_mass(mesh);
    std::vector<double> ones(mesh.n_vertices(), 1.0);
    sys.b = M.multiply(ones);
    apply_dirichlet(sys, mesh, EdgeTag::exterior);
    std::vector<double> u_plain = solve_linear(sys.A, sys.b, {1e-10, 0});

    MacroProblem p = plain_problem(mesh, c);
    auto [u_macro, rep] = solve_macro(p, catalog::tight_picard());
    REQUIRE(u_macro.n_vertices == u_plain.size());
    for (std::size_t v = 0; v < u_plain.size(); ++v) {
        CHECK(u_macro.species(0)[v] == u_plain[v]);
    }
}

TEST_CASE("with_surface mode shifts the solution and still contracts") {
    Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 8);
    ProblemSpec spec = catalog::two_species();
    CellSolution cs = solve_cell(cell, spec, false);
    Mesh mesh = omega_mesh(1.0 / 64);
    int c = center_vertex(mesh);
    REQUIRE(c >= 0);

    MacroProblem vol = MacroProblem::from_cell(mesh, spec, cs, MacroMode::volume_only);
    MacroProblem surf = MacroProblem::from_cell(mesh, spec, cs, MacroMode::with_surface);
    auto [uv, rv] = solve_macro(vol, catalog::tight_picard());
    auto [us, rs] = solve_macro(surf, catalog::tight_picard());
    CHECK(rv.converged);
    CHECK(rs.converged);
    CHECK(rs.kappa_valid);
    CHECK(rs.kappa_hat < 1.0);
    CHECK(uv.species(0)[c] != us.species(0)[c]);
    CHECK(uv.species(0)[c] == doctest::Approx(kGoldenVolumeU1).epsilon(1e-8));
    CHECK(us.species(0)[c] == doctest::Approx(kGoldenSurfaceU1).epsilon(1e-8));
}

TEST_CASE("macro problem validation") {
    MacroProblem p = plain_problem(omega_mesh(1.0 / 16), 1.0);
    p.porosity = 1.5;
    CHECK_THROWS_AS(p.validate(), ValidationError);
    p.porosity = 0.8;
    p.q[0] = Mat2{1.0, 2.0, 2.0, 1.0};  // indefinite
    CHECK_THROWS_AS(p.validate(), ValidationError);
}

TEST_CASE("gradient recovery: linear and constant fields") {
    Mesh mesh = omega_mesh(1.0 / 16);
    std::vector<double> lin(mesh.n_vertices()), cst(mesh.n_vertices(), 4.0);
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) lin[v] = mesh.vertices[v].x;
    std::vector<Vec2> g = recover_gradient(lin, mesh);
    std::vector<Vec2> gc = recover_gradient(cst, mesh);
    std::vector<Mat2> hc = recover_hessian(cst, mesh);
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
        CHECK(g[v].x == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(g[v].y == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(gc[v].x == doctest::Approx(0.0).epsilon(1e-14));
        CHECK(hc[v].frobenius_norm() == doctest::Approx(0.0).epsilon(1e-13));
    }
}

TEST_CASE("hessian recovery converges for a quadratic") {
    Mesh mesh = omega_mesh(1.0 / 32);
    std::vector<double> f(mesh.n_vertices());
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) f[v] = mesh.vertices[v].x * mesh.vertices[v].x;
    std::vector<Mat2> h = recover_hessian(f, mesh);
    const double margin = 3.5 / 32.0;
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
        Vec2 p = mesh.vertices[v];
        if (p.x < margin || p.x > 1 - margin || p.y < margin || p.y > 1 - margin) continue;
        CHECK(h[v].a11 == doctest::Approx(2.0).epsilon(0.05));
        CHECK(std::abs(h[v].a12) < 0.05);
        CHECK(std::abs(h[v].a22) < 0.05);
    }
}

TEST_CASE("homogenized solution is mesh-convergent") {
    Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 8);
    ProblemSpec spec = catalog::rate_benchmark();
    CellSolution cs = solve_cell(cell, spec, false);

    // nested grids: coarse nodes carry their own id in both solutions
    std::vector<double> diffs;
    Field prev;
    Mesh prev_mesh;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Mesh mesh = omega_mesh(h);
        MacroProblem p = MacroProblem::from_cell(mesh, spec, cs, MacroMode::volume_only);
        auto [u, rep] = solve_macro(p, catalog::tight_picard());
        if (prev.n_vertices > 0) {
            P1Interpolator interp(mesh);
            std::vector<double> d(prev_mesh.n_vertices());
            for (std::size_t v = 0; v < prev_mesh.n_vertices(); ++v) {
                d[v] = prev.species(0)[v] - interp.value(u.species(0), prev_mesh.vertices[v]);
            }
            diffs.push_back(h1_seminorm(d, prev_mesh));
        }
        prev = u;
        prev_mesh = mesh;
    }
    REQUIRE(diffs.size() == 2);
    CHECK(diffs[1] < diffs[0]);
}
