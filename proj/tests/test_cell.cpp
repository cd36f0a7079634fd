#include <doctest.h>

#include <cmath>
#include <sstream>

#include "perihom/cell.hpp"
#include "perihom/errors.hpp"

using namespace perihom;

namespace {

double laminate(double y1) { return 1.0 + 0.5 * std::sin(2 * M_PI * y1); }

// composite Simpson on [0, y]
double simpson_inv_laminate(double y, int n = 4000) {
    double s = 0.0;
    double h = y / n;
    for (int i = 0; i < n; ++i) {
        double a = i * h, b = a + h, m = a + 0.5 * h;
        s += h / 6.0 * (1.0 / laminate(a) + 4.0 / laminate(m) + 1.0 / laminate(b));
    }
    return s;
}

ProblemSpec one_species(const std::string& d) {
    ProblemSpec spec;
    SpeciesSpec sp;
    sp.d = ReactionExpr::parse(d, 2, VarKind::cell);
    sp.a = ReactionExpr::parse("0", 2, VarKind::cell);
    sp.b = ReactionExpr::parse("0", 2, VarKind::cell);
    sp.R = ReactionExpr::parse("0", 1, VarKind::species);
    sp.F = ReactionExpr::parse("0", 1, VarKind::species);
    sp.alpha = 0.25;
    spec.species.push_back(std::move(sp));
    return spec;
}

}  // namespace

TEST_CASE("constant coefficient, no hole: chi vanishes and q = c I") {
    Mesh cell = build_unit_cell_mesh({HoleShape::none, 0.0}, 1.0 / 16);
    const double c = 2.5;
    ScalarCoeff d = [c](Vec2) { return c; };
    CellVector chi = solve_chi(cell, d);
    for (int k = 0; k < 2; ++k) {
        for (double v : chi[k]) CHECK(std::abs(v) < 1e-9);
    }
    auto [q, asym] = compute_q(cell, d, chi);
    CHECK(std::abs(q.a11 - c) < 1e-8);
    CHECK(std::abs(q.a22 - c) < 1e-8);
    CHECK(std::abs(q.a12) < 1e-8);
    CHECK(asym < 1e-8);
}

TEST_CASE("laminate coefficient: 1D two-point BVP oracle") {
    Mesh cell = build_unit_cell_mesh({HoleShape::none, 0.0}, 1.0 / 64);
    ScalarCoeff d = [](Vec2 p) { return laminate(p.x); };
    CellVector chi = solve_chi(cell, d);

    // chi^2 = 0, chi^1 depends on y1 only
    for (double v : chi[1]) CHECK(std::abs(v) < 1e-8);
    for (std::size_t v = 0; v < cell.n_vertices(); ++v) {
        if (cell.vertices[v].y == 0.5) {
            for (std::size_t w = 0; w < cell.n_vertices(); ++w) {
                if (cell.vertices[w].x == cell.vertices[v].x && cell.vertices[w].y == 0.25) {
                    CHECK(chi[0][v] == doctest::Approx(chi[0][w]).epsilon(1e-8));
                }
            }
        }
    }

    // oracle: chi'(y) = 1 - hm/d(y), zero-mean primitive
    const double hm = 1.0 / simpson_inv_laminate(1.0);
    CHECK(hm == doctest::Approx(std::sqrt(0.75)).epsilon(1e-8));
    // zero-mean constant of the oracle profile
    int nq = 2000;
    double mean = 0.0;
    for (int i = 0; i < nq; ++i) {
        double y = (i + 0.5) / nq;
        mean += (y - hm * simpson_inv_laminate(y)) / nq;
    }
    for (std::size_t v = 0; v < cell.n_vertices(); ++v) {
        if (cell.vertices[v].y != 0.0) continue;
        double y = cell.vertices[v].x;
        double oracle = y - hm * simpson_inv_laminate(y) - mean;
        CHECK(chi[0][v] == doctest::Approx(oracle).epsilon(5e-3));
    }

    auto [q, asym] = compute_q(cell, d, chi);
    CHECK(std::abs(q.a11 - hm) <= 0.01 * hm);
    CHECK(std::abs(q.a22 - 1.0) <= 0.01);
    CHECK(std::abs(q.a12) <= 0.005);
    CHECK(asym <= 1e-8);
}

TEST_CASE("cell means of chi vanish by construction") {
    Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 32);
    ScalarCoeff d = [](Vec2 p) { return 1.0 + 0.25 * std::cos(2 * M_PI * p.y); };
    CellVector chi = solve_chi(cell, d);
    CHECK(std::abs(cell_mean(chi[0], cell)) < 1e-8);
    CHECK(std::abs(cell_mean(chi[1], cell)) < 1e-8);
}

TEST_CASE("perforated cell with unit coefficient: q between known bounds") {
    double prev_q = -1.0;
    double q32 = 0.0, q64 = 0.0;
    for (double h : {1.0 / 32, 1.0 / 64}) {
        Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, h);
        ScalarCoeff d = [](Vec2) { return 1.0; };
        CellVector chi = solve_chi(cell, d);
        auto [q, asym] = compute_q(cell, d, chi);
        CHECK(q.a11 > 0.6);
        CHECK(q.a11 < cell.total_area());  // bounded above by porosity
        CHECK(q.a11 == doctest::Approx(q.a22).epsilon(5e-3));  // disk symmetry
        CHECK(std::abs(q.a12) < 5e-3);
        (h == 1.0 / 32 ? q32 : q64) = q.a11;
        prev_q = q.a11;
    }
    CHECK(std::abs(q64 - q32) < 0.01);  // self-convergence
    (void)prev_q;
}

TEST_CASE("q shrinks monotonically with hole radius") {
    ScalarCoeff d = [](Vec2) { return 1.0; };
    double prev = 2.0;
    for (double r : {0.1, 0.2, 0.3}) {
        Mesh cell = build_unit_cell_mesh({HoleShape::disk, r}, 1.0 / 32);
        CellVector chi = solve_chi(cell, d);
        auto [q, asym] = compute_q(cell, d, chi);
        CHECK(q.a11 < prev);
        prev = q.a11;
    }
}

TEST_CASE("scaling d by a constant scales q and leaves chi unchanged") {
    Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 16);
    ScalarCoeff d1 = [](Vec2 p) { return 1.0 + 0.5 * std::sin(2 * M_PI * p.x); };
    ScalarCoeff dc = [](Vec2 p) { return 2.7 * (1.0 + 0.5 * std::sin(2 * M_PI * p.x)); };
    CellVector chi1 = solve_chi(cell, d1);
    CellVector chic = solve_chi(cell, dc);
    for (int k = 0; k < 2; ++k) {
        for (std::size_t v = 0; v < cell.n_vertices(); ++v) {
            CHECK(chic[k][v] == doctest::Approx(chi1[k][v]).epsilon(1e-7));
        }
    }
    auto [q1, a1] = compute_q(cell, d1, chi1);
    auto [qc, ac] = compute_q(cell, dc, chic);
    CHECK(qc.a11 == doctest::Approx(2.7 * q1.a11).epsilon(1e-7));
    CHECK(qc.a22 == doctest::Approx(2.7 * q1.a22).epsilon(1e-7));
}

TEST_CASE("Voigt-Reuss sandwich for three profiles") {
    for (const char* expr : {"1 + 0.5*sin(2*3.14159265358979324*y1)",
                             "1 + 0.5*sin(2*3.14159265358979324*y1)*sin(2*3.14159265358979324*y2)",
                             "2 + cos(2*3.14159265358979324*y2)"}) {
        ReactionExpr de = ReactionExpr::parse(expr, 2, VarKind::cell);
        Mesh cell = build_unit_cell_mesh({HoleShape::none, 0.0}, 1.0 / 64);
        ScalarCoeff d = cell_coeff(de, 1.0);
        CellVector chi = solve_chi(cell, d);
        auto [q, asym] = compute_q(cell, d, chi);
        // dense-grid quadrature oracle for the means
        double am = 0.0, hm_inv = 0.0;
        const int nq = 512;
        for (int i = 0; i < nq; ++i) {
            for (int j = 0; j < nq; ++j) {
                double y[2] = {(i + 0.5) / nq, (j + 0.5) / nq};
                double v = de.eval(y);
                am += v;
                hm_inv += 1.0 / v;
            }
        }
        am /= nq * nq;
        double hm = nq * nq / hm_inv;
        auto ev = q.sym_eigenvalues();
        CHECK(ev[0] >= hm * 0.99);
        CHECK(ev[1] <= am * 1.01);
    }
}

TEST_CASE("surface averages over the hole boundary") {
    Mesh disk = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 64);
    auto [sa, sb] = compute_surface_averages(
        disk, [](Vec2) { return 1.0; }, [](Vec2) { return 0.0; });
    CHECK(sa == doctest::Approx(2 * M_PI * 0.25).epsilon(0.01));
    CHECK(sb == 0.0);

    Mesh sq = build_unit_cell_mesh({HoleShape::square, 0.25}, 1.0 / 8);
    auto [qa, qb] = compute_surface_averages(
        sq, [](Vec2) { return 1.0; }, [](Vec2) { return 1.0; });
    CHECK(qa == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(qb == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("second cell problem: trivial case and zero means") {
    Mesh cell = build_unit_cell_mesh({HoleShape::none, 0.0}, 1.0 / 16);
    ScalarCoeff d = [](Vec2) { return 3.0; };
    CellVector chi = solve_chi(cell, d);
    auto [q, asym] = compute_q(cell, d, chi);
    CellMatrixField theta = solve_theta(cell, d, chi, q, nullptr);
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            for (double v : theta[j][k]) CHECK(std::abs(v) < 1e-8);
        }
    }
}

TEST_CASE("second cell problem on the perforated cell: nontrivial, zero-mean, self-convergent") {
    ScalarCoeff d = [](Vec2) { return 1.0; };
    double probe32 = 0.0, probe64 = 0.0, probe16 = 0.0;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, h);
        CellVector chi = solve_chi(cell, d);
        Mat2 q_raw{};  // use the raw tensor so the solvability check is exact
        for (std::size_t t = 0; t < cell.triangles.size(); ++t) {
            double a = cell.triangle_area(static_cast<int>(t));
            Vec2 g0 = element_gradient(cell, chi[0], static_cast<int>(t));
            Vec2 g1 = element_gradient(cell, chi[1], static_cast<int>(t));
            q_raw.a11 += a * (1.0 - g0.x);
            q_raw.a21 += a * (0.0 - g0.y);
            q_raw.a12 += a * (0.0 - g1.x);
            q_raw.a22 += a * (1.0 - g1.y);
        }
        CellMatrixField theta = solve_theta(cell, d, chi, q_raw, nullptr);
        double linf = 0.0;
        for (double v : theta[0][0]) linf = std::max(linf, std::abs(v));
        CHECK(linf > 1e-4);  // genuinely nonzero
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) CHECK(std::abs(cell_mean(theta[j][k], cell)) < 1e-8);
        }
        // probe: integral of theta_11 over the right half cell
        std::vector<double> mask(cell.n_vertices());
        for (std::size_t v = 0; v < cell.n_vertices(); ++v) {
            mask[v] = cell.vertices[v].x > 0.5 ? theta[0][0][v] : 0.0;
        }
        double probe = integral(mask, cell);
        if (h == 1.0 / 16) probe16 = probe;
        if (h == 1.0 / 32) probe32 = probe;
        if (h == 1.0 / 64) probe64 = probe;
    }
    CHECK(std::abs(probe64 - probe32) < std::abs(probe32 - probe16) + 1e-6);
}

TEST_CASE("second cell problem rejects unbalanced boundary data") {
    Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 16);
    ScalarCoeff d = [](Vec2) { return 1.0; };
    CellVector chi = solve_chi(cell, d);
    auto [q, asym] = compute_q(cell, d, chi);
    ScalarCoeff g = [](Vec2) { return 1.0; };  // integral over the rim is 2*pi*r != 0
    CHECK_THROWS_AS(solve_theta(cell, d, chi, q, &g), SolvabilityViolation);
    CellOptions opts;
    opts.balance_theta_boundary = true;
    CHECK_NOTHROW(solve_theta(cell, d, chi, q, &g, opts));
}

TEST_CASE("solve_cell bundles species and round-trips through the text format") {
    Mesh cell = build_unit_cell_mesh({HoleShape::disk, 0.25}, 1.0 / 16);
    ProblemSpec spec = one_species("1 + 0.25*cos(2*3.14159265358979324*y2)");
    spec.species.push_back(spec.species[0]);
    spec.species[1].d = ReactionExpr::parse("2", 2, VarKind::cell);
    spec.species[1].a = ReactionExpr::parse("1", 2, VarKind::cell);
    CellSolution cs = solve_cell(cell, spec, true);
    CHECK(cs.n_species == 2);
    CHECK(cs.porosity == doctest::Approx(cell.total_area()));
    CHECK(cs.mesh_hash == cell.content_hash());
    CHECK(cs.surf_a[1] == doctest::Approx(2 * M_PI * 0.25).epsilon(0.02));
    // species 2 has constant d = 2 on the perforated cell
    CHECK(cs.q[1].a11 > 1.2);
    CHECK(cs.q[1].a11 < 2.0 * cs.porosity);

    std::stringstream ss;
    write_cell_solution(cs, ss);
    CellSolution back = read_cell_solution(ss);
    CHECK(back.n_species == cs.n_species);
    CHECK(back.porosity == cs.porosity);
    CHECK(back.chi[0][0] == cs.chi[0][0]);
    CHECK(back.chi[1][1] == cs.chi[1][1]);
    CHECK(back.theta[1][0][1] == cs.theta[1][0][1]);
    CHECK(back.q[0].a11 == cs.q[0].a11);
    CHECK(back.surf_b[1] == cs.surf_b[1]);
}
