#include "perihom/cell.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

constexpr double kGauss2 = 0.28867513459481287;

void subtract_cell_mean(std::vector<double>& nodal, const Mesh& mesh, double area) {
    double m = integral(nodal, mesh) / area;
    for (double& v : nodal) v -= m;
}

std::vector<double> solve_periodic(const SparseMatrix& A_red, const DofMap& map,
                                   std::vector<double> rhs_full, const Mesh& mesh, double area,
                                   const CellOptions& opts) {
    std::vector<double> b = map.fold_vector(rhs_full);
    // project onto the range: the pure Neumann-periodic operator annihilates
    // constants, so the consistent rhs must sum to zero
    double s = std::accumulate(b.begin(), b.end(), 0.0) / b.size();
    for (double& v : b) v -= s;
    SolveOpts sopts;
    sopts.tol = opts.solver_tol;
    sopts.max_iter = opts.max_iter;
    std::vector<double> x = solve_linear(A_red, b, sopts);
    std::vector<double> full = map.unfold(x);
    subtract_cell_mean(full, mesh, area);
    return full;
}

}  // namespace

double cell_mean(std::span<const double> nodal, const Mesh& cell_mesh) {
    return integral(nodal, cell_mesh) / cell_mesh.total_area();
}

CellVector solve_chi(const Mesh& cell_mesh, const ScalarCoeff& d, const CellOptions& opts) {
    const std::size_t n = cell_mesh.n_vertices();
    const double area = cell_mesh.total_area();
    SparseMatrix A = assemble_stiffness(cell_mesh, d);
    DofMap map = DofMap::periodic(cell_mesh);
    SparseMatrix A_red = map.fold(A);

    CellVector chi;
    for (int k = 0; k < 2; ++k) {
        std::vector<double> rhs(n, 0.0);
        for (std::size_t t = 0; t < cell_mesh.triangles.size(); ++t) {
            double a = cell_mesh.triangle_area(static_cast<int>(t));
            double dc = d(cell_mesh.centroid(static_cast<int>(t)));
            auto grads = p1_gradients(cell_mesh, static_cast<int>(t));
            const Triangle& tr = cell_mesh.triangles[t];
            for (int v = 0; v < 3; ++v) {
                rhs[tr.v[v]] += a * dc * (k == 0 ? grads[v].x : grads[v].y);
            }
        }
        chi[k] = solve_periodic(A_red, map, std::move(rhs), cell_mesh, area, opts);
    }
    return chi;
}

namespace {

Mat2 compute_q_raw(const Mesh& cell_mesh, const ScalarCoeff& d, const CellVector& chi) {
    Mat2 q{};
    for (std::size_t t = 0; t < cell_mesh.triangles.size(); ++t) {
        double a = cell_mesh.triangle_area(static_cast<int>(t));
        double dc = d(cell_mesh.centroid(static_cast<int>(t)));
        Vec2 g0 = element_gradient(cell_mesh, chi[0], static_cast<int>(t));
        Vec2 g1 = element_gradient(cell_mesh, chi[1], static_cast<int>(t));
        q.a11 += a * dc * (1.0 - g0.x);
        q.a21 += a * dc * (0.0 - g0.y);
        q.a12 += a * dc * (0.0 - g1.x);
        q.a22 += a * dc * (1.0 - g1.y);
    }
    return q;  // |Y| = 1
}

}  // namespace

std::pair<Mat2, double> compute_q(const Mesh& cell_mesh, const ScalarCoeff& d, const CellVector& chi) {
    Mat2 raw = compute_q_raw(cell_mesh, d, chi);
    Mat2 skew{0.0, raw.a12 - raw.a21, raw.a21 - raw.a12, 0.0};
    return {raw.symmetrized(), skew.frobenius_norm()};
}

std::pair<double, double> compute_surface_averages(const Mesh& cell_mesh, const ScalarCoeff& a,
                                                   const ScalarCoeff& b) {
    double sa = 0.0, sb = 0.0;
    for (const BoundaryEdge& e : cell_mesh.boundary_edges) {
        if (e.tag != EdgeTag::hole) continue;
        Vec2 pa = cell_mesh.vertices[e.a], pb = cell_mesh.vertices[e.b];
        double len = norm(pb - pa);
        for (int qp = 0; qp < 2; ++qp) {
            double s = 0.5 + (qp == 0 ? -kGauss2 : kGauss2);
            Vec2 x = pa + s * (pb - pa);
            sa += 0.5 * len * a(x);
            sb += 0.5 * len * b(x);
        }
    }
    return {sa, sb};
}

CellMatrixField solve_theta(const Mesh& cell_mesh, const ScalarCoeff& d, const CellVector& chi,
                            const Mat2& q, const ScalarCoeff* boundary_g, const CellOptions& opts) {
    const std::size_t n = cell_mesh.n_vertices();
    const double area = cell_mesh.total_area();
    const double porosity = area;  // |Y| = 1
    SparseMatrix A = assemble_stiffness(cell_mesh, d);
    DofMap map = DofMap::periodic(cell_mesh);
    SparseMatrix A_red = map.fold(A);

    const double q_entry[2][2] = {{q.a11, q.a12}, {q.a21, q.a22}};

    CellMatrixField theta;
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            std::vector<double> rhs(n, 0.0);
            double scale = 0.0;
            for (std::size_t t = 0; t < cell_mesh.triangles.size(); ++t) {
                double a = cell_mesh.triangle_area(static_cast<int>(t));
                double dc = d(cell_mesh.centroid(static_cast<int>(t)));
                auto grads = p1_gradients(cell_mesh, static_cast<int>(t));
                Vec2 gchi = element_gradient(cell_mesh, chi[k], static_cast<int>(t));
                const Triangle& tr = cell_mesh.triangles[t];
                double chibar = (chi[k][tr.v[0]] + chi[k][tr.v[1]] + chi[k][tr.v[2]]) / 3.0;
                double c0 = dc * (j == k ? 1.0 : 0.0) - dc * (j == 0 ? gchi.x : gchi.y) -
                            q_entry[j][k] / porosity;
                for (int v = 0; v < 3; ++v) {
                    rhs[tr.v[v]] += a * (c0 / 3.0 + dc * chibar * (j == 0 ? grads[v].x : grads[v].y));
                }
                scale += a * std::abs(dc);
            }
            if (boundary_g && j == k) {
                // frozen surface data spread over the Hessian trace
                for (const BoundaryEdge& e : cell_mesh.boundary_edges) {
                    if (e.tag != EdgeTag::hole) continue;
                    Vec2 pa = cell_mesh.vertices[e.a], pb = cell_mesh.vertices[e.b];
                    double len = norm(pb - pa);
                    for (int qp = 0; qp < 2; ++qp) {
                        double s = 0.5 + (qp == 0 ? -kGauss2 : kGauss2);
                        Vec2 x = pa + s * (pb - pa);
                        double g = 0.5 * (*boundary_g)(x);
                        double phi[2] = {1.0 - s, s};
                        rhs[e.a] -= 0.5 * len * g * phi[0];
                        rhs[e.b] -= 0.5 * len * g * phi[1];
                    }
                }
            }
            double residual = std::accumulate(rhs.begin(), rhs.end(), 0.0);
            double rel = std::abs(residual) / std::max(scale, 1e-30);
            if (rel > opts.solvability_tol && !opts.balance_theta_boundary) {
                throw SolvabilityViolation(
                    "second cell problem is not solvable: compatibility residual " +
                    std::to_string(rel) + " exceeds " + std::to_string(opts.solvability_tol));
            }
            theta[j][k] = solve_periodic(A_red, map, std::move(rhs), cell_mesh, area, opts);
        }
    }
    return theta;
}

CellSolution solve_cell(const Mesh& cell_mesh, const ProblemSpec& spec, bool with_theta,
                        const CellOptions& opts) {
    CellSolution cs;
    cs.mesh_hash = cell_mesh.content_hash();
    cs.porosity = cell_mesh.total_area();
    cs.n_species = spec.n_species();
    cs.has_theta = with_theta;
    for (int s = 0; s < spec.n_species(); ++s) {
        const SpeciesSpec& sp = spec.species[s];
        ScalarCoeff d = cell_coeff(sp.d, 1.0);
        CellVector chi = solve_chi(cell_mesh, d, opts);
        Mat2 q_raw = compute_q_raw(cell_mesh, d, chi);
        Mat2 skew{0.0, q_raw.a12 - q_raw.a21, q_raw.a21 - q_raw.a12, 0.0};
        auto [sa, sb] = compute_surface_averages(cell_mesh, cell_coeff(sp.a, 1.0), cell_coeff(sp.b, 1.0));
        cs.q.push_back(q_raw.symmetrized());
        cs.q_asymmetry.push_back(skew.frobenius_norm());
        cs.surf_a.push_back(sa);
        cs.surf_b.push_back(sb);
        if (with_theta) {
            ScalarCoeff g;
            if (opts.frozen_macro_values && (!sp.a.is_literal_zero() || !sp.b.is_literal_zero())) {
                double ustar = (*opts.frozen_macro_values)[s];
                double fstar = sp.F.eval(std::span<const double>(&ustar, 1));
                ScalarCoeff av = cell_coeff(sp.a, 1.0), bv = cell_coeff(sp.b, 1.0);
                g = [av, bv, ustar, fstar](Vec2 p) { return bv(p) * fstar - av(p) * ustar; };
            }
            // the raw tensor keeps the discrete compatibility residual at
            // roundoff level; the reported tensor stays symmetrized
            cs.theta.push_back(solve_theta(cell_mesh, d, chi, q_raw, g ? &g : nullptr, opts));
        }
        cs.chi.push_back(std::move(chi));
    }
    return cs;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_block(std::ostream& os, const char* name, const std::vector<double>& v) {
    os << name << " " << v.size() << "\n";
    for (double x : v) os << fmt(x) << "\n";
}

std::vector<double> read_block(std::istream& is, const char* name) {
    std::string kw;
    std::size_t count;
    if (!(is >> kw >> count) || kw != name) throw Error(std::string("cell file: expected ") + name);
    std::vector<double> v(count);
    for (double& x : v) is >> x;
    return v;
}

}  // namespace

void write_cell_solution(const CellSolution& cs, std::ostream& os) {
    os << "CELLSOLUTION " << (cs.mesh_hash.empty() ? "-" : cs.mesh_hash) << " " << cs.n_species << " "
       << (cs.has_theta ? 1 : 0) << "\n";
    os << "POROSITY " << fmt(cs.porosity) << "\n";
    for (int s = 0; s < cs.n_species; ++s) {
        os << "SPECIES " << s + 1 << "\n";
        os << "TENSOR " << fmt(cs.q[s].a11) << " " << fmt(cs.q[s].a12) << " " << fmt(cs.q[s].a21)
           << " " << fmt(cs.q[s].a22) << "\n";
        os << "ASYMMETRY " << fmt(cs.q_asymmetry[s]) << "\n";
        os << "SURFACE " << fmt(cs.surf_a[s]) << " " << fmt(cs.surf_b[s]) << "\n";
        write_block(os, "CHI1", cs.chi[s][0]);
        write_block(os, "CHI2", cs.chi[s][1]);
        if (cs.has_theta) {
            write_block(os, "THETA11", cs.theta[s][0][0]);
            write_block(os, "THETA12", cs.theta[s][0][1]);
            write_block(os, "THETA21", cs.theta[s][1][0]);
            write_block(os, "THETA22", cs.theta[s][1][1]);
        }
    }
    os << "END\n";
}

CellSolution read_cell_solution(std::istream& is) {
    CellSolution cs;
    std::string kw, hash;
    int has_theta;
    if (!(is >> kw >> hash >> cs.n_species >> has_theta) || kw != "CELLSOLUTION") {
        throw Error("cell file: bad header");
    }
    cs.mesh_hash = hash == "-" ? "" : hash;
    cs.has_theta = has_theta != 0;
    if (!(is >> kw >> cs.porosity) || kw != "POROSITY") throw Error("cell file: expected POROSITY");
    for (int s = 0; s < cs.n_species; ++s) {
        int idx;
        if (!(is >> kw >> idx) || kw != "SPECIES") throw Error("cell file: expected SPECIES");
        Mat2 q;
        if (!(is >> kw >> q.a11 >> q.a12 >> q.a21 >> q.a22) || kw != "TENSOR") {
            throw Error("cell file: expected TENSOR");
        }
        double asym;
        if (!(is >> kw >> asym) || kw != "ASYMMETRY") throw Error("cell file: expected ASYMMETRY");
        double sa, sb;
        if (!(is >> kw >> sa >> sb) || kw != "SURFACE") throw Error("cell file: expected SURFACE");
        cs.q.push_back(q);
        cs.q_asymmetry.push_back(asym);
        cs.surf_a.push_back(sa);
        cs.surf_b.push_back(sb);
        CellVector chi;
        chi[0] = read_block(is, "CHI1");
        chi[1] = read_block(is, "CHI2");
        cs.chi.push_back(std::move(chi));
        if (cs.has_theta) {
            CellMatrixField th;
            th[0][0] = read_block(is, "THETA11");
            th[0][1] = read_block(is, "THETA12");
            th[1][0] = read_block(is, "THETA21");
            th[1][1] = read_block(is, "THETA22");
            cs.theta.push_back(std::move(th));
        }
    }
    return cs;
}

}  // namespace perihom
