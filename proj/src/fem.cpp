#include "perihom/fem.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "perihom/errors.hpp"

namespace perihom {

SparseMatrix SparseMatrix::from_triplets(int dim, std::vector<Triplet> triplets) {
    std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    SparseMatrix m;
    m.dim_ = dim;
    m.row_offsets_.assign(dim + 1, 0);
    std::size_t i = 0;
    while (i < triplets.size()) {
        int r = triplets[i].row, c = triplets[i].col;
        double v = 0.0;
        while (i < triplets.size() && triplets[i].row == r && triplets[i].col == c) {
            v += triplets[i].value;
            ++i;
        }
        if (v != 0.0) {
            m.cols_.push_back(c);
            m.values_.push_back(v);
            m.row_offsets_[r + 1]++;
        }
    }
    for (int r = 0; r < dim; ++r) m.row_offsets_[r + 1] += m.row_offsets_[r];
    return m;
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    for (int r = 0; r < dim_; ++r) {
        double s = 0.0;
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) s += values_[k] * x[cols_[k]];
        y[r] = s;
    }
}

std::vector<double> SparseMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(dim_);
    multiply(x, y);
    return y;
}

std::vector<double> SparseMatrix::diagonal() const {
    std::vector<double> d(dim_, 0.0);
    for (int r = 0; r < dim_; ++r) {
        for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
            if (cols_[k] == r) d[r] = values_[k];
        }
    }
    return d;
}

double SparseMatrix::coeff(int row, int col) const {
    for (int k = row_offsets_[row]; k < row_offsets_[row + 1]; ++k) {
        if (cols_[k] == col) return values_[k];
    }
    return 0.0;
}

void SparseMatrix::eliminate(const std::vector<char>& constrained) {
    std::vector<int> new_offsets(dim_ + 1, 0);
    std::vector<int> new_cols;
    std::vector<double> new_vals;
    new_cols.reserve(cols_.size());
    new_vals.reserve(values_.size());
    for (int r = 0; r < dim_; ++r) {
        if (constrained[r]) {
            new_cols.push_back(r);
            new_vals.push_back(1.0);
        } else {
            for (int k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
                if (!constrained[cols_[k]]) {
                    new_cols.push_back(cols_[k]);
                    new_vals.push_back(values_[k]);
                }
            }
        }
        new_offsets[r + 1] = static_cast<int>(new_cols.size());
    }
    row_offsets_ = std::move(new_offsets);
    cols_ = std::move(new_cols);
    values_ = std::move(new_vals);
}

bool SparseMatrix::same_values(const SparseMatrix& other) const {
    return dim_ == other.dim_ && row_offsets_ == other.row_offsets_ && cols_ == other.cols_ &&
           values_ == other.values_;
}

namespace {

struct P1Element {
    double area;
    Vec2 grad[3];  // constant basis gradients
};

P1Element p1_element(const Mesh& mesh, int t) {
    const Triangle& tr = mesh.triangles[t];
    Vec2 p0 = mesh.vertices[tr.v[0]], p1 = mesh.vertices[tr.v[1]], p2 = mesh.vertices[tr.v[2]];
    double two_a = cross(p1 - p0, p2 - p0);
    P1Element e;
    e.area = 0.5 * two_a;
    e.grad[0] = {(p1.y - p2.y) / two_a, (p2.x - p1.x) / two_a};
    e.grad[1] = {(p2.y - p0.y) / two_a, (p0.x - p2.x) / two_a};
    e.grad[2] = {(p0.y - p1.y) / two_a, (p1.x - p0.x) / two_a};
    return e;
}

void check_finite(double v, const char* what, Vec2 p) {
    if (!std::isfinite(v)) {
        throw EvalError(std::string(what) + " is not finite at (" + std::to_string(p.x) + ", " +
                        std::to_string(p.y) + ")");
    }
}

// 2-point Gauss rule on an edge, exact for cubics
constexpr double kGauss2 = 0.28867513459481287;  // 1/(2*sqrt(3))

}  // namespace

SparseMatrix assemble_stiffness_tensor(const Mesh& mesh, const TensorCoeff& q) {
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        P1Element e = p1_element(mesh, static_cast<int>(t));
        Vec2 cen = mesh.centroid(static_cast<int>(t));
        Mat2 Q = q(cen);
        check_finite(Q.a11 + Q.a12 + Q.a21 + Q.a22, "stiffness coefficient", cen);
        const Triangle& tr = mesh.triangles[t];
        for (int a = 0; a < 3; ++a) {
            Vec2 qg_a = Q * e.grad[a];
            for (int b = 0; b < 3; ++b) {
                double k = e.area * (qg_a.x * e.grad[b].x + qg_a.y * e.grad[b].y);
                trip.push_back({tr.v[a], tr.v[b], k});
            }
        }
    }
    return SparseMatrix::from_triplets(static_cast<int>(mesh.n_vertices()), std::move(trip));
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const ScalarCoeff& d) {
    return assemble_stiffness_tensor(mesh, [&d](Vec2 p) { return Mat2::isotropic(d(p)); });
}

SparseMatrix assemble_mass(const Mesh& mesh) {
    std::vector<Triplet> trip;
    trip.reserve(9 * mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        double area = mesh.triangle_area(static_cast<int>(t));
        const Triangle& tr = mesh.triangles[t];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                trip.push_back({tr.v[a], tr.v[b], area / 12.0 * (a == b ? 2.0 : 1.0)});
            }
        }
    }
    return SparseMatrix::from_triplets(static_cast<int>(mesh.n_vertices()), std::move(trip));
}

SparseMatrix assemble_boundary_mass(const Mesh& mesh, EdgeTag tag, const ScalarCoeff& w) {
    std::vector<Triplet> trip;
    for (const BoundaryEdge& e : mesh.boundary_edges) {
        if (e.tag != tag) continue;
        Vec2 pa = mesh.vertices[e.a], pb = mesh.vertices[e.b];
        double len = norm(pb - pa);
        for (int qp = 0; qp < 2; ++qp) {
            double s = 0.5 + (qp == 0 ? -kGauss2 : kGauss2);
            Vec2 x = pa + s * (pb - pa);
            double wv = w(x);
            check_finite(wv, "boundary weight", x);
            double phi[2] = {1.0 - s, s};
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    int ia = a == 0 ? e.a : e.b;
                    int ib = b == 0 ? e.a : e.b;
                    trip.push_back({ia, ib, 0.5 * len * wv * phi[a] * phi[b]});
                }
            }
        }
    }
    return SparseMatrix::from_triplets(static_cast<int>(mesh.n_vertices()), std::move(trip));
}

DofMap DofMap::identity(std::size_t n) {
    DofMap m;
    m.to_reduced_.resize(n);
    std::iota(m.to_reduced_.begin(), m.to_reduced_.end(), 0);
    m.reduced_dim_ = static_cast<int>(n);
    return m;
}

DofMap DofMap::periodic(const Mesh& mesh, const std::vector<int>* dirichlet) {
    const std::size_t n = mesh.n_vertices();
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    for (const PeriodicPair& p : mesh.periodic_pairs) parent[p.slave] = p.master;
    if (dirichlet) {
        std::vector<char> pinned(n, 0);
        for (int v : *dirichlet) pinned[v] = 1;
        for (const PeriodicPair& p : mesh.periodic_pairs) {
            if (pinned[p.slave]) {
                throw ConstraintConflict("vertex " + std::to_string(p.slave) +
                                         " is both a Dirichlet dof and a periodic slave");
            }
        }
    }
    auto root = [&parent](int v) {
        while (parent[v] != v) v = parent[v];
        return v;
    };
    DofMap m;
    m.to_reduced_.assign(n, -1);
    for (std::size_t v = 0; v < n; ++v) {
        if (root(static_cast<int>(v)) == static_cast<int>(v)) {
            m.to_reduced_[v] = m.reduced_dim_++;
        }
    }
    for (std::size_t v = 0; v < n; ++v) {
        if (m.to_reduced_[v] < 0) m.to_reduced_[v] = m.to_reduced_[root(static_cast<int>(v))];
    }
    return m;
}

SparseMatrix DofMap::fold(const SparseMatrix& A) const {
    std::vector<Triplet> trip;
    trip.reserve(A.nnz());
    const auto& off = A.row_offsets();
    const auto& cols = A.cols();
    const auto& vals = A.values();
    for (int r = 0; r < A.dim(); ++r) {
        for (int k = off[r]; k < off[r + 1]; ++k) {
            trip.push_back({to_reduced_[r], to_reduced_[cols[k]], vals[k]});
        }
    }
    return SparseMatrix::from_triplets(reduced_dim_, std::move(trip));
}

std::vector<double> DofMap::fold_vector(std::span<const double> b) const {
    std::vector<double> r(reduced_dim_, 0.0);
    for (std::size_t v = 0; v < to_reduced_.size(); ++v) r[to_reduced_[v]] += b[v];
    return r;
}

std::vector<double> DofMap::unfold(std::span<const double> reduced) const {
    std::vector<double> full(to_reduced_.size());
    for (std::size_t v = 0; v < to_reduced_.size(); ++v) full[v] = reduced[to_reduced_[v]];
    return full;
}

std::vector<int> tagged_vertices(const Mesh& mesh, EdgeTag tag) {
    std::vector<char> seen(mesh.n_vertices(), 0);
    for (const BoundaryEdge& e : mesh.boundary_edges) {
        if (e.tag != tag) continue;
        seen[e.a] = seen[e.b] = 1;
    }
    std::vector<int> out;
    for (std::size_t v = 0; v < seen.size(); ++v) {
        if (seen[v]) out.push_back(static_cast<int>(v));
    }
    return out;
}

void apply_dirichlet(LinearSystem& system, const std::vector<int>& vertices) {
    std::vector<char> constrained(system.A.dim(), 0);
    for (int v : vertices) constrained[v] = 1;
    system.A.eliminate(constrained);
    for (int v : vertices) system.b[v] = 0.0;
}

void apply_dirichlet(LinearSystem& system, const Mesh& mesh, EdgeTag tag) {
    apply_dirichlet(system, tagged_vertices(mesh, tag));
}

LinearSystem apply_periodic(const LinearSystem& system, const DofMap& map) {
    return {map.fold(system.A), map.fold_vector(system.b)};
}

std::vector<double> solve_linear(const SparseMatrix& A, std::span<const double> b, const SolveOpts& opts) {
    const int n = A.dim();
    const int max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;
    std::vector<double> x(n, 0.0), r(b.begin(), b.end()), z(n), p(n), Ap(n);

    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) d = d != 0.0 ? 1.0 / d : 1.0;

    double b_norm = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    if (b_norm == 0.0) return x;

    for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);

    for (int it = 0; it < max_iter; ++it) {
        A.multiply(p, Ap);
        double pAp = std::inner_product(p.begin(), p.end(), Ap.begin(), 0.0);
        if (!(pAp > 0.0)) {
            throw NoConvergence("conjugate gradient: matrix not positive definite (p^T A p = " +
                                std::to_string(pAp) + ")");
        }
        double alpha = rz / pAp;
        double r2 = 0.0;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * p[i];
            r[i] -= alpha * Ap[i];
            r2 += r[i] * r[i];
        }
        if (std::sqrt(r2) <= opts.tol * b_norm) return x;
        for (int i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        double rz_new = std::inner_product(r.begin(), r.end(), z.begin(), 0.0);
        double beta = rz_new / rz;
        rz = rz_new;
        for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw NoConvergence("conjugate gradient: no convergence after " + std::to_string(max_iter) +
                        " iterations");
}

Vec2 element_gradient(const Mesh& mesh, std::span<const double> nodal, int t) {
    P1Element e = p1_element(mesh, t);
    const Triangle& tr = mesh.triangles[t];
    Vec2 g{0.0, 0.0};
    for (int a = 0; a < 3; ++a) g = g + nodal[tr.v[a]] * e.grad[a];
    return g;
}

std::array<Vec2, 3> p1_gradients(const Mesh& mesh, int t) {
    P1Element e = p1_element(mesh, t);
    return {e.grad[0], e.grad[1], e.grad[2]};
}

double h1_seminorm(std::span<const double> nodal, const Mesh& mesh) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        Vec2 g = element_gradient(mesh, nodal, static_cast<int>(t));
        s += mesh.triangle_area(static_cast<int>(t)) * dot(g, g);
    }
    return std::sqrt(s);
}

double l2_norm(std::span<const double> nodal, const Mesh& mesh) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tr = mesh.triangles[t];
        double u0 = nodal[tr.v[0]], u1 = nodal[tr.v[1]], u2 = nodal[tr.v[2]];
        s += mesh.triangle_area(static_cast<int>(t)) / 6.0 *
             (u0 * u0 + u1 * u1 + u2 * u2 + u0 * u1 + u1 * u2 + u0 * u2);
    }
    return std::sqrt(s);
}

double surface_l2_norm(std::span<const double> nodal, const Mesh& mesh, EdgeTag tag) {
    double s = 0.0;
    for (const BoundaryEdge& e : mesh.boundary_edges) {
        if (e.tag != tag) continue;
        double ua = nodal[e.a], ub = nodal[e.b];
        s += mesh.edge_length(e) / 3.0 * (ua * ua + ua * ub + ub * ub);
    }
    return std::sqrt(s);
}

double integral(std::span<const double> nodal, const Mesh& mesh) {
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tr = mesh.triangles[t];
        s += mesh.triangle_area(static_cast<int>(t)) / 3.0 *
             (nodal[tr.v[0]] + nodal[tr.v[1]] + nodal[tr.v[2]]);
    }
    return s;
}

namespace {

bool inside_triangle(const Mesh& mesh, int t, Vec2 p, double tol, double bary[3]) {
    const Triangle& tr = mesh.triangles[t];
    Vec2 a = mesh.vertices[tr.v[0]], b = mesh.vertices[tr.v[1]], c = mesh.vertices[tr.v[2]];
    double two_a = cross(b - a, c - a);
    double l0 = cross(b - p, c - p) / two_a;
    double l1 = cross(c - p, a - p) / two_a;
    double l2 = 1.0 - l0 - l1;
    if (l0 < -tol || l1 < -tol || l2 < -tol) return false;
    bary[0] = l0;
    bary[1] = l1;
    bary[2] = l2;
    return true;
}

}  // namespace

P1Interpolator::P1Interpolator(const Mesh& mesh) : mesh_(mesh) {
    nb_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(mesh.triangles.size()) / 2.0)));
    buckets_.resize(static_cast<std::size_t>(nb_) * nb_);
    auto bucket_of = [this](double v) {
        return std::clamp(static_cast<int>(std::floor(v * nb_)), 0, nb_ - 1);
    };
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tr = mesh.triangles[t];
        double xmin = std::min({mesh.vertices[tr.v[0]].x, mesh.vertices[tr.v[1]].x, mesh.vertices[tr.v[2]].x});
        double xmax = std::max({mesh.vertices[tr.v[0]].x, mesh.vertices[tr.v[1]].x, mesh.vertices[tr.v[2]].x});
        double ymin = std::min({mesh.vertices[tr.v[0]].y, mesh.vertices[tr.v[1]].y, mesh.vertices[tr.v[2]].y});
        double ymax = std::max({mesh.vertices[tr.v[0]].y, mesh.vertices[tr.v[1]].y, mesh.vertices[tr.v[2]].y});
        for (int j = bucket_of(ymin); j <= bucket_of(ymax); ++j) {
            for (int i = bucket_of(xmin); i <= bucket_of(xmax); ++i) {
                buckets_[static_cast<std::size_t>(j) * nb_ + i].push_back(static_cast<int>(t));
            }
        }
    }
}

int P1Interpolator::locate(Vec2 p) const {
    auto bucket_of = [this](double v) {
        return std::clamp(static_cast<int>(std::floor(v * nb_)), 0, nb_ - 1);
    };
    double bary[3];
    const int bi = bucket_of(p.x), bj = bucket_of(p.y);
    for (int ring = 0; ring < nb_; ++ring) {
        bool any = false;
        for (int j = std::max(0, bj - ring); j <= std::min(nb_ - 1, bj + ring); ++j) {
            for (int i = std::max(0, bi - ring); i <= std::min(nb_ - 1, bi + ring); ++i) {
                if (ring > 0 && std::abs(i - bi) != ring && std::abs(j - bj) != ring) continue;
                any = true;
                for (int t : buckets_[static_cast<std::size_t>(j) * nb_ + i]) {
                    if (inside_triangle(mesh_, t, p, 1e-10, bary)) return t;
                }
            }
        }
        if (ring > 1 && !any) break;
    }
    return -1;
}

void P1Interpolator::weights(Vec2 p, int vertex_ids[3], double bary[3]) const {
    bary[0] = bary[1] = bary[2] = 0.0;
    int t = locate(p);
    if (t >= 0) {
        inside_triangle(mesh_, t, p, 1e-9, bary);
        const Triangle& tr = mesh_.triangles[t];
        vertex_ids[0] = tr.v[0];
        vertex_ids[1] = tr.v[1];
        vertex_ids[2] = tr.v[2];
        return;
    }
    // marginally outside: fall back to the nearest vertex
    double best = std::numeric_limits<double>::max();
    std::size_t best_v = 0;
    for (std::size_t v = 0; v < mesh_.n_vertices(); ++v) {
        double d = dot(mesh_.vertices[v] - p, mesh_.vertices[v] - p);
        if (d < best) {
            best = d;
            best_v = v;
        }
    }
    vertex_ids[0] = vertex_ids[1] = vertex_ids[2] = static_cast<int>(best_v);
    bary[0] = 1.0;
    bary[1] = bary[2] = 0.0;
}

double P1Interpolator::value(std::span<const double> nodal, Vec2 p) const {
    int ids[3];
    double bary[3];
    weights(p, ids, bary);
    return bary[0] * nodal[ids[0]] + bary[1] * nodal[ids[1]] + bary[2] * nodal[ids[2]];
}

double eval_p1(const Mesh& mesh, std::span<const double> nodal, Vec2 p) {
    return P1Interpolator(mesh).value(nodal, p);
}

Field Field::zeros(int n_species, std::size_t n_vertices, std::string mesh_hash) {
    Field f;
    f.n_species = n_species;
    f.n_vertices = n_vertices;
    f.values.assign(static_cast<std::size_t>(n_species) * n_vertices, 0.0);
    f.mesh_hash = std::move(mesh_hash);
    return f;
}

std::span<double> Field::species(int s) {
    return {values.data() + static_cast<std::size_t>(s) * n_vertices, n_vertices};
}

std::span<const double> Field::species(int s) const {
    return {values.data() + static_cast<std::size_t>(s) * n_vertices, n_vertices};
}

double Field::min_value() const {
    return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end());
}

double Field::max_value() const {
    return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
}

bool Field::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double veps_norm(const Field& f, const Mesh& mesh) {
    double s = 0.0;
    for (int i = 0; i < f.n_species; ++i) {
        double h = h1_seminorm(f.species(i), mesh);
        s += h * h;
    }
    return std::sqrt(s);
}

double l2_norm(const Field& f, const Mesh& mesh) {
    double s = 0.0;
    for (int i = 0; i < f.n_species; ++i) {
        double h = l2_norm(f.species(i), mesh);
        s += h * h;
    }
    return std::sqrt(s);
}

double surface_l2_norm(const Field& f, const Mesh& mesh, EdgeTag tag) {
    double s = 0.0;
    for (int i = 0; i < f.n_species; ++i) {
        double h = surface_l2_norm(f.species(i), mesh, tag);
        s += h * h;
    }
    return std::sqrt(s);
}

void write_field(const Field& f, std::ostream& os) {
    os << "FIELD " << (f.mesh_hash.empty() ? "-" : f.mesh_hash) << " " << f.n_species << " "
       << f.n_vertices << "\n";
    char buf[32];
    for (std::size_t v = 0; v < f.n_vertices; ++v) {
        for (int s = 0; s < f.n_species; ++s) {
            std::snprintf(buf, sizeof buf, "%.17g", f.values[static_cast<std::size_t>(s) * f.n_vertices + v]);
            os << buf << (s + 1 == f.n_species ? "" : " ");
        }
        os << "\n";
    }
}

Field read_field(std::istream& is) {
    std::string kw, hash;
    int n_species;
    std::size_t n_vertices;
    if (!(is >> kw >> hash >> n_species >> n_vertices) || kw != "FIELD") {
        throw Error("field file: bad header");
    }
    Field f = Field::zeros(n_species, n_vertices, hash == "-" ? "" : hash);
    for (std::size_t v = 0; v < n_vertices; ++v) {
        for (int s = 0; s < n_species; ++s) {
            if (!(is >> f.values[static_cast<std::size_t>(s) * n_vertices + v])) {
                throw Error("field file: truncated");
            }
        }
    }
    return f;
}

}  // namespace perihom
