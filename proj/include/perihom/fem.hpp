#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "perihom/geom.hpp"

namespace perihom {

/// Coefficient callables receive the quadrature point in mesh coordinates;
/// any fast-variable mapping (y = x/eps mod 1) is baked in by the caller.
using ScalarCoeff = std::function<double(Vec2)>;
using TensorCoeff = std::function<Mat2(Vec2)>;

struct Triplet {
    int row;
    int col;
    double value;
};

/// Symmetric CSR matrix. Finalization sorts by (row, col), merges duplicate
/// entries and drops exact zeros.
class SparseMatrix {
public:
    SparseMatrix() = default;
    static SparseMatrix from_triplets(int dim, std::vector<Triplet> triplets);

    int dim() const { return dim_; }
    std::size_t nnz() const { return values_.size(); }

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> diagonal() const;
    double coeff(int row, int col) const;  // 0 when not stored

    /// Symmetric elimination of homogeneous Dirichlet dofs: constrained rows
    /// and columns are dropped and the diagonal set to one.
    void eliminate(const std::vector<char>& constrained);

    bool same_values(const SparseMatrix& other) const;  // bitwise comparison

    const std::vector<int>& row_offsets() const { return row_offsets_; }
    const std::vector<int>& cols() const { return cols_; }
    const std::vector<double>& values() const { return values_; }

private:
    int dim_ = 0;
    std::vector<int> row_offsets_;
    std::vector<int> cols_;
    std::vector<double> values_;
};

struct LinearSystem {
    SparseMatrix A;
    std::vector<double> b;
};

// --- P1 assembly --------------------------------------------------------

/// Stiffness with matrix-valued coefficient, one-point (centroid) rule:
/// K_ab = area * grad(phi_a) . Q(centroid) grad(phi_b).
SparseMatrix assemble_stiffness_tensor(const Mesh& mesh, const TensorCoeff& q);

/// Scalar coefficient d routes through the tensor path with Q = d*I, so a
/// macro solve with an isotropic effective tensor assembles bit-identically.
SparseMatrix assemble_stiffness(const Mesh& mesh, const ScalarCoeff& d);

/// Consistent P1 mass matrix (exact).
SparseMatrix assemble_mass(const Mesh& mesh);

/// Boundary mass over tagged edges with weight w, 2-point Gauss rule.
SparseMatrix assemble_boundary_mass(const Mesh& mesh, EdgeTag tag, const ScalarCoeff& w);

// --- constraints ---------------------------------------------------------

/// Reduction of periodic slave dofs onto their masters (chains resolved).
class DofMap {
public:
    static DofMap identity(std::size_t n);
    /// Throws ConstraintConflict if a slave vertex also appears in
    /// `dirichlet` (a vertex cannot be both folded and pinned).
    static DofMap periodic(const Mesh& mesh, const std::vector<int>* dirichlet = nullptr);

    int full_dim() const { return static_cast<int>(to_reduced_.size()); }
    int reduced_dim() const { return reduced_dim_; }
    int to_reduced(int full) const { return to_reduced_[full]; }
    bool is_identity() const { return reduced_dim_ == full_dim(); }

    SparseMatrix fold(const SparseMatrix& A) const;
    std::vector<double> fold_vector(std::span<const double> b) const;
    std::vector<double> unfold(std::span<const double> reduced) const;

private:
    std::vector<int> to_reduced_;
    int reduced_dim_ = 0;
};

std::vector<int> tagged_vertices(const Mesh& mesh, EdgeTag tag);

void apply_dirichlet(LinearSystem& system, const std::vector<int>& vertices);
void apply_dirichlet(LinearSystem& system, const Mesh& mesh, EdgeTag tag);
LinearSystem apply_periodic(const LinearSystem& system, const DofMap& map);

// --- linear solve --------------------------------------------------------

struct SolveOpts {
    double tol = 1e-10;   // relative residual
    int max_iter = 0;     // 0 selects 10 * dim
};

/// Jacobi-preconditioned conjugate gradient. Throws NoConvergence when the
/// iteration budget is exhausted (ill-conditioning or a constraint bug).
std::vector<double> solve_linear(const SparseMatrix& A, std::span<const double> b,
                                 const SolveOpts& opts = {});

// --- norms and field utilities -------------------------------------------

Vec2 element_gradient(const Mesh& mesh, std::span<const double> nodal, int t);

/// Constant gradients of the three P1 basis functions on a triangle.
std::array<Vec2, 3> p1_gradients(const Mesh& mesh, int t);

double h1_seminorm(std::span<const double> nodal, const Mesh& mesh);
double l2_norm(std::span<const double> nodal, const Mesh& mesh);
double surface_l2_norm(std::span<const double> nodal, const Mesh& mesh, EdgeTag tag);
double integral(std::span<const double> nodal, const Mesh& mesh);

/// Point location with a uniform bucket grid built once per mesh; evaluates
/// P1 fields at arbitrary points (nearest vertex for points marginally
/// outside the triangulation, e.g. micro nodes projected onto a hole rim).
class P1Interpolator {
public:
    explicit P1Interpolator(const Mesh& mesh);
    double value(std::span<const double> nodal, Vec2 p) const;
    int locate(Vec2 p) const;  // containing triangle, -1 if none

    /// Locate once, evaluate many fields: fills the triangle's vertex ids
    /// and barycentric weights. Falls back to the nearest vertex (weight 1)
    /// for points marginally outside the triangulation.
    void weights(Vec2 p, int vertex_ids[3], double bary[3]) const;

private:
    const Mesh& mesh_;
    int nb_ = 1;
    std::vector<std::vector<int>> buckets_;
};

/// One-shot convenience around P1Interpolator.
double eval_p1(const Mesh& mesh, std::span<const double> nodal, Vec2 p);

/// Nodal scalar values per species on a mesh.
struct Field {
    int n_species = 1;
    std::size_t n_vertices = 0;
    std::vector<double> values;  // species-major
    std::string mesh_hash;

    static Field zeros(int n_species, std::size_t n_vertices, std::string mesh_hash = "");
    std::span<double> species(int s);
    std::span<const double> species(int s) const;
    double min_value() const;
    double max_value() const;
    bool all_finite() const;
};

/// H^1-seminorm of a multi-species field on the pore space: the V^eps norm,
/// sqrt(sum_i |u_i|_{H^1}^2).
double veps_norm(const Field& f, const Mesh& mesh);
double l2_norm(const Field& f, const Mesh& mesh);
double surface_l2_norm(const Field& f, const Mesh& mesh, EdgeTag tag);

void write_field(const Field& f, std::ostream& os);
Field read_field(std::istream& is);

}  // namespace perihom
