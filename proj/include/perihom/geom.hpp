#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace perihom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

/// Row-major 2x2 matrix; used for effective tensors and Hessians.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    static Mat2 isotropic(double d) { return {d, 0.0, 0.0, d}; }
    Mat2 transposed() const { return {a11, a21, a12, a22}; }
    Mat2 symmetrized() const;
    /// Eigenvalues of the symmetric part, ascending.
    std::array<double, 2> sym_eigenvalues() const;
    double frobenius_norm() const;
};

inline Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a11 * v.x + m.a12 * v.y, m.a21 * v.x + m.a22 * v.y};
}

enum class HoleShape { none, disk, square };

/// Unit representative cell Y = (0,1)^2 with a centered perforation Y0.
/// hole_radius is the disk radius or the square half-side; 0 selects the
/// degenerate no-hole cell (allowed only for mesh building).
struct CellGeometry {
    HoleShape hole_shape = HoleShape::disk;
    double hole_radius = 0.25;

    bool has_hole() const { return hole_shape != HoleShape::none && hole_radius > 0.0; }
    /// Throws GeometryError when the closure of the hole is not strictly
    /// inside Y or the radius is otherwise inadmissible.
    void validate() const;
};

enum class EdgeTag : std::uint8_t { hole = 0, exterior = 1 };

struct Triangle {
    int v[3];
};

struct BoundaryEdge {
    int a;
    int b;
    EdgeTag tag;
};

struct PeriodicPair {
    int master;
    int slave;
};

struct QualityReport {
    double min_angle_deg = 0.0;
    double max_aspect = 0.0;  // longest/shortest edge ratio
    double area = 0.0;
};

/// Triangulated perforated geometry. Covers both the unit cell Y1 (epsilon
/// = 1, periodic_pairs populated) and the tiled domain Omega^eps (periodic
/// pairs empty, cell provenance populated).
struct Mesh {
    std::vector<Vec2> vertices;
    std::vector<Triangle> triangles;  // positively oriented
    std::vector<BoundaryEdge> boundary_edges;
    std::vector<PeriodicPair> periodic_pairs;  // unit-cell meshes only
    double epsilon = 1.0;

    // generation metadata
    HoleShape hole_shape = HoleShape::none;
    double hole_radius = 0.0;
    double target_h = 0.0;
    int structured_n = 0;  // >0 when the mesh is the plain n x n grid (no hole)

    // tiling provenance: micro vertex -> generating unit-cell vertex.
    // Empty for meshes that were not produced by tiling.
    std::vector<int> cell_vertex_of;
    std::size_t cell_vertex_count = 0;
    std::string cell_hash;

    std::size_t n_vertices() const { return vertices.size(); }
    double triangle_area(int t) const;
    Vec2 centroid(int t) const;
    double total_area() const;
    double edge_length(const BoundaryEdge& e) const;

    /// FNV-1a over the full connectivity and coordinates; identifies a mesh
    /// across serialization for provenance checks.
    std::string content_hash() const;
};

/// Mesh the pore part Y1 of the unit cell by carving the hole out of a
/// structured n x n grid (n = round(1/h)): triangles whose centroid falls
/// inside the hole are dropped, the resulting rim vertices are projected
/// onto the hole boundary, and interior vertices are Laplacian-smoothed.
/// Outer faces stay structured so the periodic pairing is exact.
Mesh build_unit_cell_mesh(const CellGeometry& geom, double h);

/// Tile k x k scaled copies of the unit-cell mesh (k = 1/epsilon) over the
/// unit square. Tile vertices are eps*(cell vertex) + eps*(i,j) with shared
/// face vertices identified by index, never re-meshed, so the cell vertex
/// of every micro node is known exactly (load-bearing for the two-scale
/// reconstruction).
Mesh build_perforated_domain_mesh(double epsilon, const CellGeometry& geom, double h);

/// Throws QualityFailure when a triangle is degenerate (non-positive area).
QualityReport mesh_quality(const Mesh& mesh);

void write_mesh(const Mesh& mesh, std::ostream& os);
Mesh read_mesh(std::istream& is);

/// Minimum interior angle accepted from the generators, in degrees.
inline constexpr double kQualityFloorDeg = 20.0;

}  // namespace perihom
