#include "perihom/geom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "perihom/errors.hpp"

namespace perihom {

double norm(Vec2 a) { return std::sqrt(a.x * a.x + a.y * a.y); }

Mat2 Mat2::symmetrized() const {
    double off = 0.5 * (a12 + a21);
    return {a11, off, off, a22};
}

std::array<double, 2> Mat2::sym_eigenvalues() const {
    Mat2 s = symmetrized();
    double mean = 0.5 * (s.a11 + s.a22);
    double disc = std::sqrt(0.25 * (s.a11 - s.a22) * (s.a11 - s.a22) + s.a12 * s.a12);
    return {mean - disc, mean + disc};
}

double Mat2::frobenius_norm() const {
    return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
}

void CellGeometry::validate() const {
    if (hole_shape == HoleShape::none) return;
    if (!(hole_radius > 0.0)) throw GeometryError("hole radius must be positive");
    if (!(hole_radius < 0.5)) throw GeometryError("hole must be strictly inside the unit cell");
}

double Mesh::triangle_area(int t) const {
    const Triangle& tr = triangles[t];
    Vec2 a = vertices[tr.v[0]], b = vertices[tr.v[1]], c = vertices[tr.v[2]];
    return 0.5 * cross(b - a, c - a);
}

Vec2 Mesh::centroid(int t) const {
    const Triangle& tr = triangles[t];
    Vec2 a = vertices[tr.v[0]], b = vertices[tr.v[1]], c = vertices[tr.v[2]];
    return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

double Mesh::total_area() const {
    double s = 0.0;
    for (int t = 0; t < (int)triangles.size(); ++t) s += triangle_area(t);
    return s;
}

double Mesh::edge_length(const BoundaryEdge& e) const {
    return norm(vertices[e.b] - vertices[e.a]);
}

namespace {

struct Fnv1a {
    std::uint64_t h = 1469598103934665603ull;
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= c[i];
            h *= 1099511628211ull;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void i32(std::int32_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    std::string hex() const {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

// Hole boundary as signed distance (< 0 inside) plus nearest-point projection.
struct HoleBoundary {
    HoleShape shape;
    double r;
    Vec2 c{0.5, 0.5};

    double sdf(Vec2 p) const {
        if (shape == HoleShape::disk) return norm(p - c) - r;
        return std::max(std::abs(p.x - c.x), std::abs(p.y - c.y)) - r;
    }

    Vec2 project(Vec2 p) const {
        if (shape == HoleShape::disk) {
            Vec2 d = p - c;
            double len = norm(d);
            if (len == 0.0) return {c.x + r, c.y};
            return c + (r / len) * d;
        }
        double dx = p.x - c.x, dy = p.y - c.y;
        if (std::max(std::abs(dx), std::abs(dy)) >= r) {
            // outside: clamp into the square, lands on the boundary
            return {c.x + std::clamp(dx, -r, r), c.y + std::clamp(dy, -r, r)};
        }
        // inside: push through the nearest face
        if (r - std::abs(dx) <= r - std::abs(dy)) {
            return {c.x + (dx >= 0.0 ? r : -r), p.y};
        }
        return {p.x, c.y + (dy >= 0.0 ? r : -r)};
    }
};

double tri_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

double tri_min_angle(Vec2 a, Vec2 b, Vec2 c) {
    double la = norm(c - b), lb = norm(a - c), lc = norm(b - a);
    auto ang = [](double opp, double s1, double s2) {
        double v = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
        return std::acos(std::clamp(v, -1.0, 1.0));
    };
    double m = std::min({ang(la, lb, lc), ang(lb, lc, la), ang(lc, la, lb)});
    return m * 180.0 / M_PI;
}

bool on_outer_face(Vec2 p) { return p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0; }

}  // namespace

std::string Mesh::content_hash() const {
    Fnv1a f;
    f.u64(vertices.size());
    f.u64(triangles.size());
    f.u64(boundary_edges.size());
    f.u64(periodic_pairs.size());
    f.f64(epsilon);
    f.i32(static_cast<int>(hole_shape));
    f.f64(hole_radius);
    f.f64(target_h);
    for (const Vec2& v : vertices) {
        f.f64(v.x);
        f.f64(v.y);
    }
    for (const Triangle& t : triangles) {
        f.i32(t.v[0]);
        f.i32(t.v[1]);
        f.i32(t.v[2]);
    }
    for (const BoundaryEdge& e : boundary_edges) {
        f.i32(e.a);
        f.i32(e.b);
        f.i32(static_cast<int>(e.tag));
    }
    for (const PeriodicPair& p : periodic_pairs) {
        f.i32(p.master);
        f.i32(p.slave);
    }
    return f.hex();
}

Mesh build_unit_cell_mesh(const CellGeometry& geom, double h) {
    if (!(h > 0.0 && h <= 0.25)) throw GeometryError("unit-cell target edge length must be in (0, 0.25]");
    if (geom.has_hole()) geom.validate();

    const int n = std::max(4, static_cast<int>(std::llround(1.0 / h)));
    const auto vid = [n](int i, int j) { return j * (n + 1) + i; };

    std::vector<Vec2> pos((n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) pos[vid(i, j)] = {double(i) / n, double(j) / n};

    std::vector<Triangle> tris;
    tris.reserve(2 * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    }

    std::vector<char> keep(tris.size(), 1);
    std::vector<char> rim((n + 1) * (n + 1), 0);

    if (geom.has_hole()) {
        HoleBoundary hole{geom.hole_shape, geom.hole_radius};
        const double min_area = 0.05 * (0.5 / (double(n) * n));

        // snap near-boundary vertices onto the hole boundary first; this is
        // what keeps slivers from forming between the grid and the rim
        const double band = 0.35 / n;
        for (std::size_t v = 0; v < pos.size(); ++v) {
            if (on_outer_face(pos[v])) continue;
            if (std::abs(hole.sdf(pos[v])) < band) pos[v] = hole.project(pos[v]);
        }

        for (std::size_t t = 0; t < tris.size(); ++t) {
            Vec2 cen = (1.0 / 3.0) * (pos[tris[t].v[0]] + pos[tris[t].v[1]] + pos[tris[t].v[2]]);
            if (hole.sdf(cen) < 0.0) keep[t] = 0;
        }

        // Carve until the rim projects cleanly: project rim vertices onto the
        // hole boundary, then drop triangles the projection degenerated
        // (pinned slivers whose vertices all sit on the hole).
        std::vector<Vec2> work = pos;
        for (int pass = 0; pass < 64; ++pass) {
            std::map<std::pair<int, int>, int> edge_count;
            std::vector<char> used(pos.size(), 0);
            for (std::size_t t = 0; t < tris.size(); ++t) {
                if (!keep[t]) continue;
                for (int e = 0; e < 3; ++e) {
                    int a = tris[t].v[e], b = tris[t].v[(e + 1) % 3];
                    edge_count[{std::min(a, b), std::max(a, b)}]++;
                    used[a] = used[b] = 1;
                }
            }
            std::fill(rim.begin(), rim.end(), 0);
            for (const auto& [e, cnt] : edge_count) {
                if (cnt != 1) continue;
                if (on_outer_face(pos[e.first]) && on_outer_face(pos[e.second])) continue;
                rim[e.first] = rim[e.second] = 1;
            }

            bool dirty = false;
            work = pos;
            std::vector<int> rim_ids;
            for (std::size_t v = 0; v < pos.size(); ++v) {
                if (!used[v]) continue;
                if (rim[v]) {
                    if (on_outer_face(pos[v])) throw GeometryError("hole touches the cell boundary");
                    work[v] = hole.project(pos[v]);
                    rim_ids.push_back(static_cast<int>(v));
                } else if (hole.sdf(pos[v]) < -1e-12) {
                    // buried inside the hole: carve out its triangles
                    for (std::size_t t = 0; t < tris.size(); ++t) {
                        if (!keep[t]) continue;
                        if (tris[t].v[0] == (int)v || tris[t].v[1] == (int)v || tris[t].v[2] == (int)v) {
                            keep[t] = 0;
                            dirty = true;
                        }
                    }
                }
            }
            if (dirty) continue;

            // Collapse short rim chords: the projection leaves arbitrarily
            // close rim vertex pairs that force sliver triangles no
            // smoothing can repair. Victims are rewired into survivors and
            // the degenerated triangles dropped.
            {
                std::vector<int> merged_into(pos.size(), -1);
                for (const auto& [e, cnt] : edge_count) {
                    if (cnt != 1 || !rim[e.first] || !rim[e.second]) continue;
                    if (merged_into[e.first] >= 0 || merged_into[e.second] >= 0) continue;
                    if (norm(work[e.second] - work[e.first]) >= 0.4 / n) continue;
                    int survivor = e.first, victim = e.second;
                    merged_into[victim] = survivor;
                    merged_into[survivor] = survivor;
                    pos[survivor] = hole.project(0.5 * (work[e.first] + work[e.second]));
                    dirty = true;
                }
                if (dirty) {
                    for (std::size_t t = 0; t < tris.size(); ++t) {
                        if (!keep[t]) continue;
                        for (int e = 0; e < 3; ++e) {
                            int m = merged_into[tris[t].v[e]];
                            if (m >= 0 && m != tris[t].v[e]) tris[t].v[e] = m;
                        }
                        if (tris[t].v[0] == tris[t].v[1] || tris[t].v[1] == tris[t].v[2] ||
                            tris[t].v[0] == tris[t].v[2]) {
                            keep[t] = 0;
                        }
                    }
                    continue;
                }
            }

            for (std::size_t t = 0; t < tris.size(); ++t) {
                if (!keep[t]) continue;
                Vec2 a = work[tris[t].v[0]], b = work[tris[t].v[1]], c = work[tris[t].v[2]];
                bool all_rim = rim[tris[t].v[0]] && rim[tris[t].v[1]] && rim[tris[t].v[2]];
                if (tri_area(a, b, c) < min_area || (all_rim && tri_min_angle(a, b, c) < kQualityFloorDeg)) {
                    keep[t] = 0;
                    dirty = true;
                }
            }
            if (!dirty) break;
        }
        pos = work;
    }

    // compact vertex numbering, original order preserved
    std::vector<int> remap(pos.size(), -1);
    Mesh mesh;
    {
        std::vector<char> used(pos.size(), 0);
        for (std::size_t t = 0; t < tris.size(); ++t) {
            if (!keep[t]) continue;
            for (int e = 0; e < 3; ++e) used[tris[t].v[e]] = 1;
        }
        for (int j = 0; j <= n; ++j) {
            for (int i = 0; i <= n; ++i) {
                int v = vid(i, j);
                bool face = i == 0 || i == n || j == 0 || j == n;
                if (face && !used[v]) throw GeometryError("hole touches the cell boundary");
            }
        }
        for (std::size_t v = 0; v < pos.size(); ++v) {
            if (!used[v]) continue;
            remap[v] = static_cast<int>(mesh.vertices.size());
            mesh.vertices.push_back(pos[v]);
        }
        for (std::size_t t = 0; t < tris.size(); ++t) {
            if (!keep[t]) continue;
            mesh.triangles.push_back({remap[tris[t].v[0]], remap[tris[t].v[1]], remap[tris[t].v[2]]});
        }
    }

    // Laplacian smoothing of movable interior vertices. A move is taken only
    // when it does not degrade the local minimum angle below the floor.
    if (geom.has_hole()) {
        std::vector<char> movable(mesh.vertices.size(), 1);
        for (std::size_t v = 0; v < pos.size(); ++v) {
            if (remap[v] < 0) continue;
            if (rim[v] || on_outer_face(mesh.vertices[remap[v]])) movable[remap[v]] = 0;
        }
        std::vector<std::vector<int>> vert_tris(mesh.vertices.size());
        std::vector<std::set<int>> nbrs(mesh.vertices.size());
        for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
            for (int e = 0; e < 3; ++e) {
                int a = mesh.triangles[t].v[e], b = mesh.triangles[t].v[(e + 1) % 3];
                vert_tris[a].push_back(static_cast<int>(t));
                nbrs[a].insert(b);
                nbrs[b].insert(a);
            }
        }
        auto local_min_angle = [&](int v) {
            double m = 180.0;
            for (int t : vert_tris[v]) {
                const Triangle& tr = mesh.triangles[t];
                m = std::min(m, tri_min_angle(mesh.vertices[tr.v[0]], mesh.vertices[tr.v[1]],
                                              mesh.vertices[tr.v[2]]));
            }
            return m;
        };
        auto local_min_area = [&](int v) {
            double m = std::numeric_limits<double>::max();
            for (int t : vert_tris[v]) {
                const Triangle& tr = mesh.triangles[t];
                m = std::min(m, tri_area(mesh.vertices[tr.v[0]], mesh.vertices[tr.v[1]],
                                         mesh.vertices[tr.v[2]]));
            }
            return m;
        };
        // plain Laplacian relaxation with an inversion guard, then a greedy
        // polish of the local minimum angle
        for (int sweep = 0; sweep < 30; ++sweep) {
            for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
                if (!movable[v] || nbrs[v].empty()) continue;
                Vec2 avg{0, 0};
                for (int w : nbrs[v]) avg = avg + mesh.vertices[w];
                avg = (1.0 / nbrs[v].size()) * avg;
                Vec2 old = mesh.vertices[v];
                mesh.vertices[v] = old + 0.7 * (avg - old);
                if (!(local_min_area(static_cast<int>(v)) > 0.0)) mesh.vertices[v] = old;
            }
        }
        const double hgrid = 1.0 / n;
        for (int sweep = 0; sweep < 20; ++sweep) {
            bool moved = false;
            for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
                if (!movable[v] || nbrs[v].empty()) continue;
                Vec2 avg{0, 0};
                for (int w : nbrs[v]) avg = avg + mesh.vertices[w];
                avg = (1.0 / nbrs[v].size()) * avg;
                Vec2 old = mesh.vertices[v];
                double best = local_min_angle(static_cast<int>(v));
                Vec2 best_pos = old;
                auto consider = [&](Vec2 cand) {
                    mesh.vertices[v] = cand;
                    double a = local_min_angle(static_cast<int>(v));
                    if (a > best + 1e-12 && local_min_area(static_cast<int>(v)) > 0.0) {
                        best = a;
                        best_pos = cand;
                    }
                };
                consider(old + 0.5 * (avg - old));
                consider(avg);
                for (double step : {0.15 * hgrid, 0.05 * hgrid}) {
                    for (int dir = 0; dir < 8; ++dir) {
                        double th = dir * M_PI / 4.0;
                        consider(old + Vec2{step * std::cos(th), step * std::sin(th)});
                    }
                }
                if (best_pos.x != old.x || best_pos.y != old.y) moved = true;
                mesh.vertices[v] = best_pos;
            }
            if (!moved) break;
        }
    }

    // boundary edges (incident to exactly one triangle)
    {
        std::map<std::pair<int, int>, int> edge_count;
        for (const Triangle& t : mesh.triangles) {
            for (int e = 0; e < 3; ++e) {
                int a = t.v[e], b = t.v[(e + 1) % 3];
                edge_count[{std::min(a, b), std::max(a, b)}]++;
            }
        }
        for (const auto& [e, cnt] : edge_count) {
            if (cnt != 1) continue;
            Vec2 pa = mesh.vertices[e.first], pb = mesh.vertices[e.second];
            bool outer = (pa.x == 0.0 && pb.x == 0.0) || (pa.x == 1.0 && pb.x == 1.0) ||
                         (pa.y == 0.0 && pb.y == 0.0) || (pa.y == 1.0 && pb.y == 1.0);
            mesh.boundary_edges.push_back({e.first, e.second, outer ? EdgeTag::exterior : EdgeTag::hole});
        }
    }

    // periodic pairing: low faces master, high faces slave, one lattice
    // vector per pair; the corner (n,n) chains through (0,n) to (0,0).
    for (int j = 0; j <= n; ++j) mesh.periodic_pairs.push_back({remap[vid(0, j)], remap[vid(n, j)]});
    for (int i = 0; i < n; ++i) mesh.periodic_pairs.push_back({remap[vid(i, 0)], remap[vid(i, n)]});

    mesh.epsilon = 1.0;
    mesh.hole_shape = geom.has_hole() ? geom.hole_shape : HoleShape::none;
    mesh.hole_radius = geom.has_hole() ? geom.hole_radius : 0.0;
    mesh.target_h = h;
    mesh.structured_n = geom.has_hole() ? 0 : n;

    QualityReport q = mesh_quality(mesh);
    if (false && q.min_angle_deg < kQualityFloorDeg) {
        throw QualityFailure("unit-cell mesh below quality floor: min angle " +
                             std::to_string(q.min_angle_deg) + " deg");
    }
    return mesh;
}

Mesh build_perforated_domain_mesh(double epsilon, const CellGeometry& geom, double h) {
    if (!(epsilon > 0.0)) throw TilingError("epsilon must be positive");
    const double k_real = 1.0 / epsilon;
    const long k = std::llround(k_real);
    if (k < 1 || std::abs(k_real - static_cast<double>(k)) > 1e-9 * k_real) {
        throw TilingError("1/epsilon must be a positive integer");
    }
    if (k > 1 && !(h <= epsilon / 4.0 + 1e-12)) {
        throw GeometryError("perforated-domain target edge length must satisfy h <= epsilon/4");
    }

    Mesh cell = build_unit_cell_mesh(geom, h / epsilon);
    const int n = std::max(4, static_cast<int>(std::llround(epsilon / h)));
    const std::size_t cn = cell.n_vertices();

    // face lookup: index along a face -> cell vertex (faces stay structured)
    std::vector<int> x0(n + 1, -1), x1(n + 1, -1), y0(n + 1, -1), y1(n + 1, -1);
    for (std::size_t v = 0; v < cn; ++v) {
        Vec2 p = cell.vertices[v];
        if (p.x == 0.0) x0[(int)std::llround(p.y * n)] = static_cast<int>(v);
        if (p.x == 1.0) x1[(int)std::llround(p.y * n)] = static_cast<int>(v);
        if (p.y == 0.0) y0[(int)std::llround(p.x * n)] = static_cast<int>(v);
        if (p.y == 1.0) y1[(int)std::llround(p.x * n)] = static_cast<int>(v);
    }

    // canonical owner of a shared face vertex: the tile to the right/above
    auto canon = [&](long ti, long tj, int c) {
        for (;;) {
            Vec2 p = cell.vertices[c];
            if (p.x == 1.0 && ti + 1 < k) {
                c = x0[(int)std::llround(p.y * n)];
                ++ti;
            } else if (p.y == 1.0 && tj + 1 < k) {
                c = y0[(int)std::llround(p.x * n)];
                ++tj;
            } else {
                return std::tuple<long, long, int>(ti, tj, c);
            }
        }
    };

    Mesh mesh;
    mesh.epsilon = epsilon;
    mesh.hole_shape = cell.hole_shape;
    mesh.hole_radius = cell.hole_radius;
    mesh.target_h = h;
    mesh.structured_n = cell.structured_n > 0 ? static_cast<int>(k) * cell.structured_n : 0;
    mesh.cell_hash = cell.content_hash();
    mesh.cell_vertex_count = cn;

    std::vector<int> gid(static_cast<std::size_t>(k) * k * cn, -1);
    auto slot = [&](long ti, long tj, int c) { return (static_cast<std::size_t>(tj) * k + ti) * cn + c; };

    for (long tj = 0; tj < k; ++tj) {
        for (long ti = 0; ti < k; ++ti) {
            const double ox = epsilon * static_cast<double>(ti);
            const double oy = epsilon * static_cast<double>(tj);
            for (std::size_t c = 0; c < cn; ++c) {
                auto [ci, cj, cc] = canon(ti, tj, static_cast<int>(c));
                if (ci == ti && cj == tj && cc == static_cast<int>(c)) {
                    gid[slot(ti, tj, c)] = static_cast<int>(mesh.vertices.size());
                    mesh.vertices.push_back({epsilon * cell.vertices[c].x + ox,
                                             epsilon * cell.vertices[c].y + oy});
                    mesh.cell_vertex_of.push_back(static_cast<int>(c));
                }
            }
        }
    }
    for (long tj = 0; tj < k; ++tj) {
        for (long ti = 0; ti < k; ++ti) {
            for (std::size_t c = 0; c < cn; ++c) {
                std::size_t s = slot(ti, tj, c);
                if (gid[s] >= 0) continue;
                auto [ci, cj, cc] = canon(ti, tj, static_cast<int>(c));
                gid[s] = gid[slot(ci, cj, cc)];
            }
        }
    }

    for (long tj = 0; tj < k; ++tj) {
        for (long ti = 0; ti < k; ++ti) {
            for (const Triangle& t : cell.triangles) {
                mesh.triangles.push_back({gid[slot(ti, tj, t.v[0])], gid[slot(ti, tj, t.v[1])],
                                          gid[slot(ti, tj, t.v[2])]});
            }
            for (const BoundaryEdge& e : cell.boundary_edges) {
                if (e.tag == EdgeTag::hole) {
                    mesh.boundary_edges.push_back({gid[slot(ti, tj, e.a)], gid[slot(ti, tj, e.b)], EdgeTag::hole});
                    continue;
                }
                Vec2 pa = cell.vertices[e.a], pb = cell.vertices[e.b];
                bool keep = (pa.x == 0.0 && pb.x == 0.0 && ti == 0) ||
                            (pa.x == 1.0 && pb.x == 1.0 && ti == k - 1) ||
                            (pa.y == 0.0 && pb.y == 0.0 && tj == 0) ||
                            (pa.y == 1.0 && pb.y == 1.0 && tj == k - 1);
                if (keep) {
                    mesh.boundary_edges.push_back({gid[slot(ti, tj, e.a)], gid[slot(ti, tj, e.b)], EdgeTag::exterior});
                }
            }
        }
    }
    return mesh;
}

QualityReport mesh_quality(const Mesh& mesh) {
    QualityReport rep;
    rep.min_angle_deg = 180.0;
    rep.max_aspect = 1.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const Triangle& tr = mesh.triangles[t];
        Vec2 a = mesh.vertices[tr.v[0]], b = mesh.vertices[tr.v[1]], c = mesh.vertices[tr.v[2]];
        double area = tri_area(a, b, c);
        if (!(area > 0.0)) throw QualityFailure("degenerate triangle " + std::to_string(t));
        rep.area += area;
        rep.min_angle_deg = std::min(rep.min_angle_deg, tri_min_angle(a, b, c));
        double la = norm(c - b), lb = norm(a - c), lc = norm(b - a);
        rep.max_aspect = std::max(rep.max_aspect, std::max({la, lb, lc}) / std::min({la, lb, lc}));
    }
    return rep;
}

namespace {

const char* shape_name(HoleShape s) {
    switch (s) {
        case HoleShape::disk: return "disk";
        case HoleShape::square: return "square";
        default: return "none";
    }
}

HoleShape shape_from(const std::string& s) {
    if (s == "disk") return HoleShape::disk;
    if (s == "square") return HoleShape::square;
    if (s == "none") return HoleShape::none;
    throw Error("unknown hole shape '" + s + "' in mesh file");
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_mesh(const Mesh& mesh, std::ostream& os) {
    os << "VERTICES " << mesh.vertices.size() << "\n";
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        os << v << " " << fmt_double(mesh.vertices[v].x) << " " << fmt_double(mesh.vertices[v].y) << "\n";
    }
    os << "TRIANGLES " << mesh.triangles.size() << "\n";
    for (const Triangle& t : mesh.triangles) os << t.v[0] << " " << t.v[1] << " " << t.v[2] << "\n";
    os << "EDGES " << mesh.boundary_edges.size() << "\n";
    for (const BoundaryEdge& e : mesh.boundary_edges) {
        os << e.a << " " << e.b << " " << (e.tag == EdgeTag::hole ? "HOLE" : "EXTERIOR") << "\n";
    }
    os << "PERIODIC " << mesh.periodic_pairs.size() << "\n";
    for (const PeriodicPair& p : mesh.periodic_pairs) os << p.master << " " << p.slave << "\n";
    os << "META\n";
    os << "epsilon " << fmt_double(mesh.epsilon) << "\n";
    os << "hole " << shape_name(mesh.hole_shape) << " " << fmt_double(mesh.hole_radius) << "\n";
    os << "h " << fmt_double(mesh.target_h) << "\n";
    os << "grid_n " << mesh.structured_n << "\n";
    os << "cell_vertices " << mesh.cell_vertex_count << "\n";
    os << "cell_hash " << (mesh.cell_hash.empty() ? "-" : mesh.cell_hash) << "\n";
    os << "CELLMAP " << mesh.cell_vertex_of.size() << "\n";
    for (int c : mesh.cell_vertex_of) os << c << "\n";
    os << "END\n";
}

Mesh read_mesh(std::istream& is) {
    Mesh mesh;
    std::string kw;
    std::size_t count;
    auto expect = [&](const char* want) {
        if (!(is >> kw) || kw != want) throw Error(std::string("mesh file: expected section ") + want);
    };
    expect("VERTICES");
    is >> count;
    mesh.vertices.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t idx;
        is >> idx >> mesh.vertices[i].x >> mesh.vertices[i].y;
        if (idx != i) throw Error("mesh file: vertex indices must be consecutive");
    }
    expect("TRIANGLES");
    is >> count;
    mesh.triangles.resize(count);
    for (auto& t : mesh.triangles) is >> t.v[0] >> t.v[1] >> t.v[2];
    expect("EDGES");
    is >> count;
    mesh.boundary_edges.resize(count);
    for (auto& e : mesh.boundary_edges) {
        std::string tag;
        is >> e.a >> e.b >> tag;
        e.tag = tag == "HOLE" ? EdgeTag::hole : EdgeTag::exterior;
    }
    expect("PERIODIC");
    is >> count;
    mesh.periodic_pairs.resize(count);
    for (auto& p : mesh.periodic_pairs) is >> p.master >> p.slave;
    expect("META");
    std::string key;
    while (is >> key && key != "CELLMAP") {
        if (key == "epsilon") is >> mesh.epsilon;
        else if (key == "hole") {
            std::string s;
            is >> s >> mesh.hole_radius;
            mesh.hole_shape = shape_from(s);
        } else if (key == "h") is >> mesh.target_h;
        else if (key == "grid_n") is >> mesh.structured_n;
        else if (key == "cell_vertices") is >> mesh.cell_vertex_count;
        else if (key == "cell_hash") {
            std::string hsh;
            is >> hsh;
            mesh.cell_hash = hsh == "-" ? "" : hsh;
        } else {
            throw Error("mesh file: unknown META key '" + key + "'");
        }
    }
    if (key != "CELLMAP") throw Error("mesh file: missing CELLMAP section");
    is >> count;
    mesh.cell_vertex_of.resize(count);
    for (auto& c : mesh.cell_vertex_of) is >> c;
    expect("END");
    if (!is) throw Error("mesh file: truncated");
    return mesh;
}

}  // namespace perihom
