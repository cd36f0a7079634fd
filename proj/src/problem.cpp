#include "perihom/problem.hpp"

#include <cmath>
#include <string>

#include "perihom/errors.hpp"

namespace perihom {

namespace {

double frac01(double v) {
    double f = v - std::floor(v);
    return f;  // in [0,1); exact grid points map to 0
}

}  // namespace

ScalarCoeff cell_coeff(const ReactionExpr& e, double epsilon) {
    return [e, epsilon](Vec2 p) {
        double y[2] = {frac01(p.x / epsilon), frac01(p.y / epsilon)};
        return e.eval(y);
    };
}

void ProblemSpec::validate_on(const Mesh& cell_mesh) const {
    for (std::size_t s = 0; s < species.size(); ++s) {
        const SpeciesSpec& sp = species[s];
        if (!(sp.alpha > 0.0)) {
            throw ValidationError("species " + std::to_string(s + 1) +
                                  ": ellipticity floor alpha must be positive");
        }
        double dmin = std::numeric_limits<double>::max();
        for (std::size_t t = 0; t < cell_mesh.triangles.size(); ++t) {
            Vec2 c = cell_mesh.centroid(static_cast<int>(t));
            double y[2] = {c.x, c.y};
            dmin = std::min(dmin, sp.d.eval(y));
        }
        if (dmin < sp.alpha) {
            throw ValidationError("species " + std::to_string(s + 1) +
                                  ": diffusion coefficient violates its ellipticity floor (sampled min " +
                                  std::to_string(dmin) + " < alpha " + std::to_string(sp.alpha) + ")");
        }
        for (const BoundaryEdge& e : cell_mesh.boundary_edges) {
            if (e.tag != EdgeTag::hole) continue;
            Vec2 pa = cell_mesh.vertices[e.a], pb = cell_mesh.vertices[e.b];
            for (double t : {0.21132486540518713, 0.7886751345948129}) {
                Vec2 x = pa + t * (pb - pa);
                double y[2] = {x.x, x.y};
                if (sp.a.eval(y) < 0.0 || sp.b.eval(y) < 0.0) {
                    throw ValidationError("species " + std::to_string(s + 1) +
                                          ": deposition coefficients must be nonnegative on the hole boundary");
                }
            }
        }
    }
}

}  // namespace perihom
