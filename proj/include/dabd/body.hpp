#pragma once

#include "dabd/types.hpp"

#include <vector>

namespace dabd {

// Exact area integrals of 1, x, y, x^2, xy, y^2 over a polygon region.
struct PolygonMoments {
    double area = 0.0;
    double sx = 0.0, sy = 0.0;        // first moments
    double sxx = 0.0, sxy = 0.0, syy = 0.0; // second moments
};

using Loop = std::vector<Vec2>;

using Configs = std::vector<Vec6>; // per-body q, indexed like the body table

// Green's-theorem moments of one positively oriented simple loop.
PolygonMoments loop_moments(const Loop& loop);

// Sum of moments over all loops.
PolygonMoments loops_moments(const std::vector<Loop>& loops);

// A near-rigid body with affine DoF. Rest vertices are stored relative to
// the rest-shape area centroid; the world map is x = A*xbar + p, so the
// translation slots of q hold the world position of the centroid. With
// centroid-centered rest coordinates the 6x6 mass matrix decouples into two
// identical 3x3 blocks, and lambda_max(M) <= m holds exactly whenever the
// body fits inside the unit disk around its centroid.
struct AffineBody {
    int id = -1;
    std::vector<Loop> rest_loops; // centroid-centered, positively oriented
    Vec6 q = Vec6::Zero();
    Vec6 q_dot = Vec6::Zero();
    double density = 1.0; // kg/m^2
    double mass = 0.0;    // kg
    Mat6 mass_matrix = Mat6::Zero();
    double rest_area = 0.0;
    bool is_static = false;
    double arap_scale = 1.0; // per-body stiffness multiplier on the scene kappa

    int vertex_count() const;
    int edge_count() const { return vertex_count(); } // closed loops

    // Flattened vertex/edge indexing across loops, in loop order.
    Vec2 rest_vertex(int v) const;
    // Edge e connects rest_vertex endpoints within its loop (wraps around).
    void rest_edge(int e, Vec2& a, Vec2& b) const;
};

// (m_b, M_b) from exact polygon moment integration. Throws on area <= 0.
void build_mass_matrix(const std::vector<Loop>& loops, double density,
                       double& mass_out, Mat6& matrix_out);

// Constructs a body whose world-space geometry at q equals `world_loops`:
// rest loops are re-centered at the area centroid and the offset is folded
// into the initial translation. Initial A = I.
AffineBody make_affine_body(int id, const std::vector<Loop>& world_loops,
                            double density, bool is_static = false);

// q_tilde = q + h*q_dot + h^2 * M^{-1} f_ext. Throws if M is singular.
Vec6 predicted_position(const Vec6& q, const Vec6& q_dot, const Vec6& f_ext,
                        double h, const Mat6& mass_matrix);

// Generalized gravity force: m*g on the translation slots, zero elsewhere
// (exact for uniform fields under affine maps).
Vec6 gravity_force(const AffineBody& body, const Vec2& gravity);

struct Aabb {
    Vec2 lo{0.0, 0.0};
    Vec2 hi{0.0, 0.0};
    bool overlaps(const Aabb& o) const {
        return lo.x() <= o.hi.x() && o.lo.x() <= hi.x() && lo.y() <= o.hi.y() &&
               o.lo.y() <= hi.y();
    }
    Aabb inflated(double r) const {
        return Aabb{lo - Vec2(r, r), hi + Vec2(r, r)};
    }
    Aabb merged(const Aabb& o) const {
        return Aabb{lo.cwiseMin(o.lo), hi.cwiseMax(o.hi)};
    }
};

Aabb body_aabb(const AffineBody& body, const Vec6& q);

// Max vertex speed |J(xbar) q_dot| over the body's vertices.
double max_vertex_speed(const AffineBody& body, const Vec6& q_dot);

} // namespace dabd
