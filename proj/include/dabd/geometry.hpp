#pragma once

#include "dabd/body.hpp"

#include <cstdint>
#include <vector>

namespace dabd {

// Point-to-segment distance with derivatives w.r.t. the stacked coordinates
// x = (p, e0, e1). The active region (interior vs endpoint) selects the
// branch; the distance itself is C1 across region boundaries.
struct PointEdgeDistance {
    double d = 0.0;
    Eigen::Matrix<double, 6, 1> grad = Eigen::Matrix<double, 6, 1>::Zero();
    Eigen::Matrix<double, 6, 6> hess = Eigen::Matrix<double, 6, 6>::Zero();
};

PointEdgeDistance point_edge_distance(const Vec2& p, const Vec2& e0,
                                      const Vec2& e1, bool with_hessian = true);

// A point-edge proximity record. body_a owns the point, body_b the edge.
struct ContactPair {
    int body_a = -1;
    int body_b = -1;
    int point_index = -1;
    int edge_index = -1;
    double d = 0.0;
    double kappa_c = 1.0; // set by the consensus layer; 1 for single-domain

    friend bool operator<(const ContactPair& l, const ContactPair& r) {
        if (l.body_a != r.body_a) return l.body_a < r.body_a;
        if (l.body_b != r.body_b) return l.body_b < r.body_b;
        if (l.point_index != r.point_index) return l.point_index < r.point_index;
        return l.edge_index < r.edge_index;
    }
    friend bool operator==(const ContactPair& l, const ContactPair& r) {
        return l.body_a == r.body_a && l.body_b == r.body_b &&
               l.point_index == r.point_index && l.edge_index == r.edge_index;
    }
};

// Superset of cross-body point-edge pairs within distance d_hat, from
// d_hat-inflated AABBs with single-axis sweep-and-prune over bodies and
// per-primitive AABB pruning. `subset` restricts to those body indices
// (empty = all). Output sorted by (body_a, body_b, point, edge).
std::vector<ContactPair> broad_phase(const std::vector<AffineBody>& bodies,
                                     const Configs& configs, double d_hat,
                                     const std::vector<int>& subset = {});

// Same superset guarantee for linear motion from `start` to `end`: uses the
// union of endpoint AABBs per body/primitive.
std::vector<ContactPair> broad_phase_swept(const std::vector<AffineBody>& bodies,
                                           const Configs& start,
                                           const Configs& end, double margin,
                                           const std::vector<int>& subset = {});

// Exactly the candidates with point_edge_distance < d_hat, distances filled in.
std::vector<ContactPair> narrow_phase(const std::vector<ContactPair>& candidates,
                                      const std::vector<AffineBody>& bodies,
                                      const Configs& configs, double d_hat);

// Earliest time of impact along linear DoF trajectories, scaled by the 0.9
// safety factor and clamped to [0,1]. Returns exactly 1 iff no candidate
// pair collides. Point-edge collinearity is a quadratic in t; degenerate
// cases fall back to linear then constant handling. Throws if a candidate
// pair already touches at t=0 (d == 0), the cheap signal for an infeasible
// start; deep interpenetration audits are intersection_test's job.
double ccd_toi(const std::vector<AffineBody>& bodies, const Configs& start,
               const Configs& end, const std::vector<ContactPair>& candidates);

// Convenience: swept broad phase + ccd_toi over `subset` (empty = all).
double ccd_toi_scene(const std::vector<AffineBody>& bodies, const Configs& start,
                     const Configs& end, const std::vector<int>& subset = {});

// Brute-force O(n^2) interpenetration check: true iff any vertex of one body
// lies strictly inside another body's region, or any two cross-body edges
// properly intersect. Tangent contact reports false. Test/audit use only.
bool intersection_test(const std::vector<AffineBody>& bodies,
                       const Configs& configs,
                       const std::vector<int>& subset = {});

} // namespace dabd
