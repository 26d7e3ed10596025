#pragma once

#include "dabd/geometry.hpp"

namespace dabd {

// One body's contribution: value, 6-gradient, 6x6 Hessian.
struct BodyEnergy {
    double value = 0.0;
    Vec6 grad = Vec6::Zero();
    Mat6 hess = Mat6::Zero();
};

// One contact pair's contribution over (q_a, q_b).
struct PairEnergy {
    double value = 0.0;
    Vec12 grad = Vec12::Zero();
    Mat12 hess = Mat12::Zero();
};

// 1/2 (q - q_tilde)^T M (q - q_tilde).
BodyEnergy inertia_energy(const Vec6& q, const Vec6& q_tilde, const Mat6& mass_matrix);

// kappa * rest_area * ||A^T A - I||_F^2 over the linear slots of q.
BodyEnergy arap_energy(const Vec6& q, double kappa, double rest_area);

// Log barrier b(d) = -kappa (d - d_hat)^2 ln(d / d_hat) on (0, d_hat), zero
// beyond, C2 at d_hat. Throws for d <= 0.
struct BarrierValue {
    double value = 0.0;
    double dvalue = 0.0;  // db/dd
    double ddvalue = 0.0; // d2b/dd2
};
BarrierValue barrier_energy(double d, double d_hat, double kappa);

// Barrier of the point-edge distance, chained through the affine maps of the
// two bodies. Zero (inactive) when d >= d_hat.
PairEnergy contact_energy(const AffineBody& point_body, const Vec6& q_a,
                          const AffineBody& edge_body, const Vec6& q_b,
                          int point_index, int edge_index, double d_hat,
                          double kappa);

} // namespace dabd
