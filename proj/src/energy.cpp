#include "dabd/energy.hpp"

#include <cmath>

namespace dabd {

BodyEnergy inertia_energy(const Vec6& q, const Vec6& q_tilde, const Mat6& mass_matrix) {
    BodyEnergy out;
    const Vec6 diff = q - q_tilde;
    const Vec6 mdiff = mass_matrix * diff;
    out.value = 0.5 * diff.dot(mdiff);
    out.grad = mdiff;
    out.hess = mass_matrix;
    return out;
}

BodyEnergy arap_energy(const Vec6& q, double kappa, double rest_area) {
    BodyEnergy out;
    const Mat2 a = linear_part(q);
    const Mat2 g = a.transpose() * a - Mat2::Identity();
    const double w = kappa * rest_area;
    out.value = w * g.squaredNorm();

    // d/dA ||A^T A - I||_F^2 = 4 A (A^T A - I)
    const Mat2 dA = 4.0 * w * (a * g);
    out.grad[2] = dA(0, 0);
    out.grad[3] = dA(0, 1);
    out.grad[4] = dA(1, 0);
    out.grad[5] = dA(1, 1);

    // H[(k,l),(i,j)] = 4 (delta_ik G_jl + A_il A_kj + delta_jl (A A^T)_ik)
    const Mat2 aat = a * a.transpose();
    const int slot[2][2] = {{2, 3}, {4, 5}};
    for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    double v = 0.0;
                    if (i == k) v += g(j, l);
                    v += a(i, l) * a(k, j);
                    if (j == l) v += aat(i, k);
                    out.hess(slot[k][l], slot[i][j]) = 4.0 * w * v;
                }
            }
        }
    }
    return out;
}

BarrierValue barrier_energy(double d, double d_hat, double kappa) {
    if (d <= 0.0) throw Error("barrier_energy: d <= 0 (barrier domain violated)");
    BarrierValue out;
    if (d >= d_hat) return out;
    const double gap = d - d_hat;
    const double lg = std::log(d / d_hat);
    out.value = -kappa * gap * gap * lg;
    out.dvalue = -kappa * (2.0 * gap * lg + gap * gap / d);
    out.ddvalue =
        -kappa * (2.0 * lg + 2.0 * gap / d + gap * (d + d_hat) / (d * d));
    return out;
}

PairEnergy contact_energy(const AffineBody& point_body, const Vec6& q_a,
                          const AffineBody& edge_body, const Vec6& q_b,
                          int point_index, int edge_index, double d_hat,
                          double kappa) {
    PairEnergy out;

    const Vec2 rv = point_body.rest_vertex(point_index);
    Vec2 r0, r1;
    edge_body.rest_edge(edge_index, r0, r1);

    const Vec2 p = world_point(q_a, rv);
    const Vec2 e0 = world_point(q_b, r0);
    const Vec2 e1 = world_point(q_b, r1);

    const PointEdgeDistance dist = point_edge_distance(p, e0, e1);
    if (dist.d >= d_hat) return out;

    const BarrierValue b = barrier_energy(dist.d, d_hat, kappa);
    out.value = b.value;

    // World coordinates (p, e0, e1) as a function of (q_a, q_b): 6x12.
    Eigen::Matrix<double, 6, 12> t = Eigen::Matrix<double, 6, 12>::Zero();
    t.block<2, 6>(0, 0) = point_jacobian(rv);
    t.block<2, 6>(2, 6) = point_jacobian(r0);
    t.block<2, 6>(4, 6) = point_jacobian(r1);

    const Vec12 gd = t.transpose() * dist.grad;
    out.grad = b.dvalue * gd;
    out.hess = b.ddvalue * (gd * gd.transpose()) +
               b.dvalue * (t.transpose() * dist.hess * t);
    return out;
}

} // namespace dabd
