#include "dabd/body.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace dabd {

PolygonMoments loop_moments(const Loop& loop) {
    PolygonMoments m;
    const int n = static_cast<int>(loop.size());
    for (int i = 0; i < n; ++i) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[(i + 1) % n];
        const double cr = a.x() * b.y() - b.x() * a.y();
        m.area += cr / 2.0;
        m.sx += (a.x() + b.x()) * cr / 6.0;
        m.sy += (a.y() + b.y()) * cr / 6.0;
        m.sxx += (a.x() * a.x() + a.x() * b.x() + b.x() * b.x()) * cr / 12.0;
        m.syy += (a.y() * a.y() + a.y() * b.y() + b.y() * b.y()) * cr / 12.0;
        m.sxy += (a.x() * b.y() + 2.0 * a.x() * a.y() + 2.0 * b.x() * b.y() +
                  b.x() * a.y()) *
                 cr / 24.0;
    }
    return m;
}

PolygonMoments loops_moments(const std::vector<Loop>& loops) {
    PolygonMoments total;
    for (const Loop& loop : loops) {
        PolygonMoments m = loop_moments(loop);
        total.area += m.area;
        total.sx += m.sx;
        total.sy += m.sy;
        total.sxx += m.sxx;
        total.sxy += m.sxy;
        total.syy += m.syy;
    }
    return total;
}

int AffineBody::vertex_count() const {
    int n = 0;
    for (const Loop& loop : rest_loops) n += static_cast<int>(loop.size());
    return n;
}

Vec2 AffineBody::rest_vertex(int v) const {
    for (const Loop& loop : rest_loops) {
        const int n = static_cast<int>(loop.size());
        if (v < n) return loop[v];
        v -= n;
    }
    throw Error("AffineBody: vertex index out of range");
}

void AffineBody::rest_edge(int e, Vec2& a, Vec2& b) const {
    for (const Loop& loop : rest_loops) {
        const int n = static_cast<int>(loop.size());
        if (e < n) {
            a = loop[e];
            b = loop[(e + 1) % n];
            return;
        }
        e -= n;
    }
    throw Error("AffineBody: edge index out of range");
}

void build_mass_matrix(const std::vector<Loop>& loops, double density,
                       double& mass_out, Mat6& matrix_out) {
    const PolygonMoments m = loops_moments(loops);
    if (!(m.area > 0.0)) throw Error("build_mass_matrix: degenerate polygon (area <= 0)");
    mass_out = density * m.area;

    // M = rho * integral of J(xbar)^T J(xbar); two identical 3x3 blocks over
    // the per-coordinate DoF groups (p_x,A00,A01) and (p_y,A10,A11).
    Eigen::Matrix3d block;
    block << m.area, m.sx, m.sy, //
        m.sx, m.sxx, m.sxy,      //
        m.sy, m.sxy, m.syy;
    block *= density;

    const int gx[3] = {0, 2, 3};
    const int gy[3] = {1, 4, 5};
    matrix_out.setZero();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            matrix_out(gx[r], gx[c]) = block(r, c);
            matrix_out(gy[r], gy[c]) = block(r, c);
        }
    }
}

AffineBody make_affine_body(int id, const std::vector<Loop>& world_loops,
                            double density, bool is_static) {
    PolygonMoments m = loops_moments(world_loops);
    if (!(m.area > 0.0)) throw Error("make_affine_body: degenerate polygon (area <= 0)");
    const Vec2 centroid(m.sx / m.area, m.sy / m.area);

    AffineBody body;
    body.id = id;
    body.density = density;
    body.is_static = is_static;
    body.rest_loops = world_loops;
    for (Loop& loop : body.rest_loops)
        for (Vec2& v : loop) v -= centroid;

    build_mass_matrix(body.rest_loops, density, body.mass, body.mass_matrix);
    body.rest_area = m.area;
    body.q.setZero();
    body.q[0] = centroid.x();
    body.q[1] = centroid.y();
    body.q[2] = 1.0;
    body.q[5] = 1.0;
    return body;
}

Vec6 predicted_position(const Vec6& q, const Vec6& q_dot, const Vec6& f_ext,
                        double h, const Mat6& mass_matrix) {
    Eigen::LDLT<Mat6> ldlt(mass_matrix);
    const Vec6 d = ldlt.vectorD();
    if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * std::max(d.maxCoeff(), 1e-300))
        throw Error("predicted_position: singular mass matrix");
    return q + h * q_dot + h * h * ldlt.solve(f_ext);
}

Vec6 gravity_force(const AffineBody& body, const Vec2& gravity) {
    Vec6 f = Vec6::Zero();
    f[0] = body.mass * gravity.x();
    f[1] = body.mass * gravity.y();
    return f;
}

Aabb body_aabb(const AffineBody& body, const Vec6& q) {
    Aabb box;
    box.lo = Vec2(std::numeric_limits<double>::max(),
                  std::numeric_limits<double>::max());
    box.hi = -box.lo;
    for (const Loop& loop : body.rest_loops) {
        for (const Vec2& v : loop) {
            const Vec2 x = world_point(q, v);
            box.lo = box.lo.cwiseMin(x);
            box.hi = box.hi.cwiseMax(x);
        }
    }
    return box;
}

double max_vertex_speed(const AffineBody& body, const Vec6& q_dot) {
    double best = 0.0;
    for (const Loop& loop : body.rest_loops) {
        for (const Vec2& v : loop) {
            const Vec2 xdot(q_dot[0] + q_dot[2] * v.x() + q_dot[3] * v.y(),
                            q_dot[1] + q_dot[4] * v.x() + q_dot[5] * v.y());
            best = std::max(best, xdot.norm());
        }
    }
    return best;
}

} // namespace dabd
