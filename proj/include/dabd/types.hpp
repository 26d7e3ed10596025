#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dabd {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using VecX = Eigen::VectorXd;

// Body DoF layout: q = [p_x, p_y, A00, A01, A10, A11].
inline Mat2 linear_part(const Vec6& q) {
    Mat2 a;
    a << q[2], q[3], q[4], q[5];
    return a;
}

inline Vec2 translation_part(const Vec6& q) { return Vec2(q[0], q[1]); }

// World position of rest point xbar under configuration q.
inline Vec2 world_point(const Vec6& q, const Vec2& xbar) {
    return linear_part(q) * xbar + translation_part(q);
}

// Constant 2x6 Jacobian of world_point w.r.t. q.
inline Eigen::Matrix<double, 2, 6> point_jacobian(const Vec2& xbar) {
    Eigen::Matrix<double, 2, 6> j = Eigen::Matrix<double, 2, 6>::Zero();
    j(0, 0) = 1.0;
    j(1, 1) = 1.0;
    j(0, 2) = xbar.x();
    j(0, 3) = xbar.y();
    j(1, 4) = xbar.x();
    j(1, 5) = xbar.y();
    return j;
}

class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dabd
