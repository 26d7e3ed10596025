#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dabd/energy.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace dabd;
using testing::Rng;

namespace {

Vec6 random_vec6(Rng& rng, double lo, double hi) {
    Vec6 v;
    for (int i = 0; i < 6; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

Mat6 random_spd(Rng& rng) {
    Mat6 a;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) a(r, c) = rng.uniform(-1.0, 1.0);
    return a * a.transpose() + 0.1 * Mat6::Identity();
}

} // namespace

TEST_CASE("inertia energy basics") {
    Rng rng(1);
    const Mat6 m = random_spd(rng);
    const Vec6 q = random_vec6(rng, -1, 1);

    SUBCASE("zero at the predicted position") {
        const BodyEnergy e = inertia_energy(q, q, m);
        CHECK(e.value == doctest::Approx(0.0));
        CHECK(e.grad.norm() == doctest::Approx(0.0));
    }
    SUBCASE("identity metric unit offset") {
        Vec6 qt = q;
        qt[0] -= 1.0;
        const BodyEnergy e = inertia_energy(q, qt, Mat6::Identity());
        CHECK(e.value == doctest::Approx(0.5));
    }
    SUBCASE("gradient and Hessian match finite differences") {
        const Vec6 qt = random_vec6(rng, -1, 1);
        const BodyEnergy e = inertia_energy(q, qt, m);
        auto f = [&](const VecX& x) {
            return inertia_energy(Vec6(x), qt, m).value;
        };
        CHECK(testing::gradient_fd_error(f, q, e.grad, 1e-5) < 1e-4);
        auto g = [&](const VecX& x) -> VecX {
            return inertia_energy(Vec6(x), qt, m).grad;
        };
        CHECK(testing::hessian_fd_error(g, q, e.hess, 1e-5) < 1e-3);
    }
}

TEST_CASE("arap energy basics") {
    Vec6 q = Vec6::Zero();
    q[2] = 1.0;
    q[5] = 1.0;

    SUBCASE("identity and rotations are stress free") {
        CHECK(arap_energy(q, 1.0, 1.0).value == doctest::Approx(0.0));
        CHECK(arap_energy(q, 1.0, 1.0).grad.norm() == doctest::Approx(0.0));
        for (double angle : {0.3, 1.2, -2.5}) {
            Vec6 qr = Vec6::Zero();
            qr[2] = std::cos(angle);
            qr[3] = -std::sin(angle);
            qr[4] = std::sin(angle);
            qr[5] = std::cos(angle);
            CHECK(arap_energy(qr, 1.0, 1.0).value == doctest::Approx(0.0));
        }
    }
    SUBCASE("uniform scale by 2") {
        Vec6 qs = Vec6::Zero();
        qs[2] = 2.0;
        qs[5] = 2.0;
        // ||(4-1) I||_F^2 = 2 * 9 = 18
        CHECK(arap_energy(qs, 1.0, 1.0).value == doctest::Approx(18.0));
    }
    SUBCASE("rigid-motion invariance: q -> (R A, any p)") {
        Rng rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            Vec6 qa = random_vec6(rng, -2, 2);
            const double e0 = arap_energy(qa, 2.5, 0.7).value;
            const double angle = rng.uniform(0, 2 * M_PI);
            Mat2 r;
            r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
            const Mat2 ra = r * linear_part(qa);
            Vec6 qb;
            qb << rng.uniform(-5, 5), rng.uniform(-5, 5), ra(0, 0), ra(0, 1),
                ra(1, 0), ra(1, 1);
            CHECK(arap_energy(qb, 2.5, 0.7).value == doctest::Approx(e0).epsilon(1e-10));
        }
    }
    SUBCASE("gradient and Hessian match finite differences") {
        Rng rng(4);
        for (int trial = 0; trial < 50; ++trial) {
            const Vec6 qa = random_vec6(rng, -1.5, 1.5);
            const BodyEnergy e = arap_energy(qa, 3.0, 0.4);
            auto f = [&](const VecX& x) { return arap_energy(Vec6(x), 3.0, 0.4).value; };
            CHECK(testing::gradient_fd_error(f, qa, e.grad, 1e-5) < 1e-4);
            auto g = [&](const VecX& x) -> VecX { return arap_energy(Vec6(x), 3.0, 0.4).grad; };
            CHECK(testing::hessian_fd_error(g, qa, e.hess, 1e-5) < 1e-3);
        }
    }
}

TEST_CASE("barrier function") {
    const double d_hat = 1.0;

    SUBCASE("inactive at and beyond d_hat") {
        CHECK(barrier_energy(d_hat, d_hat, 1.0).value == 0.0);
        CHECK(barrier_energy(2 * d_hat, d_hat, 1.0).value == 0.0);
        CHECK(barrier_energy(2 * d_hat, d_hat, 1.0).dvalue == 0.0);
    }
    SUBCASE("analytic value at d_hat/2") {
        const BarrierValue b = barrier_energy(0.5, 1.0, 1.0);
        CHECK(b.value == doctest::Approx(0.25 * std::log(2.0)));
    }
    SUBCASE("diverges toward zero distance") {
        double prev = 0.0;
        for (double d : {1e-2, 1e-4, 1e-8, 1e-16, 1e-32}) {
            const double v = barrier_energy(d, d_hat, 1.0).value;
            CHECK(v > prev);
            prev = v;
        }
        CHECK(prev > 70.0); // ~ kappa * d_hat^2 * 32 ln 10
    }
    SUBCASE("domain violation throws") {
        CHECK_THROWS_AS(barrier_energy(0.0, d_hat, 1.0), Error);
        CHECK_THROWS_AS(barrier_energy(-0.1, d_hat, 1.0), Error);
    }
    SUBCASE("C2 at the activation distance") {
        const double eps = 1e-7;
        const BarrierValue b = barrier_energy(d_hat - eps, d_hat, 1.0);
        CHECK(std::abs(b.value) < 1e-8);
        CHECK(std::abs(b.dvalue) < 1e-6);
        CHECK(std::abs(b.ddvalue) < 1e-5);
    }
    SUBCASE("derivatives match finite differences") {
        Rng rng(5);
        for (int trial = 0; trial < 50; ++trial) {
            const double d = rng.uniform(0.05, 0.95);
            const BarrierValue b = barrier_energy(d, d_hat, 2.0);
            VecX x(1);
            x[0] = d;
            auto f = [&](const VecX& v) { return barrier_energy(v[0], d_hat, 2.0).value; };
            VecX grad(1);
            grad[0] = b.dvalue;
            CHECK(testing::gradient_fd_error(f, x, grad, 1e-6) < 1e-4);
            auto g = [&](const VecX& v) -> VecX {
                VecX out(1);
                out[0] = barrier_energy(v[0], d_hat, 2.0).dvalue;
                return out;
            };
            Eigen::MatrixXd h(1, 1);
            h(0, 0) = b.ddvalue;
            CHECK(testing::hessian_fd_error(g, x, h, 1e-6) < 1e-3);
        }
    }
}

TEST_CASE("contact pair energy matches finite differences") {
    Rng rng(6);
    const Loop square = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
    const AffineBody pa = make_affine_body(0, {square}, 1.0);
    const AffineBody pb = make_affine_body(1, {square}, 1.0);
    const double d_hat = 0.8;

    int checked = 0;
    for (int trial = 0; trial < 200 && checked < 60; ++trial) {
        Vec6 qa = pa.q, qb = pb.q;
        qa[0] += rng.uniform(-0.2, 0.2);
        qa[1] += rng.uniform(0.9, 1.4); // above, near the activation band
        for (int i = 2; i < 6; ++i) {
            qa[i] += rng.uniform(-0.05, 0.05);
            qb[i] += rng.uniform(-0.05, 0.05);
        }
        const PairEnergy e = contact_energy(pa, qa, pb, qb, 0, 2, d_hat, 10.0);
        if (e.value <= 0.0) continue;
        ++checked;

        VecX x(12);
        x << qa, qb;
        auto f = [&](const VecX& v) {
            return contact_energy(pa, Vec6(v.head<6>()), pb, Vec6(v.tail<6>()), 0, 2,
                                  d_hat, 10.0)
                .value;
        };
        CHECK(testing::gradient_fd_error(f, x, e.grad, 1e-6) < 1e-4);
        auto g = [&](const VecX& v) -> VecX {
            return contact_energy(pa, Vec6(v.head<6>()), pb, Vec6(v.tail<6>()), 0, 2,
                                  d_hat, 10.0)
                .grad;
        };
        CHECK(testing::hessian_fd_error(g, x, e.hess, 1e-6) < 1e-3);
    }
    CHECK(checked >= 30);
}
