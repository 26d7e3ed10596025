// Acceptance suite: one pass/fail line per criterion, exit code = failures.
//
// Every tolerance is pinned here. Oracles come from tests/support; the runs
// exercise the full controller/worker stack.

#include "dabd/experiments.hpp"
#include "dabd/newton.hpp"
#include "support/oracles.hpp"
#include "support/replay.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>

using namespace dabd;
using testing::Rng;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d. %-24s %s\n", pass ? "PASS" : "FAIL", index, name,
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

bool bitwise_equal(const Configs& a, const Configs& b, double* max_diff) {
    bool equal = true;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(a[i].data(), b[i].data(), 6 * sizeof(double)) != 0)
            equal = false;
        *max_diff = std::max(*max_diff, (a[i] - b[i]).cwiseAbs().maxCoeff());
    }
    return equal;
}

// --- 1. degenerate equivalence ---------------------------------------------
void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    SceneData scene = make_scenario("funnel-analog");
    scene.frames = 100;
    const Trajectory ref = run_reference(scene);
    RunOptions opts;
    opts.workers = 1;
    const RunResult run = run_distributed(scene, opts);
    const double elapsed = seconds_since(t0);

    bool equal = run.trajectory.q.size() == ref.q.size();
    double max_diff = 0.0;
    for (size_t f = 0; equal && f < ref.q.size(); ++f) {
        equal &= bitwise_equal(run.trajectory.q[f], ref.q[f], &max_diff);
        equal &= bitwise_equal(run.trajectory.q_dot[f], ref.q_dot[f], &max_diff);
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "N=1 vs reference over 100 frames: %s (max |diff| = %.3g), %.1fs "
                  "(< 30s: %s)",
                  equal ? "bit-exact" : "MISMATCH", max_diff, elapsed,
                  elapsed < 30.0 ? "yes" : "no");
    report(1, "degenerate equivalence", equal && elapsed < 30.0, detail);
}

// --- 2. consensus convergence ----------------------------------------------
void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    SceneData scene = make_scenario("funnel-analog");
    scene.frames = 100;
    const Trajectory ref = run_reference(scene);
    RunOptions opts;
    opts.workers = 2;
    opts.reference = &ref;
    const RunResult run = run_distributed(scene, opts);
    const double elapsed = seconds_since(t0);

    const double budget =
        1e-6 * scene.params.scene_scale * scene.params.scene_scale;
    double max_mse = 0.0;
    int commits = 0;
    for (const MetricsRow& row : run.metrics) {
        if (!row.commit_row) continue;
        ++commits;
        if (!std::isnan(row.mse)) max_mse = std::max(max_mse, row.mse);
    }
    double mean_k = 0.0;
    for (const FrameStats& f : run.frames) mean_k += f.admm_iterations;
    mean_k /= std::max<size_t>(1, run.frames.size());

    const bool pass =
        commits == 100 && max_mse < budget && mean_k <= 100.0 && elapsed < 300.0;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "2-worker funnel: max commit MSE %.3g < %.3g: %s; mean ADMM "
                  "%.1f <= 100: %s; %.0fs (< 300s: %s)",
                  max_mse, budget, max_mse < budget ? "yes" : "NO", mean_k,
                  mean_k <= 100 ? "yes" : "NO", elapsed,
                  elapsed < 300 ? "yes" : "no");
    report(2, "consensus convergence", pass, detail);
}

// --- 3. penetration-free guarantee -----------------------------------------
void criterion_3() {
    const auto rows = run_audit("", 300);
    int violations = 0;
    int short_runs = 0;
    for (const AuditRow& row : rows) {
        violations += row.violations;
        if (row.frames < 300) ++short_runs;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "%zu scenarios x 300 frames: %d interpenetrating commits, "
                  "%d short runs (zero tolerance)",
                  rows.size(), violations, short_runs);
    report(3, "penetration-free frames", violations == 0 && short_runs == 0,
           detail);
}

// --- 4. beta robustness ------------------------------------------------------
void criterion_4() {
    const auto rows = run_beta_sweep("", 60);
    bool pass = true;
    double worst_ratio = 0.0;
    for (double density : {10.0, 100.0, 1000.0, 10000.0, 100000.0}) {
        double best = 1e300, at_one = 0.0;
        for (const BetaSweepRow& row : rows) {
            if (row.density != density) continue;
            best = std::min(best, row.mean_admm_iterations);
            if (row.beta == 1.0) at_one = row.mean_admm_iterations;
        }
        worst_ratio = std::max(worst_ratio, at_one / best);
        if (at_one > 2.0 * best) pass = false;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "beta=1 vs best over 5 densities x 5 betas: worst ratio %.2f "
                  "(<= 2 required)",
                  worst_ratio);
    report(4, "beta robustness", pass, detail);
}

// --- 5. adaptation ablation ---------------------------------------------------
void criterion_5() {
    const auto rows = run_ablation("", 60);
    int wins = 0;
    double worst = 1.0;
    for (const AblationRow& row : rows) {
        if (row.reduction >= 0.10) ++wins;
        worst = std::min(worst, row.reduction);
    }
    const bool pass = wins >= 4 && worst >= -0.05;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  ">=10%% reduction on %d/5 densities (need >= 4); worst %.1f%% "
                  "(need >= -5%%)",
                  wins, worst * 100.0);
    report(5, "adaptation ablation", pass, detail);
}

// --- 6. blocked merge ---------------------------------------------------------
void criterion_6() {
    const SceneData scene = make_scenario("blocked-merge");
    RunOptions opts;
    opts.workers = 2;
    opts.audit = true;
    const RunResult run = run_distributed(scene, opts);
    const bool failed_at_h0 = !run.frames.empty() && run.frames[0].attempts >= 2;
    const bool committed_halved =
        !run.frames.empty() && run.frames[0].h < scene.params.h;
    const bool clean = run.intersection_violations == 0;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "frame 0: %d attempt(s), committed at h=%.4g (h0=%.4g); "
                  "intersection-free: %s",
                  run.frames.empty() ? 0 : run.frames[0].attempts,
                  run.frames.empty() ? 0.0 : run.frames[0].h, scene.params.h,
                  clean ? "yes" : "NO");
    report(6, "blocked-merge corner case",
           failed_at_h0 && committed_halved && clean, detail);
}

// --- 7. numerical kernels -----------------------------------------------------
void criterion_7() {
    Rng rng(1007);
    int fd_failures = 0;
    const Loop square = {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}};
    const AffineBody pa = make_affine_body(0, {square}, 1.0);
    const AffineBody pb = make_affine_body(1, {square}, 1.0);

    auto rand_vec6 = [&rng](double lo, double hi) {
        Vec6 v;
        for (int i = 0; i < 6; ++i) v[i] = rng.uniform(lo, hi);
        return v;
    };

    int trials = 0;
    while (trials < 200) {
        switch (trials % 3) {
        case 0: { // inertia
            Vec6 q = rand_vec6(-1, 1), qt = rand_vec6(-1, 1);
            Mat6 a;
            for (int r = 0; r < 6; ++r)
                for (int c = 0; c < 6; ++c) a(r, c) = rng.uniform(-1, 1);
            const Mat6 m = a * a.transpose() + 0.1 * Mat6::Identity();
            const BodyEnergy e = inertia_energy(q, qt, m);
            auto f = [&](const VecX& x) { return inertia_energy(Vec6(x), qt, m).value; };
            if (testing::gradient_fd_error(f, q, e.grad, 1e-5) >= 1e-4) ++fd_failures;
            break;
        }
        case 1: { // arap
            const Vec6 q = rand_vec6(-1.5, 1.5);
            const BodyEnergy e = arap_energy(q, 2.0, 0.3);
            auto f = [](const VecX& x) { return arap_energy(Vec6(x), 2.0, 0.3).value; };
            auto g = [](const VecX& x) -> VecX { return arap_energy(Vec6(x), 2.0, 0.3).grad; };
            if (testing::gradient_fd_error(f, q, e.grad, 1e-5) >= 1e-4) ++fd_failures;
            if (testing::hessian_fd_error(g, q, e.hess, 1e-5) >= 1e-3) ++fd_failures;
            break;
        }
        case 2: { // contact barrier chain
            Vec6 qa = pa.q, qb = pb.q;
            qa[0] += rng.uniform(-0.2, 0.2);
            qa[1] += rng.uniform(0.9, 1.4);
            for (int i = 2; i < 6; ++i) qa[i] += rng.uniform(-0.05, 0.05);
            const PairEnergy e = contact_energy(pa, qa, pb, qb, 0, 2, 0.8, 10.0);
            if (e.value <= 0.0) continue; // must hit the active band
            VecX x(12);
            x << qa, qb;
            auto f = [&](const VecX& v) {
                return contact_energy(pa, Vec6(v.head<6>()), pb, Vec6(v.tail<6>()),
                                      0, 2, 0.8, 10.0)
                    .value;
            };
            if (testing::gradient_fd_error(f, x, e.grad, 1e-6) >= 1e-4) ++fd_failures;
            break;
        }
        }
        ++trials;
    }

    int spectral_failures = 0;
    for (int i = 0; i < 100; ++i) {
        const Loop poly = testing::random_convex_polygon(rng, 3, 12, 0.05, 1.0);
        const AffineBody body = make_affine_body(i, {poly}, rng.uniform(0.1, 1e4));
        if (testing::power_iteration_lambda_max(body.mass_matrix) >
            body.mass * (1.0 + 1e-10))
            ++spectral_failures;
    }

    int ccd_failures = 0, collisions = 0;
    for (int trial = 0; trial < 200 && collisions < 50; ++trial) {
        std::vector<AffineBody> bodies;
        for (int i = 0; i < 2; ++i) {
            Loop poly = testing::random_convex_polygon(rng, 3, 7, 0.2, 0.5);
            const Vec2 c(i == 0 ? rng.uniform(-2.0, -1.2) : rng.uniform(1.2, 2.0),
                         rng.uniform(-0.4, 0.4));
            for (Vec2& v : poly) v += c;
            bodies.push_back(make_affine_body(i, {poly}, 1.0));
        }
        Configs start = {bodies[0].q, bodies[1].q};
        if (intersection_test(bodies, start)) continue;
        Configs end = start;
        end[0][0] += rng.uniform(1.0, 3.5);
        end[1][0] -= rng.uniform(1.0, 3.5);
        end[0][1] += rng.uniform(-0.5, 0.5);
        for (int i = 2; i < 6; ++i) end[0][i] += rng.uniform(-0.2, 0.2);

        const double toi = ccd_toi_scene(bodies, start, end);
        const double oracle = testing::sampled_impact_time(bodies, start, end, 10000);
        if (oracle < 1.0) {
            ++collisions;
            if (!(toi <= oracle + 1e-9 && toi >= 0.9 * (oracle - 1e-3)))
                ++ccd_failures;
        }
    }

    const bool pass =
        fd_failures == 0 && spectral_failures == 0 && ccd_failures == 0 &&
        collisions >= 50;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "FD checks: %d/200 failed; lambda_max<=m: %d/100 failed; CCD vs "
                  "oracle: %d/%d failed",
                  fd_failures, spectral_failures, ccd_failures, collisions);
    report(7, "numerical kernels", pass, detail);
}

// --- 8. consensus math oracles ------------------------------------------------
void criterion_8() {
    Rng rng(1008);
    auto rand_vec6 = [&rng](double s) {
        Vec6 v;
        for (int i = 0; i < 6; ++i) v[i] = rng.uniform(-s, s);
        return v;
    };

    // Weighted-mean optimality against golden-section line minimization.
    double worst_gap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.uniform_int(1, 5);
        std::vector<Vec6> qu(n);
        std::vector<double> rho(n);
        for (int i = 0; i < n; ++i) {
            qu[i] = rand_vec6(3.0);
            rho[i] = rng.uniform(0.1, 10.0);
        }
        const Vec6 z = consensus_update(qu, rho);
        auto value = [&](const Vec6& x) {
            double total = 0.0;
            for (int i = 0; i < n; ++i)
                total += 0.5 * rho[i] * (x - qu[i]).squaredNorm();
            return total;
        };
        const Vec6 dir = rand_vec6(1.0).normalized();
        const double t = testing::golden_section_min(
            [&](double s) { return value(z + s * dir); }, -2.0, 2.0, 1e-12);
        worst_gap = std::max(worst_gap, value(z + t * dir) < value(z)
                                            ? value(z) - value(z + t * dir)
                                            : 0.0);
    }

    // Objective consistency on agreeing replicas.
    SceneData scene = make_scenario("funnel-analog");
    scene.frames = 1;
    const Configs q = scene.initial_configs();
    Configs q_eval = q;
    for (size_t b = 0; b < scene.bodies.size(); ++b) {
        if (scene.bodies[b].is_static) continue;
        q_eval[b][1] -= 0.018; // activate contacts, same on every replica
        q_eval[b][3] += rng.uniform(-0.002, 0.002);
    }
    const PartitionLayout layout =
        partition_scene(scene.bodies, q, scene.planes, 2, scene.params.h,
                        scene.w_min);
    auto q_tilde_of = [&](int b) {
        return scene.bodies[b].is_static
                   ? q[b]
                   : predicted_position(q[b], scene.bodies[b].q_dot,
                                        gravity_force(scene.bodies[b],
                                                      scene.params.gravity),
                                        scene.params.h,
                                        scene.bodies[b].mass_matrix);
    };
    double replicated_sum = 0.0;
    for (int i = 0; i < 2; ++i) {
        std::vector<double> kappa;
        std::vector<Vec6> qt;
        for (int b : layout.local_bodies[i]) {
            kappa.push_back(layout.kappa_b(b));
            qt.push_back(q_tilde_of(b));
        }
        replicated_sum += LocalObjective::assemble(scene.bodies,
                                                   layout.local_bodies[i], kappa,
                                                   qt, {}, layout.holder_mask,
                                                   scene.params)
                              .value(q_eval, false);
    }
    std::vector<int> all;
    std::vector<double> kappa1;
    std::vector<Vec6> qt;
    for (size_t b = 0; b < scene.bodies.size(); ++b) {
        all.push_back(static_cast<int>(b));
        kappa1.push_back(1.0);
        qt.push_back(q_tilde_of(static_cast<int>(b)));
    }
    const double single = LocalObjective::assemble(scene.bodies, all, kappa1, qt,
                                                   {}, {}, scene.params)
                              .value(q_eval, false);
    const double rel_err = std::abs(replicated_sum - single) / std::abs(single);

    // Residual maxima against brute-force enumeration.
    double residual_err = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = rng.uniform_int(2, 5);
        std::vector<Vec6> replicas(n);
        for (Vec6& r : replicas) r = rand_vec6(2.0);
        const Vec6 z = rand_vec6(2.0), z_old = rand_vec6(2.0);
        double brute_r = 0.0;
        for (const Vec6& r : replicas)
            for (int c = 0; c < 6; ++c)
                brute_r = std::max(brute_r, std::abs(r[c] - z[c]));
        double brute_s = 0.0;
        for (int c = 0; c < 6; ++c)
            brute_s = std::max(brute_s, std::abs(z[c] - z_old[c]));
        residual_err = std::max(
            residual_err, std::abs(primal_residual_inf(replicas, z) - brute_r));
        residual_err = std::max(
            residual_err, std::abs(dual_residual_inf(z, z_old) - brute_s));
    }

    const bool pass = worst_gap < 1e-9 && rel_err < 1e-10 && residual_err == 0.0;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "z-update optimality gap %.2g (< 1e-9); sum F_i rel err %.2g "
                  "(< 1e-10); residual max err %.2g",
                  worst_gap, rel_err, residual_err);
    report(8, "consensus math oracles", pass, detail);
}

// --- 9. protocol determinism ---------------------------------------------------
void criterion_9() {
    SceneData scene = make_scenario("funnel-analog");
    scene.frames = 50;
    RunOptions inproc;
    inproc.workers = 2;
    const RunResult a = run_distributed(scene, inproc);
    RunOptions tcp;
    tcp.workers = 2;
    tcp.transport = TransportKind::Tcp;
    const RunResult b = run_distributed(scene, tcp);

    bool equal = a.trajectory.q.size() == b.trajectory.q.size();
    double max_diff = 0.0;
    for (size_t f = 0; equal && f < a.trajectory.q.size(); ++f) {
        equal &= bitwise_equal(a.trajectory.q[f], b.trajectory.q[f], &max_diff);
        equal &=
            bitwise_equal(a.trajectory.q_dot[f], b.trajectory.q_dot[f], &max_diff);
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "inproc vs tcp over 50 frames: %s (max |diff| = %.3g, need <= "
                  "1e-12)",
                  equal ? "bit-exact" : "DIFFERENT", max_diff);
    report(9, "protocol determinism", equal && max_diff <= 1e-12, detail);
}

// --- 10. load balancer ----------------------------------------------------------
void criterion_10() {
    const double extent = 4.0;
    Balancer::Options opts;
    opts.kp = 0.1 * extent;
    opts.kd = 0.05 * extent;
    Balancer balancer(2, opts);
    std::vector<Plane> planes = {Plane{{1.0, 0.0}, {-1.0, 0.0}}};
    const double w = 0.2;

    int settled_at = -1;
    bool stays_settled = true;
    bool factor_ok = true;
    for (int frame = 0; frame < 50; ++frame) {
        const double tau0 = planes[0].point.x();
        const double tau1 = extent - planes[0].point.x();
        balancer.update({tau0, tau1}, planes, w);
        const double t = imbalance_metric(planes[0].point.x(),
                                          extent - planes[0].point.x());
        if (settled_at < 0 && std::abs(t) < 0.05) settled_at = frame;
        if (settled_at >= 0) {
            if (std::abs(t) >= 0.05) stays_settled = false;
            if (balance_factor({planes[0].point.x(),
                                extent - planes[0].point.x()}) < 0.9)
                factor_ok = false;
        }
    }

    // Exact fixed point at T = 0.
    Balancer fixed(2, opts);
    std::vector<Plane> balanced = {Plane{{2.0, 0.0}, {-1.0, 0.0}}};
    bool fixed_point = true;
    for (int frame = 0; frame < 5; ++frame) {
        const auto dp = fixed.update({1.0, 1.0}, balanced, w);
        if (dp[0] != 0.0 || balanced[0].point.x() != 2.0) fixed_point = false;
    }

    const bool pass =
        settled_at >= 0 && settled_at < 50 && stays_settled && factor_ok && fixed_point;
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "|T| < 0.05 after %d frames (< 50), stays settled: %s, factor "
                  ">= 0.9: %s, exact fixed point: %s",
                  settled_at, stays_settled ? "yes" : "NO",
                  factor_ok ? "yes" : "NO", fixed_point ? "yes" : "NO");
    report(10, "load balancer", pass, detail);
}

// --- 11. scaling smoke -----------------------------------------------------------
void criterion_11() {
    const auto rows = run_scaling("", 60);
    double w1 = 0.0, w2 = 0.0, k1 = 0.0, k2 = 0.0, k4 = 0.0;
    for (const ScalingRow& row : rows) {
        if (row.workers == 1) {
            w1 = row.mean_newton_body_workload;
            k1 = row.mean_admm_iterations;
        }
        if (row.workers == 2) {
            w2 = row.mean_newton_body_workload;
            k2 = row.mean_admm_iterations;
        }
        if (row.workers == 4) k4 = row.mean_admm_iterations;
    }
    const bool pass = w1 > 0.0 && w2 <= 0.7 * w1;
    char detail[200];
    std::snprintf(detail, sizeof(detail),
                  "max per-worker workload N=2/N=1 = %.2f (<= 0.7); ADMM "
                  "iterations N=1/2/4: %.1f/%.1f/%.1f (reported)",
                  w2 / w1, k1, k2, k4);
    report(11, "scaling smoke", pass, detail);
}

} // namespace

int main() {
    std::printf("acceptance suite: distributed affine-body dynamics\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    std::printf("%d/11 criteria passed\n", 11 - g_failures);
    return g_failures;
}
