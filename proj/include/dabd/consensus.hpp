#pragma once

#include "dabd/params.hpp"
#include "dabd/partition.hpp"

#include <vector>

namespace dabd {

// Closed-form minimizer of the consensus step: the penalty-weighted mean of
// the replicas' (q + u). Inputs must be ordered by ascending worker id so
// every holder computes a bitwise identical result.
Vec6 consensus_update(const std::vector<Vec6>& q_plus_u,
                      const std::vector<double>& rho);

// Scaled dual ascent: u' = u + q - z.
Vec6 dual_update(const Vec6& u, const Vec6& q, const Vec6& z);

// Per-body residual norms: r_b = max over replicas of ||q_{i,b} - z_b||_inf,
// s_b = ||z_b^{k+1} - z_b^k||_inf. Global maxima are taken over bodies.
double primal_residual_inf(const std::vector<Vec6>& replica_q, const Vec6& z);
double dual_residual_inf(const Vec6& z_new, const Vec6& z_prev);

// Mass-aware penalty initialization rho0 = beta * m_b.
double init_rho(double mass, double beta);

// Residual-driven multiplicative update, clamped to
// [sigma_min rho0, sigma_max rho0]. Applied per body, uniformly across
// replicas (all holders evaluate identical inputs).
double adapt_rho(double rho, double r_inf, double s_inf,
                 const AdaptParams& params, double rho0);

// Global stopping rule: end iff all three h*l-normalized metrics are
// strictly below theta AND every worker reports a clean merge (TOI == 1).
struct ControlDecision {
    bool end = false;
};
ControlDecision check_stopping(double dq_inf_max, double r_inf, double s_inf,
                               const std::vector<double>& worker_tois, double h,
                               double scene_scale, double theta);

// CCD over the trajectory from the worker's local state toward the candidate
// merged state (shared blocks replaced by z). The gate passes iff the result
// is exactly 1.
double merge_ccd_gate(const std::vector<AffineBody>& bodies,
                      const Configs& q_local, const std::vector<int>& shared,
                      const std::vector<Vec6>& z,
                      const std::vector<int>& local_subset);

// Commits a frame on one worker: replaces shared blocks with z and updates
// velocities by the backward difference (q - q_start) / h over the given
// dynamic bodies. Call only after the gate passed on every worker.
void finalize_merge(Configs& q, Configs& q_dot, const Configs& q_start, double h,
                    const std::vector<int>& shared, const std::vector<Vec6>& z,
                    const std::vector<int>& dynamic_local, bool gate_passed);

// Frame-level adaptive time stepping: halve on failure (at most
// `max_halvings` per frame attempt), restore by doubling after a committed
// frame, capped at the original step.
class TimestepController {
  public:
    TimestepController(double h0, int max_halvings = 4)
        : h0_(h0), h_(h0), max_halvings_(max_halvings) {}

    double h() const { return h_; }
    double original() const { return h0_; }
    int halvings() const { return halvings_; }

    // Returns the new (halved) step. Throws once the budget is exhausted.
    double on_frame_failed() {
        if (halvings_ >= max_halvings_)
            throw Error("adaptive_timestep: frame failed after max halvings");
        h_ /= 2.0;
        ++halvings_;
        return h_;
    }
    void on_frame_committed() {
        h_ = std::min(h0_, 2.0 * h_);
        halvings_ = 0;
    }

  private:
    double h0_;
    double h_;
    int halvings_ = 0;
    int max_halvings_;
};

} // namespace dabd
