#include "dabd/consensus.hpp"

#include "dabd/geometry.hpp"

#include <algorithm>

namespace dabd {

Vec6 consensus_update(const std::vector<Vec6>& q_plus_u,
                      const std::vector<double>& rho) {
    if (q_plus_u.empty() || q_plus_u.size() != rho.size())
        throw Error("consensus_update: need matching, non-empty replica lists");
    Vec6 num = Vec6::Zero();
    double den = 0.0;
    for (size_t i = 0; i < q_plus_u.size(); ++i) {
        if (!(rho[i] > 0.0)) throw Error("consensus_update: rho must be > 0");
        num += rho[i] * q_plus_u[i];
        den += rho[i];
    }
    return num / den;
}

Vec6 dual_update(const Vec6& u, const Vec6& q, const Vec6& z) {
    return u + q - z;
}

double primal_residual_inf(const std::vector<Vec6>& replica_q, const Vec6& z) {
    double best = 0.0;
    for (const Vec6& q : replica_q)
        best = std::max(best, (q - z).cwiseAbs().maxCoeff());
    return best;
}

double dual_residual_inf(const Vec6& z_new, const Vec6& z_prev) {
    return (z_new - z_prev).cwiseAbs().maxCoeff();
}

double init_rho(double mass, double beta) {
    if (!(mass > 0.0) || !(beta > 0.0))
        throw Error("init_rho: mass and beta must be > 0");
    return beta * mass;
}

double adapt_rho(double rho, double r_inf, double s_inf,
                 const AdaptParams& params, double rho0) {
    double next = rho;
    if (r_inf > params.mu * s_inf)
        next = params.tau * rho;
    else if (s_inf > params.mu * r_inf)
        next = rho / params.tau;
    return std::clamp(next, params.sigma_min * rho0, params.sigma_max * rho0);
}

ControlDecision check_stopping(double dq_inf_max, double r_inf, double s_inf,
                               const std::vector<double>& worker_tois, double h,
                               double scene_scale, double theta) {
    const double norm = h * scene_scale;
    ControlDecision decision;
    decision.end = dq_inf_max / norm < theta && r_inf / norm < theta &&
                   s_inf / norm < theta;
    for (double toi : worker_tois)
        if (toi != 1.0) decision.end = false;
    return decision;
}

double merge_ccd_gate(const std::vector<AffineBody>& bodies,
                      const Configs& q_local, const std::vector<int>& shared,
                      const std::vector<Vec6>& z,
                      const std::vector<int>& local_subset) {
    if (shared.size() != z.size())
        throw Error("merge_ccd_gate: shared/z size mismatch");
    Configs merged = q_local;
    for (size_t i = 0; i < shared.size(); ++i) merged[shared[i]] = z[i];
    return ccd_toi_scene(bodies, q_local, merged, local_subset);
}

void finalize_merge(Configs& q, Configs& q_dot, const Configs& q_start, double h,
                    const std::vector<int>& shared, const std::vector<Vec6>& z,
                    const std::vector<int>& dynamic_local, bool gate_passed) {
    if (!gate_passed)
        throw Error("finalize_merge: called without a passed merge gate");
    if (shared.size() != z.size())
        throw Error("finalize_merge: shared/z size mismatch");
    for (size_t i = 0; i < shared.size(); ++i) q[shared[i]] = z[i];
    for (int b : dynamic_local) q_dot[b] = (q[b] - q_start[b]) / h;
}

} // namespace dabd
