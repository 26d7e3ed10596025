#pragma once

#include "dabd/energy.hpp"
#include "dabd/params.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <vector>

namespace dabd {

// Consensus anchoring of one shared body: (rho/2) ||q - z + u||^2.
struct SharedAnchor {
    int body = -1; // global body index
    Vec6 z = Vec6::Zero();
    Vec6 u = Vec6::Zero();
    double rho = 0.0;
};

// The per-worker objective: kappa-weighted inertia + ARAP + contact barriers
// over the local body set, plus consensus anchors on shared bodies. With all
// rho = 0 this is exactly the replication-weighted local slice of the global
// incremental potential.
class LocalObjective {
  public:
    // `local` lists the body indices present on this worker (internal,
    // shared, static), `kappa_b` the replica count per local dynamic body
    // (aligned with `local`), `q_tilde` the predicted positions (ignored for
    // static bodies). `holder_mask[b]` is the bitmask of workers holding
    // body b, used for contact weights kappa_c; empty means single-domain
    // (all kappa_c = 1). Throws if a shared body lacks its anchor or an
    // anchor targets a body that is not local/dynamic.
    static LocalObjective assemble(const std::vector<AffineBody>& bodies,
                                   std::vector<int> local,
                                   std::vector<double> kappa_b,
                                   std::vector<Vec6> q_tilde,
                                   std::vector<SharedAnchor> anchors,
                                   std::vector<uint32_t> holder_mask,
                                   const SimParams& params);

    // Objective value at q (global config array). Anchors can be excluded to
    // evaluate the bare F_i of the consensus decomposition.
    double value(const Configs& q, bool with_anchors = true) const;

    // Value, gradient and Hessian over the local dynamic DoF. Per-body and
    // per-pair Hessian blocks are individually projected to PSD by
    // eigenvalue clamping when `project_psd` is set.
    struct Derivatives {
        double value = 0.0;
        VecX grad;
        Eigen::SparseMatrix<double> hess;
        int active_contacts = 0;
        int candidate_pairs = 0;
    };
    Derivatives derivatives(const Configs& q, bool project_psd = true) const;

    int num_dofs() const { return num_dofs_; }
    const std::vector<int>& local_bodies() const { return local_; }
    const std::vector<AffineBody>& bodies() const { return *bodies_; }
    const SimParams& params() const { return params_; }
    const std::vector<SharedAnchor>& anchors() const { return anchors_; }

    // Scatter a local DoF vector into the global config array (adds delta).
    void apply_step(Configs& q, const VecX& delta, double alpha) const;
    // Max |delta| over local dynamic DoF between two config arrays.
    double config_delta_inf(const Configs& a, const Configs& b) const;

    // Contact pairs with d < d_hat among local bodies at q, kappa_c filled.
    std::vector<ContactPair> active_contacts(const Configs& q) const;

    // Broad-phase candidate and narrow-phase active counts at q.
    void contact_counts(const Configs& q, int& active, int& candidates) const;

    double contact_weight(int body_a, int body_b) const;

  private:
    std::vector<ContactPair> detect(const Configs& q, int* candidates) const;

    const std::vector<AffineBody>* bodies_ = nullptr;
    std::vector<int> local_;          // sorted body indices
    std::vector<double> inv_kappa_;   // aligned with local_
    std::vector<Vec6> q_tilde_;       // aligned with local_
    std::vector<int> anchor_of_;      // aligned with local_, -1 if none
    std::vector<SharedAnchor> anchors_;
    std::vector<uint32_t> holder_mask_; // per global body, empty = single domain
    std::vector<int> dof_offset_;     // aligned with local_, -1 static
    std::vector<int> local_pos_;      // global body index -> position in local_, -1
    int num_dofs_ = 0;
    SimParams params_;
};

} // namespace dabd
