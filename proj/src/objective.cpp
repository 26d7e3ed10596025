#include "dabd/objective.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>

namespace dabd {

namespace {

template <int N>
Eigen::Matrix<double, N, N> clamp_psd(const Eigen::Matrix<double, N, N>& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, N, N>> eig(m);
    Eigen::Matrix<double, N, 1> vals = eig.eigenvalues().cwiseMax(0.0);
    return eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
}

} // namespace

LocalObjective LocalObjective::assemble(const std::vector<AffineBody>& bodies,
                                        std::vector<int> local,
                                        std::vector<double> kappa_b,
                                        std::vector<Vec6> q_tilde,
                                        std::vector<SharedAnchor> anchors,
                                        std::vector<uint32_t> holder_mask,
                                        const SimParams& params) {
    params.validate();
    if (local.size() != kappa_b.size() || local.size() != q_tilde.size())
        throw Error("LocalObjective: body/kappa/q_tilde size mismatch");

    LocalObjective obj;
    obj.bodies_ = &bodies;
    obj.params_ = params;
    obj.holder_mask_ = std::move(holder_mask);

    // Sort local bodies by index, keeping the parallel arrays aligned.
    std::vector<size_t> order(local.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return local[a] < local[b]; });
    for (size_t i : order) {
        obj.local_.push_back(local[i]);
        obj.inv_kappa_.push_back(1.0 / kappa_b[i]);
        obj.q_tilde_.push_back(q_tilde[i]);
    }

    obj.local_pos_.assign(bodies.size(), -1);
    obj.anchor_of_.assign(obj.local_.size(), -1);
    obj.dof_offset_.assign(obj.local_.size(), -1);
    int dof = 0;
    for (size_t i = 0; i < obj.local_.size(); ++i) {
        const int b = obj.local_[i];
        if (b < 0 || b >= static_cast<int>(bodies.size()))
            throw Error("LocalObjective: body index out of range");
        if (obj.local_pos_[b] != -1) throw Error("LocalObjective: duplicate local body");
        obj.local_pos_[b] = static_cast<int>(i);
        if (!bodies[b].is_static) {
            obj.dof_offset_[i] = dof;
            dof += 6;
        }
    }
    obj.num_dofs_ = dof;

    std::sort(anchors.begin(), anchors.end(),
              [](const SharedAnchor& a, const SharedAnchor& b) { return a.body < b.body; });
    for (const SharedAnchor& anchor : anchors) {
        const int pos = anchor.body >= 0 && anchor.body < static_cast<int>(bodies.size())
                            ? obj.local_pos_[anchor.body]
                            : -1;
        if (pos < 0) throw Error("LocalObjective: anchor for a body not on this worker");
        if (bodies[anchor.body].is_static)
            throw Error("LocalObjective: anchor on a static body");
        if (obj.anchor_of_[pos] != -1)
            throw Error("LocalObjective: duplicate anchor for one body");
        obj.anchor_of_[pos] = static_cast<int>(obj.anchors_.size());
        obj.anchors_.push_back(anchor);
    }
    return obj;
}

double LocalObjective::contact_weight(int body_a, int body_b) const {
    if (holder_mask_.empty()) return 1.0;
    const uint32_t common = holder_mask_[body_a] & holder_mask_[body_b];
    const int kappa_c = std::popcount(common);
    if (kappa_c == 0)
        throw Error("LocalObjective: contact pair visible to no worker (overlap too small)");
    return 1.0 / kappa_c;
}

std::vector<ContactPair> LocalObjective::detect(const Configs& q,
                                                int* candidates) const {
    auto cand = broad_phase(*bodies_, q, params_.d_hat, local_);
    // Drop static-static pairs: constant terms with no DoF coupling.
    cand.erase(std::remove_if(cand.begin(), cand.end(),
                              [this](const ContactPair& pair) {
                                  return (*bodies_)[pair.body_a].is_static &&
                                         (*bodies_)[pair.body_b].is_static;
                              }),
               cand.end());
    if (candidates) *candidates = static_cast<int>(cand.size());
    auto active = narrow_phase(cand, *bodies_, q, params_.d_hat);
    for (ContactPair& pair : active)
        pair.kappa_c = 1.0 / contact_weight(pair.body_a, pair.body_b);
    return active;
}

std::vector<ContactPair> LocalObjective::active_contacts(const Configs& q) const {
    return detect(q, nullptr);
}

void LocalObjective::contact_counts(const Configs& q, int& active,
                                    int& candidates) const {
    active = static_cast<int>(detect(q, &candidates).size());
}

double LocalObjective::value(const Configs& q, bool with_anchors) const {
    const double h2 = params_.h * params_.h;
    double total = 0.0;
    for (size_t i = 0; i < local_.size(); ++i) {
        const AffineBody& body = (*bodies_)[local_[i]];
        if (body.is_static) continue;
        const Vec6& qb = q[local_[i]];
        double e = inertia_energy(qb, q_tilde_[i], body.mass_matrix).value;
        e += h2 * arap_energy(qb, params_.arap_stiffness * body.arap_scale,
                              body.rest_area)
                      .value;
        total += inv_kappa_[i] * e;
        if (with_anchors && anchor_of_[i] >= 0) {
            const SharedAnchor& a = anchors_[anchor_of_[i]];
            total += 0.5 * a.rho * (qb - a.z + a.u).squaredNorm();
        }
    }
    for (const ContactPair& pair : detect(q, nullptr)) {
        const double w = 1.0 / pair.kappa_c;
        const double b =
            barrier_energy(pair.d, params_.d_hat, params_.barrier_stiffness).value;
        total += h2 * w * b;
    }
    return total;
}

LocalObjective::Derivatives LocalObjective::derivatives(const Configs& q,
                                                        bool project_psd) const {
    const double h2 = params_.h * params_.h;
    Derivatives out;
    out.grad = VecX::Zero(num_dofs_);
    std::vector<Eigen::Triplet<double>> triplets;

    auto scatter_block = [&](int dof_r, int dof_c, const Mat6& block) {
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c)
                triplets.emplace_back(dof_r + r, dof_c + c, block(r, c));
    };

    for (size_t i = 0; i < local_.size(); ++i) {
        const AffineBody& body = (*bodies_)[local_[i]];
        if (body.is_static) continue;
        const Vec6& qb = q[local_[i]];
        const int dof = dof_offset_[i];

        BodyEnergy inertia = inertia_energy(qb, q_tilde_[i], body.mass_matrix);
        BodyEnergy arap = arap_energy(qb, params_.arap_stiffness * body.arap_scale,
                                      body.rest_area);
        double value = inv_kappa_[i] * (inertia.value + h2 * arap.value);
        Vec6 grad = inv_kappa_[i] * (inertia.grad + h2 * arap.grad);
        Mat6 hess = inv_kappa_[i] * (inertia.hess + h2 * arap.hess);
        if (anchor_of_[i] >= 0) {
            const SharedAnchor& a = anchors_[anchor_of_[i]];
            const Vec6 diff = qb - a.z + a.u;
            value += 0.5 * a.rho * diff.squaredNorm();
            grad += a.rho * diff;
            hess += a.rho * Mat6::Identity();
        }
        out.value += value;
        out.grad.segment<6>(dof) += grad;
        scatter_block(dof, dof, project_psd ? clamp_psd<6>(hess) : hess);
    }

    int candidates = 0;
    const auto contacts = detect(q, &candidates);
    out.candidate_pairs = candidates;
    out.active_contacts = static_cast<int>(contacts.size());
    for (const ContactPair& pair : contacts) {
        const AffineBody& ba = (*bodies_)[pair.body_a];
        const AffineBody& bb = (*bodies_)[pair.body_b];
        const double w = h2 / pair.kappa_c;
        PairEnergy e = contact_energy(ba, q[pair.body_a], bb, q[pair.body_b],
                                      pair.point_index, pair.edge_index,
                                      params_.d_hat, params_.barrier_stiffness);
        out.value += w * e.value;
        const Mat12 hess = project_psd ? clamp_psd<12>(Mat12(w * e.hess))
                                       : Mat12(w * e.hess);
        const int dof_a = ba.is_static ? -1 : dof_offset_[local_pos_[pair.body_a]];
        const int dof_b = bb.is_static ? -1 : dof_offset_[local_pos_[pair.body_b]];
        if (dof_a >= 0) {
            out.grad.segment<6>(dof_a) += w * e.grad.head<6>();
            scatter_block(dof_a, dof_a, hess.topLeftCorner<6, 6>());
        }
        if (dof_b >= 0) {
            out.grad.segment<6>(dof_b) += w * e.grad.tail<6>();
            scatter_block(dof_b, dof_b, hess.bottomRightCorner<6, 6>());
        }
        if (dof_a >= 0 && dof_b >= 0) {
            scatter_block(dof_a, dof_b, hess.topRightCorner<6, 6>());
            scatter_block(dof_b, dof_a, hess.bottomLeftCorner<6, 6>());
        }
    }

    out.hess.resize(num_dofs_, num_dofs_);
    out.hess.setFromTriplets(triplets.begin(), triplets.end());
    return out;
}

void LocalObjective::apply_step(Configs& q, const VecX& delta, double alpha) const {
    for (size_t i = 0; i < local_.size(); ++i) {
        if (dof_offset_[i] < 0) continue;
        q[local_[i]] += alpha * delta.segment<6>(dof_offset_[i]);
    }
}

double LocalObjective::config_delta_inf(const Configs& a, const Configs& b) const {
    double best = 0.0;
    for (size_t i = 0; i < local_.size(); ++i) {
        if (dof_offset_[i] < 0) continue;
        best = std::max(best,
                        (a[local_[i]] - b[local_[i]]).cwiseAbs().maxCoeff());
    }
    return best;
}

} // namespace dabd
