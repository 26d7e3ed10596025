#include "support/replay.hpp"

#include "dabd/newton.hpp"

#include <bit>

namespace dabd::testing {

using namespace dabd;

Trajectory sequential_multiworker(const SceneData& scene, int workers) {
    const std::vector<AffineBody>& bodies = scene.bodies;
    const int nb = static_cast<int>(bodies.size());
    const std::vector<Plane> planes(scene.planes.begin(),
                                    scene.planes.begin() + (workers - 1));

    Configs q_global = scene.initial_configs();
    Configs qdot_global = scene.initial_velocities();
    std::map<int, double> rho_carry;

    Trajectory traj;
    for (int64_t frame = 0; frame < scene.frames; ++frame) {
        const PartitionLayout layout =
            partition_scene(bodies, q_global, planes, workers, scene.params.h,
                            scene.w_min);

        // Predicted positions agree across replicas (identical inputs).
        std::vector<Vec6> q_tilde(nb, Vec6::Zero());
        for (int b = 0; b < nb; ++b) {
            if (bodies[b].is_static) {
                q_tilde[b] = q_global[b];
                continue;
            }
            // Worker-split forces are not supported by this oracle.
            q_tilde[b] = predicted_position(
                q_global[b], qdot_global[b],
                gravity_force(bodies[b], scene.params.gravity), scene.params.h,
                bodies[b].mass_matrix);
        }

        // Per-worker replicas and consensus state.
        std::vector<Configs> wq(workers, q_global);
        std::vector<int> all_shared; // global shared list, ascending
        for (int b = 0; b < nb; ++b)
            if (!bodies[b].is_static && layout.is_shared(b)) all_shared.push_back(b);

        std::map<int, Vec6> z, z_prev;
        std::map<std::pair<int, int>, Vec6> u; // (worker, body)
        std::map<int, double> rho, rho0;
        for (int b : all_shared) {
            z[b] = q_tilde[b];
            rho0[b] = init_rho(bodies[b].mass, scene.adapt.beta);
            rho[b] = rho_carry.count(b) ? rho_carry[b] : rho0[b];
            for (int i : layout.holders_of(b)) u[{i, b}] = Vec6::Zero();
        }

        NewtonOptions nopts;
        nopts.max_iters = scene.newton_cap;
        nopts.tol = scene.params.theta * scene.params.h * scene.params.scene_scale;

        auto objective_for = [&](int i) {
            std::vector<double> kappa;
            std::vector<Vec6> qt;
            std::vector<SharedAnchor> anchors;
            for (int b : layout.local_bodies[i]) {
                kappa.push_back(layout.kappa_b(b));
                qt.push_back(q_tilde[b]);
            }
            for (int b : layout.shared_bodies[i]) {
                SharedAnchor a;
                a.body = b;
                a.z = z[b];
                a.u = u[{i, b}];
                a.rho = rho[b];
                anchors.push_back(a);
            }
            return LocalObjective::assemble(bodies, layout.local_bodies[i], kappa,
                                            qt, std::move(anchors),
                                            layout.holder_mask, scene.params);
        };

        std::vector<double> dq(workers, 0.0);
        bool ended = false;
        std::map<int, Vec6> z_commit;
        for (int k = 1; k <= scene.admm_max_iterations && !ended; ++k) {
            if (k > 1) {
                std::map<int, Vec6> z_next;
                std::map<int, double> r_body, s_body;
                double r_inf = 0.0, s_inf = 0.0;
                for (int b : all_shared) {
                    std::vector<Vec6> qu, replicas;
                    std::vector<double> weights;
                    for (int i : layout.holders_of(b)) {
                        replicas.push_back(wq[i][b]);
                        qu.push_back(wq[i][b] + u[{i, b}]);
                        weights.push_back(rho[b]);
                    }
                    z_next[b] = consensus_update(qu, weights);
                    for (int i : layout.holders_of(b))
                        u[{i, b}] = dual_update(u[{i, b}], wq[i][b], z_next[b]);
                    r_body[b] = primal_residual_inf(replicas, z_next[b]);
                    s_body[b] = dual_residual_inf(z_next[b], z[b]);
                    r_inf = std::max(r_inf, r_body[b]);
                    s_inf = std::max(s_inf, s_body[b]);
                }

                std::vector<double> tois;
                double dq_max = 0.0;
                for (int i = 0; i < workers; ++i) {
                    std::vector<Vec6> z_list;
                    for (int b : layout.shared_bodies[i]) z_list.push_back(z_next[b]);
                    tois.push_back(merge_ccd_gate(bodies, wq[i],
                                                  layout.shared_bodies[i], z_list,
                                                  layout.local_bodies[i]));
                    dq_max = std::max(dq_max, dq[i]);
                }
                const ControlDecision decision =
                    check_stopping(dq_max, r_inf, s_inf, tois, scene.params.h,
                                   scene.params.scene_scale, scene.params.theta);
                if (decision.end) {
                    z_commit = z_next;
                    ended = true;
                    break;
                }
                if (scene.adapt.adapt_enabled)
                    for (int b : all_shared)
                        rho[b] = adapt_rho(rho[b], r_body[b], s_body[b], scene.adapt,
                                           rho0[b]);
                z = z_next;
            }
            for (int i = 0; i < workers; ++i) {
                const LocalObjective objective = objective_for(i);
                const Configs before = wq[i];
                newton_solve(objective, wq[i], nopts);
                dq[i] = objective.config_delta_inf(wq[i], before);
            }
        }
        if (!ended) throw Error("sequential replay: frame did not converge");
        rho_carry.clear();
        for (int b : all_shared) rho_carry[b] = rho[b];

        // Merge identically on all holders, then assemble the global state.
        Configs q_new = q_global;
        Configs qdot_new = qdot_global;
        for (int i = 0; i < workers; ++i) {
            std::vector<int> dynamic_local;
            for (int b : layout.local_bodies[i])
                if (!bodies[b].is_static) dynamic_local.push_back(b);
            std::vector<Vec6> z_list;
            for (int b : layout.shared_bodies[i]) z_list.push_back(z_commit[b]);
            Configs qi = wq[i];
            Configs qdot_i = qdot_global;
            finalize_merge(qi, qdot_i, q_global, scene.params.h,
                           layout.shared_bodies[i], z_list, dynamic_local, true);
            for (int b : dynamic_local) {
                const auto holders = layout.holders_of(b);
                if (holders.front() != i) continue; // lowest holder owns
                q_new[b] = qi[b];
                qdot_new[b] = qdot_i[b];
            }
        }
        q_global = q_new;
        qdot_global = qdot_new;
        traj.q.push_back(q_global);
        traj.q_dot.push_back(qdot_global);
        traj.h.push_back(scene.params.h);
    }
    return traj;
}

} // namespace dabd::testing
