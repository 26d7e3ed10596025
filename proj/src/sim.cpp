#include "dabd/sim.hpp"

#include "dabd/newton.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

namespace dabd {

namespace fs = std::filesystem;

double mse_to_reference(const std::vector<AffineBody>& bodies, const Configs& q,
                        const Configs& q_ref) {
    if (q.size() != q_ref.size() || q.size() != bodies.size())
        throw Error("mse_to_reference: dimension mismatch");
    double sum = 0.0;
    int entries = 0;
    for (size_t b = 0; b < bodies.size(); ++b) {
        if (bodies[b].is_static) continue;
        sum += (q[b] - q_ref[b]).squaredNorm();
        entries += 6;
    }
    return entries > 0 ? sum / entries : 0.0;
}

// ---------------------------------------------------------------------------
// Snapshots and metrics files
// ---------------------------------------------------------------------------

void write_snapshot(const std::string& path, int64_t frame,
                    const std::vector<AffineBody>& bodies, const Configs& q,
                    const Configs& q_dot) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("snapshot: cannot open " + path);
    auto put_u64 = [&](uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    uint64_t n = 0;
    for (const AffineBody& b : bodies)
        if (!b.is_static) ++n;
    put_u64(static_cast<uint64_t>(frame));
    put_u64(n);
    for (size_t b = 0; b < bodies.size(); ++b) {
        if (bodies[b].is_static) continue;
        put_u64(static_cast<uint64_t>(bodies[b].id));
        for (int i = 0; i < 6; ++i) put_f64(q[b][i]);
        for (int i = 0; i < 6; ++i) put_f64(q_dot[b][i]);
    }
}

Trajectory load_trajectory(const std::string& dir,
                           const std::vector<AffineBody>& bodies) {
    Trajectory traj;
    for (int64_t frame = 0;; ++frame) {
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%04lld.bin",
                      static_cast<long long>(frame));
        const std::string path = dir + "/" + name;
        if (!fs::exists(path)) break;
        const Snapshot snap = read_snapshot(path);
        Configs q(bodies.size(), Vec6::Zero());
        Configs qd(bodies.size(), Vec6::Zero());
        for (size_t b = 0; b < bodies.size(); ++b) q[b] = bodies[b].q;
        for (size_t i = 0; i < snap.ids.size(); ++i) {
            const int id = snap.ids[i];
            if (id < 0 || id >= static_cast<int>(bodies.size()))
                throw Error("load_trajectory: snapshot body id out of range");
            q[id] = snap.q[i];
            qd[id] = snap.q_dot[i];
        }
        traj.q.push_back(std::move(q));
        traj.q_dot.push_back(std::move(qd));
        traj.h.push_back(0.0);
    }
    if (traj.q.empty()) throw Error("load_trajectory: no snapshots in " + dir);
    return traj;
}

Snapshot read_snapshot(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("snapshot: cannot open " + path);
    auto get_u64 = [&]() {
        uint64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    auto get_f64 = [&]() {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    Snapshot snap;
    snap.frame = static_cast<int64_t>(get_u64());
    const uint64_t n = get_u64();
    for (uint64_t i = 0; i < n; ++i) {
        snap.ids.push_back(static_cast<int>(get_u64()));
        Vec6 q, qd;
        for (int j = 0; j < 6; ++j) q[j] = get_f64();
        for (int j = 0; j < 6; ++j) qd[j] = get_f64();
        snap.q.push_back(q);
        snap.q_dot.push_back(qd);
    }
    if (!in) throw Error("snapshot: truncated file " + path);
    return snap;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows, int workers) {
    std::ofstream out(path);
    if (!out) throw Error("metrics: cannot open " + path);
    out << "frame,attempt,k,committed,r_inf,s_inf,min_toi,active_contacts,"
           "candidate_pairs,mse";
    for (int i = 0; i < workers; ++i) out << ",dq_inf_w" << i;
    for (int i = 0; i < workers; ++i) out << ",newton_w" << i;
    for (int i = 0; i < workers; ++i) out << ",t_compute_w" << i;
    for (int i = 0; i < workers; ++i) out << ",t_sync_w" << i;
    out << "\n";
    out.precision(17);
    for (const MetricsRow& row : rows) {
        out << row.frame << ',' << row.attempt << ',' << row.k << ','
            << (row.commit_row ? 1 : 0) << ',' << row.r_inf << ',' << row.s_inf
            << ',' << row.min_toi << ',' << row.active_contacts << ','
            << row.candidate_pairs << ',';
        if (std::isnan(row.mse))
            out << "";
        else
            out << row.mse;
        for (int i = 0; i < workers; ++i) out << ',' << row.dq_inf[i];
        for (int i = 0; i < workers; ++i) out << ',' << row.newton_iters[i];
        for (int i = 0; i < workers; ++i) out << ',' << row.t_compute[i];
        for (int i = 0; i < workers; ++i) out << ',' << row.t_sync[i];
        out << "\n";
    }
}

namespace {

std::string frame_path(const std::string& dir, int64_t frame) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04lld.bin",
                  static_cast<long long>(frame));
    return dir + "/" + name;
}

void write_summary(const std::string& path, const SceneData& scene, int workers,
                   const RunResult& result) {
    nlohmann::json summary;
    summary["scene"] = scene.name;
    summary["workers"] = workers;
    summary["frames"] = result.trajectory.q.size();
    double mean_admm = 0.0;
    double mean_newton = 0.0;
    for (const FrameStats& fsrow : result.frames) {
        mean_admm += fsrow.admm_iterations;
        for (int n : fsrow.newton_iters) mean_newton += n;
    }
    if (!result.frames.empty()) {
        mean_admm /= result.frames.size();
        mean_newton /= result.frames.size();
    }
    summary["mean_admm_iterations"] = mean_admm;
    summary["mean_newton_iterations_per_frame"] = mean_newton;
    summary["intersection_violations"] = result.intersection_violations;
    summary["wall_time_s"] = result.wall_time;
    double final_mse = std::numeric_limits<double>::quiet_NaN();
    for (auto it = result.metrics.rbegin(); it != result.metrics.rend(); ++it) {
        if (it->commit_row && !std::isnan(it->mse)) {
            final_mse = it->mse;
            break;
        }
    }
    if (!std::isnan(final_mse)) summary["final_mse"] = final_mse;
    std::ofstream out(path);
    out << summary.dump(2) << "\n";
}

} // namespace

// ---------------------------------------------------------------------------
// Reference (single-domain) solver
// ---------------------------------------------------------------------------

Trajectory run_reference(const SceneData& scene, const std::string& out_dir) {
    const std::vector<AffineBody>& bodies = scene.bodies;
    const int nb = static_cast<int>(bodies.size());
    Configs q = scene.initial_configs();
    Configs q_dot = scene.initial_velocities();

    std::vector<int> local_all, local_dynamic;
    std::vector<uint32_t> holder_mask(nb, 1u);
    for (int b = 0; b < nb; ++b) {
        local_all.push_back(b);
        if (!bodies[b].is_static) local_dynamic.push_back(b);
    }

    if (!out_dir.empty()) fs::create_directories(out_dir);

    const SimParams& params = scene.params;
    NewtonOptions nopts;
    nopts.max_iters = scene.newton_cap;
    nopts.tol = params.theta * params.h * params.scene_scale;

    Trajectory traj;
    for (int64_t frame = 0; frame < scene.frames; ++frame) {
        const Configs q_start = q;
        std::vector<Vec6> q_tilde;
        std::vector<double> kappa;
        for (int b : local_all) {
            kappa.push_back(1.0);
            q_tilde.push_back(bodies[b].is_static
                                  ? q[b]
                                  : predicted_position(
                                        q[b], q_dot[b],
                                        gravity_force(bodies[b], params.gravity),
                                        params.h, bodies[b].mass_matrix));
        }

        double dq_inf = 0.0;
        bool ended = false;
        for (int k = 1; k <= scene.admm_max_iterations; ++k) {
            if (k > 1) {
                const ControlDecision decision =
                    check_stopping(dq_inf, 0.0, 0.0, {1.0}, params.h,
                                   params.scene_scale, params.theta);
                if (decision.end) {
                    ended = true;
                    break;
                }
            }
            const LocalObjective objective = LocalObjective::assemble(
                bodies, local_all, kappa, q_tilde, {}, holder_mask, params);
            const Configs q_before = q;
            newton_solve(objective, q, nopts);
            dq_inf = objective.config_delta_inf(q, q_before);
        }
        if (!ended) throw Error("run_reference: Newton stepping failed to settle");

        finalize_merge(q, q_dot, q_start, params.h, {}, {}, local_dynamic, true);
        traj.q.push_back(q);
        traj.q_dot.push_back(q_dot);
        traj.h.push_back(params.h);
        if (!out_dir.empty())
            write_snapshot(frame_path(out_dir, frame), frame, bodies, q, q_dot);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Distributed run
// ---------------------------------------------------------------------------

RunResult run_distributed(const SceneData& scene, const RunOptions& options) {
    const int n = options.workers;
    if (n < 1) throw Error("run_distributed: need at least one worker");
    const auto wall_t0 = std::chrono::steady_clock::now();

    std::vector<ChannelPtr> controller_side(n);
    std::vector<WorkerLinks> links(n);
    std::unique_ptr<TcpListener> controller_listener;

    if (options.transport == TransportKind::InProc) {
        for (int i = 0; i < n; ++i) {
            auto [a, b] = make_inproc_pair();
            controller_side[i] = a;
            links[i].controller = b;
        }
        for (int i = 0; i + 1 < n; ++i) {
            auto [a, b] = make_inproc_pair();
            links[i].neighbors[i + 1] = a;
            links[i + 1].neighbors[i] = b;
        }
    } else {
        controller_listener = std::make_unique<TcpListener>(options.tcp_port);
    }
    const uint16_t controller_port =
        controller_listener ? controller_listener->port() : 0;

    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> worker_errors(n);
    for (int i = 0; i < n; ++i) {
        threads.emplace_back([&, i]() {
            try {
                WorkerLinks my_links;
                if (options.transport == TransportKind::InProc) {
                    my_links = std::move(links[i]);
                } else {
                    TcpListener listener(0);
                    my_links.controller = tcp_connect("127.0.0.1", controller_port);
                    Hello hello;
                    hello.worker = i;
                    hello.listen_port = listener.port();
                    my_links.controller->send(hello);
                    const ProtocolMessage m = my_links.controller->recv();
                    const auto* table = std::get_if<PeerTable>(&m);
                    if (!table) throw Error("tcp bootstrap: expected PeerTable");
                    // Chain topology: accept from the lower neighbor, dial the
                    // higher one.
                    if (i > 0) {
                        auto ch = listener.accept();
                        const ProtocolMessage hm = ch->recv();
                        const auto* who = std::get_if<Hello>(&hm);
                        if (!who || who->worker != i - 1)
                            throw Error("tcp bootstrap: unexpected neighbor");
                        my_links.neighbors[i - 1] = ch;
                    }
                    if (i + 1 < n) {
                        auto ch = tcp_connect("127.0.0.1", table->ports[i + 1]);
                        Hello who;
                        who.worker = i;
                        ch->send(who);
                        my_links.neighbors[i + 1] = ch;
                    }
                }
                WorkerSession(i, n, scene, std::move(my_links)).run();
            } catch (...) {
                worker_errors[i] = std::current_exception();
            }
        });
    }

    if (options.transport == TransportKind::Tcp) {
        std::vector<uint16_t> ports(n, 0);
        std::vector<ChannelPtr> pending;
        for (int i = 0; i < n; ++i) {
            auto ch = controller_listener->accept();
            const ProtocolMessage m = ch->recv();
            const auto* hello = std::get_if<Hello>(&m);
            if (!hello || hello->worker < 0 || hello->worker >= n)
                throw Error("tcp bootstrap: bad hello");
            controller_side[hello->worker] = ch;
            ports[hello->worker] = hello->listen_port;
        }
        PeerTable table;
        table.ports = ports;
        for (const ChannelPtr& ch : controller_side) ch->send(table);
    }

    RunResult result;
    const bool track_mse = options.reference != nullptr;
    if (!options.out_dir.empty()) fs::create_directories(options.out_dir);

    ControllerOptions copts;
    copts.track_candidates = track_mse;
    copts.on_iteration = [&](const IterationObservation& obs) {
        MetricsRow row;
        row.frame = obs.frame;
        row.attempt = obs.attempt;
        row.k = obs.k;
        row.r_inf = obs.r_inf;
        row.s_inf = obs.s_inf;
        row.min_toi = obs.min_toi;
        row.commit_row = obs.sigma == Signal::End;
        for (const IterationReport& rep : obs.reports) {
            row.dq_inf.push_back(rep.dq_inf);
            row.newton_iters.push_back(rep.newton_iters);
            row.t_compute.push_back(rep.compute_time);
            row.t_sync.push_back(rep.sync_time);
            row.active_contacts += rep.active_contacts;
            row.candidate_pairs += rep.candidate_pairs;
        }
        if (track_mse && obs.candidate &&
            obs.frame < static_cast<int64_t>(options.reference->q.size()))
            row.mse = mse_to_reference(scene.bodies, *obs.candidate,
                                       options.reference->q[obs.frame]);
        result.metrics.push_back(std::move(row));
    };
    copts.on_commit = [&](const CommitObservation& obs) {
        result.trajectory.q.push_back(*obs.q);
        result.trajectory.q_dot.push_back(*obs.q_dot);
        result.trajectory.h.push_back(obs.h);

        FrameStats stats;
        stats.frame = obs.frame;
        stats.attempts = obs.attempt + 1;
        stats.h = obs.h;
        stats.admm_iterations = obs.admm_iterations;
        for (const FrameCommit& commit : obs.commits) {
            stats.newton_iters.push_back(commit.newton_iters_total);
            stats.local_bodies.push_back(commit.local_bodies);
            stats.t_compute.push_back(commit.compute_time);
            stats.t_sync.push_back(commit.sync_time);
            stats.t_solve.push_back(commit.solve_time);
            stats.t_coll.push_back(commit.collision_time);
        }
        result.frames.push_back(std::move(stats));

        if (options.audit && intersection_test(scene.bodies, *obs.q))
            ++result.intersection_violations;
        if (track_mse &&
            obs.frame < static_cast<int64_t>(options.reference->q.size())) {
            const double mse = mse_to_reference(scene.bodies, *obs.q,
                                                options.reference->q[obs.frame]);
            for (auto it = result.metrics.rbegin(); it != result.metrics.rend(); ++it) {
                if (it->frame == obs.frame && it->commit_row) {
                    it->mse = mse;
                    break;
                }
            }
        }
        if (!options.out_dir.empty())
            write_snapshot(frame_path(options.out_dir, obs.frame), obs.frame,
                           scene.bodies, *obs.q, *obs.q_dot);
    };

    std::exception_ptr controller_error;
    {
        ControllerSession controller(scene, controller_side, copts);
        try {
            controller.run();
        } catch (...) {
            controller_error = std::current_exception();
        }
        // Closing the controller-side channels unblocks stuck workers.
        controller_side.clear();
    }
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& err : worker_errors)
        if (err) std::rethrow_exception(err);
    if (controller_error) std::rethrow_exception(controller_error);

    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_t0)
            .count();
    if (!options.out_dir.empty()) {
        write_metrics_csv(options.out_dir + "/metrics.csv", result.metrics, n);
        write_summary(options.out_dir + "/summary.json", scene, n, result);
    }
    return result;
}

} // namespace dabd
