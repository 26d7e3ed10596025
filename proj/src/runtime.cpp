#include "dabd/runtime.hpp"

#include "dabd/newton.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>

namespace dabd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename T>
const T* expect(const ProtocolMessage& message, const char* what) {
    const T* m = std::get_if<T>(&message);
    if (!m)
        throw Error(std::string("protocol error: expected ") + what + ", got " +
                    message_name(message));
    return m;
}

void check_counters(int64_t frame, int32_t attempt, int64_t got_frame,
                    int32_t got_attempt, const char* what) {
    if (frame != got_frame || attempt != got_attempt)
        throw Error(std::string("protocol error: stale counters on ") + what);
}

uint32_t all_workers_mask(int n) {
    return n == 32 ? 0xffffffffu : ((1u << n) - 1u);
}

} // namespace

IterShared neighbor_exchange(Channel& channel, const IterShared& mine,
                             int expected_from,
                             const std::vector<int>& expected_ids) {
    channel.send(mine);
    const ProtocolMessage message = channel.recv();
    const IterShared* theirs = expect<IterShared>(message, "IterShared");
    check_counters(mine.frame, mine.attempt, theirs->frame, theirs->attempt,
                   "IterShared");
    if (theirs->k != mine.k)
        throw Error("protocol error: stale iteration counter on IterShared");
    if (theirs->from_worker != expected_from || theirs->to_worker != mine.from_worker)
        throw Error("protocol error: IterShared from unexpected worker");
    if (theirs->bodies.size() != expected_ids.size())
        throw Error("protocol error: interface body-set mismatch (partition desync)");
    for (size_t i = 0; i < expected_ids.size(); ++i)
        if (theirs->bodies[i].id != expected_ids[i])
            throw Error("protocol error: interface body-set mismatch (partition desync)");
    return *theirs;
}

// ---------------------------------------------------------------------------
// Worker
// ---------------------------------------------------------------------------

WorkerSession::WorkerSession(int worker, int num_workers, const SceneData& scene,
                             WorkerLinks links)
    : worker_(worker), num_workers_(num_workers), scene_(scene),
      links_(std::move(links)) {
    q_ = scene_.initial_configs();
    q_dot_ = scene_.initial_velocities();
    if (static_cast<int>(scene_.planes.size()) < num_workers_ - 1)
        throw Error("worker: scene has too few interface planes");
    planes_.assign(scene_.planes.begin(),
                   scene_.planes.begin() + (num_workers_ - 1));

    // Initial membership from the scene file (identical on every worker).
    const double v0 = [&] {
        double v = 0.0;
        for (const AffineBody& body : scene_.bodies)
            if (!body.is_static) v = std::max(v, max_vertex_speed(body, body.q_dot));
        return v;
    }();
    const double w0 = overlap_width(v0, scene_.params.h, scene_.w_min);
    held_.assign(scene_.bodies.size(), 0);
    for (size_t b = 0; b < scene_.bodies.size(); ++b) {
        if (scene_.bodies[b].is_static) continue;
        const uint32_t mask =
            body_holder_mask(scene_.bodies[b], q_[b], planes_, w0);
        if (mask & (1u << worker_)) held_[b] = 1;
    }
}

void WorkerSession::run() {
    while (true) {
        const ProtocolMessage message = links_.controller->recv();
        if (std::holds_alternative<Shutdown>(message)) return;
        if (const auto* bu = std::get_if<BalanceUpdate>(&message)) {
            if (bu->interface_index < 0 ||
                bu->interface_index >= static_cast<int>(planes_.size()))
                throw Error("protocol error: balance update for unknown interface");
            planes_[bu->interface_index] =
                shift_boundary(planes_[bu->interface_index], bu->dp);
            continue;
        }
        const FrameBegin* fb = expect<FrameBegin>(message, "FrameBegin");
        run_frame(fb->frame, fb->attempt, fb->h, fb->w, fb->flags & 1);
    }
}

WorkerSession::FrameOutcome WorkerSession::run_frame(int64_t frame,
                                                     int32_t attempt, double h,
                                                     double w,
                                                     bool want_candidates) {
    const std::vector<AffineBody>& bodies = scene_.bodies;
    const int nb = static_cast<int>(bodies.size());

    double sync_time = 0.0;
    const auto frame_t0 = Clock::now();
    auto timed_recv = [&](Channel& channel) {
        const auto t0 = Clock::now();
        ProtocolMessage m = channel.recv();
        sync_time += seconds_since(t0);
        return m;
    };

    // --- membership of currently held bodies --------------------------------
    std::vector<uint32_t> mask(nb, 0);
    const uint32_t everyone = all_workers_mask(num_workers_);
    for (int b = 0; b < nb; ++b) {
        if (bodies[b].is_static)
            mask[b] = everyone;
        else if (held_[b])
            mask[b] = body_holder_mask(bodies[b], q_[b], planes_, w);
    }

    // --- frame-init fetch with each neighbor --------------------------------
    std::vector<int> neighbor_ids;
    for (const auto& [j, ch] : links_.neighbors) neighbor_ids.push_back(j);
    std::sort(neighbor_ids.begin(), neighbor_ids.end());

    for (int j : neighbor_ids) {
        FetchSharedRequest req;
        req.frame = frame;
        req.attempt = attempt;
        req.from_worker = worker_;
        req.to_worker = j;
        links_.neighbors[j]->send(req);
    }
    for (int j : neighbor_ids) {
        const ProtocolMessage m = timed_recv(*links_.neighbors[j]);
        const auto* req = expect<FetchSharedRequest>(m, "FetchSharedRequest");
        check_counters(frame, attempt, req->frame, req->attempt, "FetchSharedRequest");
        if (req->from_worker != j || req->to_worker != worker_)
            throw Error("protocol error: fetch request from unexpected worker");

        FetchSharedReply reply;
        reply.frame = frame;
        reply.attempt = attempt;
        reply.from_worker = worker_;
        reply.to_worker = j;
        for (int b = 0; b < nb; ++b) {
            if (!held_[b] || bodies[b].is_static) continue;
            if (!(mask[b] & (1u << j))) continue;
            FetchSharedBody fb;
            fb.id = b;
            fb.mesh_id = b;
            fb.q = q_[b];
            fb.q_dot = q_dot_[b];
            fb.mass_matrix = bodies[b].mass_matrix;
            reply.bodies.push_back(fb);
        }
        links_.neighbors[j]->send(reply);
    }

    std::vector<char> incoming(nb, 0);
    for (int j : neighbor_ids) {
        const ProtocolMessage m = timed_recv(*links_.neighbors[j]);
        const auto* reply = expect<FetchSharedReply>(m, "FetchSharedReply");
        check_counters(frame, attempt, reply->frame, reply->attempt,
                       "FetchSharedReply");
        if (reply->from_worker != j || reply->to_worker != worker_)
            throw Error("protocol error: fetch reply from unexpected worker");
        for (const FetchSharedBody& fb : reply->bodies) {
            if (fb.id < 0 || fb.id >= nb || bodies[fb.id].is_static)
                throw Error("protocol error: fetched unknown body");
            if ((fb.mass_matrix - bodies[fb.id].mass_matrix).cwiseAbs().maxCoeff() != 0.0)
                throw Error("protocol error: fetched mass matrix mismatch");
            if (held_[fb.id]) {
                // Merge invariant: replicas must agree at frame start.
                const double dq_err = (q_[fb.id] - fb.q).cwiseAbs().maxCoeff();
                const double dv_err =
                    (q_dot_[fb.id] - fb.q_dot).cwiseAbs().maxCoeff();
                if (dq_err > 1e-10 || dv_err > 1e-10)
                    throw Error("protocol error: replica disagreement at frame " +
                                std::to_string(frame) + " start: body " +
                                std::to_string(fb.id) + " dq=" +
                                std::to_string(dq_err) + " dv=" +
                                std::to_string(dv_err));
            } else {
                q_[fb.id] = fb.q;
                q_dot_[fb.id] = fb.q_dot;
            }
            incoming[fb.id] = 1;
        }
    }

    // The frame-start snapshot includes freshly adopted bodies so velocity
    // updates and retries are computed from the true start state.
    const Configs q_start = q_;
    const Configs qdot_start = q_dot_;

    // --- local sets for this frame ------------------------------------------
    std::vector<char> new_held(nb, 0);
    std::vector<int> local_all;     // includes statics
    std::vector<int> local_dynamic; // sorted (ids ascend below)
    std::vector<int> shared;        // sorted
    for (int b = 0; b < nb; ++b) {
        if (bodies[b].is_static) {
            local_all.push_back(b);
            continue;
        }
        if (!held_[b] && !incoming[b]) continue;
        mask[b] = body_holder_mask(bodies[b], q_[b], planes_, w);
        if (!(mask[b] & (1u << worker_))) continue;
        new_held[b] = 1;
        local_all.push_back(b);
        local_dynamic.push_back(b);
        if (std::popcount(mask[b]) >= 2) {
            shared.push_back(b);
            const uint32_t others = mask[b] & ~(1u << worker_);
            if (std::popcount(others) != 1 ||
                !std::binary_search(neighbor_ids.begin(), neighbor_ids.end(),
                                    std::countr_zero(others)))
                throw Error("partition desync: shared body held by a non-neighbor");
        }
    }

    std::vector<uint32_t> holder_mask(nb, 0);
    for (int b : local_all) holder_mask[b] = mask[b];

    // --- predicted positions, warm start ------------------------------------
    SimParams fparams = scene_.params;
    fparams.h = h;
    std::vector<Vec6> q_tilde_of(nb, Vec6::Zero());
    std::vector<double> kappa_of(nb, 1.0);
    for (int b : local_all) {
        kappa_of[b] = std::popcount(mask[b]);
        if (bodies[b].is_static) {
            q_tilde_of[b] = q_[b];
            continue;
        }
        Vec6 f = gravity_force(bodies[b], fparams.gravity);
        const auto split = scene_.replica_force_split.find(b);
        const bool split_active =
            scene_.force_split_frames < 0 || frame < scene_.force_split_frames;
        if (split != scene_.replica_force_split.end() && split_active &&
            std::popcount(mask[b]) >= 2) {
            const int lowest = std::countr_zero(mask[b]);
            const double sign = worker_ == lowest ? 1.0 : -1.0;
            f[0] += sign * split->second.x();
            f[1] += sign * split->second.y();
        }
        q_tilde_of[b] =
            predicted_position(q_[b], q_dot_[b], f, h, bodies[b].mass_matrix);
    }

    const int ns = static_cast<int>(shared.size());
    std::vector<Vec6> z(ns), u(ns, Vec6::Zero());
    std::vector<double> rho(ns), rho0(ns);
    for (int i = 0; i < ns; ++i) {
        z[i] = q_tilde_of[shared[i]];
        rho0[i] = init_rho(bodies[shared[i]].mass, scene_.adapt.beta);
        // Adapted penalties persist while a body stays shared; every holder
        // carries the same value, so replicas remain in agreement.
        const auto carried = rho_carry_.find(shared[i]);
        rho[i] = carried != rho_carry_.end() ? carried->second : rho0[i];
    }

    NewtonOptions nopts;
    nopts.max_iters = scene_.newton_cap;
    nopts.tol = fparams.theta * h * fparams.scene_scale;

    auto build_objective = [&]() {
        std::vector<double> kappa;
        std::vector<Vec6> q_tilde;
        std::vector<SharedAnchor> anchors;
        for (int b : local_all) {
            kappa.push_back(kappa_of[b]);
            q_tilde.push_back(q_tilde_of[b]);
        }
        for (int i = 0; i < ns; ++i) {
            SharedAnchor a;
            a.body = shared[i];
            a.z = z[i];
            a.u = u[i];
            a.rho = rho[i];
            anchors.push_back(a);
        }
        return LocalObjective::assemble(bodies, local_all, kappa, q_tilde,
                                        std::move(anchors), holder_mask, fparams);
    };

    double dq_inf = 0.0;
    int last_newton_iters = 0;
    int last_active = 0, last_candidates = 0;
    int total_newton = 0;
    int admm_iterations = 0;
    double solve_time = 0.0;
    double collision_time = 0.0;
    double sync_mark = 0.0;    // sync time attributed to earlier reports
    double compute_mark = 0.0; // compute time attributed to earlier reports

    std::vector<Vec6> z_commit;
    bool committed = false;

    for (int k = 1; k <= scene_.admm_max_iterations; ++k) {
        if (k > 1) {
            // Fetch shared-body states from the neighbors.
            std::vector<IterShared> neighbor_payload(neighbor_ids.size());
            std::vector<std::vector<int>> interface_ids(neighbor_ids.size());
            for (size_t jn = 0; jn < neighbor_ids.size(); ++jn) {
                const int j = neighbor_ids[jn];
                IterShared mine;
                mine.frame = frame;
                mine.attempt = attempt;
                mine.k = k;
                mine.from_worker = worker_;
                mine.to_worker = j;
                for (int i = 0; i < ns; ++i) {
                    if (!(mask[shared[i]] & (1u << j))) continue;
                    IterSharedBody sb;
                    sb.id = shared[i];
                    sb.q = q_[shared[i]];
                    sb.rho = rho[i];
                    sb.u = u[i];
                    mine.bodies.push_back(sb);
                    interface_ids[jn].push_back(shared[i]);
                }
                links_.neighbors[j]->send(mine);
            }
            for (size_t jn = 0; jn < neighbor_ids.size(); ++jn) {
                const int j = neighbor_ids[jn];
                const ProtocolMessage m = timed_recv(*links_.neighbors[j]);
                const auto* theirs = expect<IterShared>(m, "IterShared");
                check_counters(frame, attempt, theirs->frame, theirs->attempt,
                               "IterShared");
                if (theirs->k != k)
                    throw Error("protocol error: stale iteration counter on IterShared");
                if (theirs->from_worker != j || theirs->to_worker != worker_)
                    throw Error("protocol error: IterShared from unexpected worker");
                if (theirs->bodies.size() != interface_ids[jn].size())
                    throw Error("protocol error: interface body-set mismatch "
                                "(partition desync)");
                for (size_t i = 0; i < interface_ids[jn].size(); ++i)
                    if (theirs->bodies[i].id != interface_ids[jn][i])
                        throw Error("protocol error: interface body-set mismatch "
                                    "(partition desync)");
                neighbor_payload[jn] = *theirs;
            }

            // Consensus, dual and residuals per shared body.
            std::vector<Vec6> z_next(ns);
            std::vector<double> r_body(ns, 0.0), s_body(ns, 0.0);
            double r_local = 0.0, s_local = 0.0;
            for (int i = 0; i < ns; ++i) {
                const int b = shared[i];
                std::vector<Vec6> replica_q, replica_qu;
                std::vector<double> replica_rho;
                for (int hw = 0; hw < num_workers_; ++hw) {
                    if (!(mask[b] & (1u << hw))) continue;
                    if (hw == worker_) {
                        replica_q.push_back(q_[b]);
                        replica_qu.push_back(q_[b] + u[i]);
                        replica_rho.push_back(rho[i]);
                    } else {
                        const auto it = std::find(neighbor_ids.begin(),
                                                  neighbor_ids.end(), hw);
                        const size_t jn = it - neighbor_ids.begin();
                        const IterSharedBody* entry = nullptr;
                        for (const IterSharedBody& sb : neighbor_payload[jn].bodies)
                            if (sb.id == b) entry = &sb;
                        if (!entry)
                            throw Error("protocol error: missing replica state");
                        if (entry->rho != rho[i])
                            throw Error("protocol error: replica rho mismatch");
                        replica_q.push_back(entry->q);
                        replica_qu.push_back(entry->q + entry->u);
                        replica_rho.push_back(entry->rho);
                    }
                }
                z_next[i] = consensus_update(replica_qu, replica_rho);
                u[i] = dual_update(u[i], q_[b], z_next[i]);
                r_body[i] = primal_residual_inf(replica_q, z_next[i]);
                s_body[i] = dual_residual_inf(z_next[i], z[i]);
                r_local = std::max(r_local, r_body[i]);
                s_local = std::max(s_local, s_body[i]);
            }

            const auto gate_t0 = Clock::now();
            const double toi =
                merge_ccd_gate(bodies, q_, shared, z_next, local_all);
            collision_time += seconds_since(gate_t0);

            IterationReport report;
            report.frame = frame;
            report.attempt = attempt;
            report.k = k;
            report.worker = worker_;
            report.dq_inf = dq_inf;
            report.r_local = r_local;
            report.s_local = s_local;
            report.toi = toi;
            report.newton_iters = last_newton_iters;
            report.active_contacts = last_active;
            report.candidate_pairs = last_candidates;
            report.sync_time = sync_time - sync_mark;
            const double compute_now = seconds_since(frame_t0) - sync_time;
            report.compute_time = compute_now - compute_mark;
            if (want_candidates) {
                for (int b : local_dynamic) {
                    if (std::popcount(mask[b]) >= 2 &&
                        std::countr_zero(mask[b]) != worker_)
                        continue; // another holder owns the report
                    BodyCandidate bc;
                    bc.id = b;
                    const auto si = std::lower_bound(shared.begin(), shared.end(), b);
                    bc.q = (si != shared.end() && *si == b)
                               ? z_next[si - shared.begin()]
                               : q_[b];
                    report.candidate_state.push_back(bc);
                }
            }
            links_.controller->send(report);
            sync_mark = sync_time;
            compute_mark = compute_now;

            const ProtocolMessage sm = timed_recv(*links_.controller);
            const auto* signal = expect<ControlSignal>(sm, "ControlSignal");
            check_counters(frame, attempt, signal->frame, signal->attempt,
                           "ControlSignal");
            if (signal->k != k)
                throw Error("protocol error: stale iteration counter on ControlSignal");

            if (signal->sigma == Signal::End) {
                z_commit = std::move(z_next);
                admm_iterations = k;
                committed = true;
                break;
            }
            if (signal->sigma == Signal::Fail)
                throw Error("run aborted by controller (frame failed)");
            if (signal->sigma == Signal::AbortRetry) {
                q_ = q_start;
                q_dot_ = qdot_start;
                return FrameOutcome{false};
            }
            if (scene_.adapt.adapt_enabled) {
                for (int i = 0; i < ns; ++i)
                    rho[i] = adapt_rho(rho[i], r_body[i], s_body[i], scene_.adapt,
                                       rho0[i]);
            }
            z = std::move(z_next);
        }

        const LocalObjective objective = build_objective();
        const Configs q_before = q_;
        const auto solve_t0 = Clock::now();
        const NewtonReport nrep = newton_solve(objective, q_, nopts);
        solve_time += seconds_since(solve_t0);
        dq_inf = objective.config_delta_inf(q_, q_before);
        last_newton_iters = nrep.iterations;
        total_newton += nrep.iterations;
        const auto count_t0 = Clock::now();
        objective.contact_counts(q_, last_active, last_candidates);
        collision_time += seconds_since(count_t0);
    }

    if (!committed)
        throw Error("protocol error: ADMM loop left without an end signal");

    rho_carry_.clear();
    for (int i = 0; i < ns; ++i) rho_carry_[shared[i]] = rho[i];

    finalize_merge(q_, q_dot_, q_start, h, shared, z_commit, local_dynamic, true);

    FrameCommit commit;
    commit.frame = frame;
    commit.attempt = attempt;
    commit.worker = worker_;
    commit.compute_time = seconds_since(frame_t0) - sync_time;
    commit.sync_time = sync_time;
    commit.solve_time = solve_time;
    commit.collision_time = collision_time;
    commit.newton_iters_total = total_newton;
    commit.admm_iterations = admm_iterations;
    commit.local_bodies = static_cast<int32_t>(local_dynamic.size());
    for (int b : local_dynamic) {
        if (std::popcount(mask[b]) >= 2 && std::countr_zero(mask[b]) != worker_)
            continue;
        CommittedBody cb;
        cb.id = b;
        cb.q = q_[b];
        cb.q_dot = q_dot_[b];
        commit.bodies.push_back(cb);
    }
    links_.controller->send(commit);

    held_ = new_held;
    return FrameOutcome{true};
}

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

ControllerSession::ControllerSession(const SceneData& scene,
                                     std::vector<ChannelPtr> workers,
                                     ControllerOptions options)
    : scene_(scene), workers_(std::move(workers)), options_(std::move(options)) {
    q_ = scene_.initial_configs();
    q_dot_ = scene_.initial_velocities();
    const int n = static_cast<int>(workers_.size());
    if (n < 1) throw Error("controller: no workers");
    if (static_cast<int>(scene_.planes.size()) < n - 1)
        throw Error("controller: scene has too few interface planes");
    planes_.assign(scene_.planes.begin(), scene_.planes.begin() + (n - 1));
}

void ControllerSession::broadcast(const ProtocolMessage& message) {
    for (const ChannelPtr& ch : workers_) ch->send(message);
}

void ControllerSession::run() {
    const int n = static_cast<int>(workers_.size());
    const std::vector<AffineBody>& bodies = scene_.bodies;
    TimestepController ts(scene_.params.h, scene_.max_halvings);
    Balancer balancer(n, scene_.balance);
    std::vector<double> frame_times(n, 0.0);
    bool have_times = false;
    double w = 0.0;

    for (int64_t frame = 0; frame < scene_.frames; ++frame) {
        if (scene_.balance_enabled && have_times && n > 1) {
            const auto dps = balancer.update(frame_times, planes_, w);
            for (size_t k = 0; k < dps.size(); ++k) {
                BalanceUpdate bu;
                bu.frame = frame;
                bu.interface_index = static_cast<int32_t>(k);
                bu.dp = dps[k];
                broadcast(bu);
            }
        }

        int32_t attempt = 0;
        while (true) {
            double v_max = 0.0;
            for (size_t b = 0; b < bodies.size(); ++b)
                if (!bodies[b].is_static)
                    v_max = std::max(v_max, max_vertex_speed(bodies[b], q_dot_[b]));
            w = overlap_width(v_max, ts.h(), scene_.w_min);

            FrameBegin fb;
            fb.frame = frame;
            fb.attempt = attempt;
            fb.h = ts.h();
            fb.w = w;
            fb.flags = options_.track_candidates ? 1 : 0;
            broadcast(fb);

            bool ended = false;
            bool retry = false;
            for (int32_t k = 2; k <= scene_.admm_max_iterations && !ended && !retry;
                 ++k) {
                std::vector<IterationReport> reports(n);
                for (int i = 0; i < n; ++i) {
                    const ProtocolMessage m =
                        workers_[i]->recv(options_.report_timeout);
                    const auto* rep = expect<IterationReport>(m, "IterationReport");
                    check_counters(frame, attempt, rep->frame, rep->attempt,
                                   "IterationReport");
                    if (rep->k != k || rep->worker != i)
                        throw Error("protocol error: unexpected report identity");
                    reports[i] = *rep;
                }

                IterationObservation obs;
                obs.frame = frame;
                obs.attempt = attempt;
                obs.k = k;
                for (const IterationReport& rep : reports) {
                    obs.dq_inf = std::max(obs.dq_inf, rep.dq_inf);
                    obs.r_inf = std::max(obs.r_inf, rep.r_local);
                    obs.s_inf = std::max(obs.s_inf, rep.s_local);
                    obs.min_toi = std::min(obs.min_toi, rep.toi);
                }
                std::vector<double> tois;
                for (const IterationReport& rep : reports) tois.push_back(rep.toi);

                const ControlDecision decision = check_stopping(
                    obs.dq_inf, obs.r_inf, obs.s_inf, tois, ts.h(),
                    scene_.params.scene_scale, scene_.params.theta);

                ControlSignal signal;
                signal.frame = frame;
                signal.attempt = attempt;
                signal.k = k;
                if (decision.end) {
                    signal.sigma = Signal::End;
                } else if (k == scene_.admm_max_iterations) {
                    if (ts.halvings() < scene_.max_halvings) {
                        signal.h_new = ts.on_frame_failed();
                        signal.sigma = Signal::AbortRetry;
                    } else {
                        signal.sigma = Signal::Fail;
                    }
                } else {
                    signal.sigma = Signal::Continue;
                }
                broadcast(signal);

                obs.sigma = signal.sigma;
                Configs candidate;
                if (options_.track_candidates) {
                    candidate = q_;
                    for (const IterationReport& rep : reports)
                        for (const BodyCandidate& bc : rep.candidate_state)
                            candidate[bc.id] = bc.q;
                    obs.candidate = &candidate;
                }
                obs.reports = std::move(reports);
                if (options_.on_iteration) options_.on_iteration(obs);

                if (signal.sigma == Signal::End) ended = true;
                if (signal.sigma == Signal::AbortRetry) retry = true;
                if (signal.sigma == Signal::Fail)
                    throw Error("frame failed: halving budget exhausted with a "
                                "blocked merge");
            }
            if (retry) {
                ++attempt;
                continue;
            }
            if (!ended)
                throw Error("controller: frame ended without a decision");

            std::vector<FrameCommit> commits(n);
            for (int i = 0; i < n; ++i) {
                const ProtocolMessage m = workers_[i]->recv(options_.report_timeout);
                const auto* commit = expect<FrameCommit>(m, "FrameCommit");
                check_counters(frame, attempt, commit->frame, commit->attempt,
                               "FrameCommit");
                if (commit->worker != i)
                    throw Error("protocol error: unexpected commit identity");
                commits[i] = *commit;
            }

            std::vector<char> seen(bodies.size(), 0);
            int admm_iterations = 0;
            for (const FrameCommit& commit : commits) {
                admm_iterations = std::max(admm_iterations, commit.admm_iterations);
                for (const CommittedBody& cb : commit.bodies) {
                    if (cb.id < 0 || cb.id >= static_cast<int>(bodies.size()) ||
                        bodies[cb.id].is_static || seen[cb.id])
                        throw Error("protocol error: bad or duplicate commit body");
                    seen[cb.id] = 1;
                    q_[cb.id] = cb.q;
                    q_dot_[cb.id] = cb.q_dot;
                }
            }
            for (size_t b = 0; b < bodies.size(); ++b)
                if (!bodies[b].is_static && !seen[b])
                    throw Error("protocol error: body lost at commit");

            for (int i = 0; i < n; ++i) frame_times[i] = commits[i].compute_time;
            have_times = true;
            const double frame_h = ts.h();
            ts.on_frame_committed();

            if (options_.on_commit) {
                CommitObservation obs;
                obs.frame = frame;
                obs.attempt = attempt;
                obs.h = frame_h;
                obs.admm_iterations = admm_iterations;
                obs.commits = std::move(commits);
                obs.q = &q_;
                obs.q_dot = &q_dot_;
                options_.on_commit(obs);
            }
            break;
        }
    }
    broadcast(Shutdown{});
}

} // namespace dabd
