#pragma once

#include "dabd/consensus.hpp"
#include "dabd/scene.hpp"
#include "dabd/transport.hpp"

#include <functional>
#include <map>

namespace dabd {

// Channels a worker uses: one to the controller, one per neighbor.
struct WorkerLinks {
    ChannelPtr controller;
    std::map<int, ChannelPtr> neighbors;
};

// Symmetric IterShared swap with a neighbor: sends `mine`, returns the
// neighbor's payload. Rejects stale counters, wrong senders and interface
// body-set mismatches (partition desync).
IterShared neighbor_exchange(Channel& channel, const IterShared& mine,
                             int expected_from,
                             const std::vector<int>& expected_ids);

// One worker of Algorithm-style consensus ADMM: frame init fetch, local
// build and prediction, warm start, the ADMM loop (neighbor fetch, consensus
// and dual updates, metric evaluation, report/signal, penalty update, local
// solve), merge and commit. Runs until the controller sends Shutdown.
class WorkerSession {
  public:
    WorkerSession(int worker, int num_workers, const SceneData& scene,
                  WorkerLinks links);
    void run();

  private:
    struct FrameOutcome {
        bool committed = false; // false: abort-retry, wait for new FrameBegin
    };
    FrameOutcome run_frame(int64_t frame, int32_t attempt, double h, double w,
                           bool want_candidates);

    int worker_;
    int num_workers_;
    const SceneData& scene_;
    WorkerLinks links_;

    Configs q_, q_dot_;
    std::vector<Plane> planes_;
    std::vector<char> held_; // authoritative dynamic bodies (by body index)
    std::map<int, double> rho_carry_; // adapted penalties, kept across frames
};

// Per-iteration aggregates handed to the metrics sink.
struct IterationObservation {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t k = 0;
    std::vector<IterationReport> reports; // by worker id
    double dq_inf = 0.0;
    double r_inf = 0.0;
    double s_inf = 0.0;
    double min_toi = 1.0;
    Signal sigma = Signal::Continue;
    // Candidate global state (internal q / shared z), filled when candidate
    // tracking is on.
    const Configs* candidate = nullptr;
};

struct CommitObservation {
    int64_t frame = 0;
    int32_t attempt = 0;
    double h = 0.0;
    int admm_iterations = 0;
    std::vector<FrameCommit> commits; // by worker id
    const Configs* q = nullptr;       // committed global state
    const Configs* q_dot = nullptr;
};

struct ControllerOptions {
    bool track_candidates = false; // request per-iteration candidate states
    std::function<void(const IterationObservation&)> on_iteration;
    std::function<void(const CommitObservation&)> on_commit;
    std::chrono::milliseconds report_timeout{60000};
};

// The controller: drives frames, aggregates reports, applies the global
// stopping rule, broadcasts control signals, adapts the time step on
// failure, and runs the load balancer between frames.
class ControllerSession {
  public:
    ControllerSession(const SceneData& scene, std::vector<ChannelPtr> workers,
                      ControllerOptions options);
    void run();

    const Configs& state() const { return q_; }
    const Configs& velocities() const { return q_dot_; }

  private:
    void broadcast(const ProtocolMessage& message);

    const SceneData& scene_;
    std::vector<ChannelPtr> workers_;
    ControllerOptions options_;

    Configs q_, q_dot_;
    std::vector<Plane> planes_;
};

} // namespace dabd
