#pragma once

#include "dabd/runtime.hpp"

#include <string>

namespace dabd {

struct Trajectory {
    std::vector<Configs> q;     // per committed frame
    std::vector<Configs> q_dot;
    std::vector<double> h;      // step actually used (adaptive)
};

// Mean squared error over the dynamic DoF; shared bodies enter at their
// consensus estimate since the committed state stores exactly that.
double mse_to_reference(const std::vector<AffineBody>& bodies, const Configs& q,
                        const Configs& q_ref);

struct MetricsRow {
    int64_t frame = 0;
    int32_t attempt = 0;
    int32_t k = 0;
    double r_inf = 0.0;
    double s_inf = 0.0;
    double min_toi = 1.0;
    int active_contacts = 0;
    int candidate_pairs = 0;
    double mse = std::numeric_limits<double>::quiet_NaN();
    bool commit_row = false;
    std::vector<double> dq_inf;      // per worker
    std::vector<int> newton_iters;   // per worker
    std::vector<double> t_compute;   // per worker (wall clock)
    std::vector<double> t_sync;      // per worker (wall clock)
};

struct FrameStats {
    int64_t frame = 0;
    int attempts = 1;
    double h = 0.0;
    int admm_iterations = 0;
    std::vector<int> newton_iters;  // per worker, frame total
    std::vector<int> local_bodies;  // per worker
    std::vector<double> t_compute;  // per worker
    std::vector<double> t_sync;     // per worker
    std::vector<double> t_solve;    // per worker
    std::vector<double> t_coll;     // per worker
};

struct RunResult {
    Trajectory trajectory;
    std::vector<MetricsRow> metrics;
    std::vector<FrameStats> frames;
    int intersection_violations = 0; // audited commits that interpenetrate
    double wall_time = 0.0;
};

enum class TransportKind { InProc, Tcp };

struct RunOptions {
    int workers = 1;
    TransportKind transport = TransportKind::InProc;
    std::string out_dir;                  // empty: write nothing
    const Trajectory* reference = nullptr; // enables per-iteration MSE
    bool audit = false;                   // intersection_test each commit
    uint16_t tcp_port = 0;                // 0: ephemeral
};

// Single-domain solver: implicit stepping of the full scene with the same
// inner solver and stopping rule, no partitioning, no consensus terms.
Trajectory run_reference(const SceneData& scene, const std::string& out_dir = "");

// Controller + N workers over the chosen transport (worker threads, real
// sockets for tcp). Writes metrics.csv, summary.json and per-frame snapshots
// when out_dir is set.
RunResult run_distributed(const SceneData& scene, const RunOptions& options);

// Reads frame_%04d.bin files from a directory into a trajectory (used to
// replay a stored reference run for error tracking).
Trajectory load_trajectory(const std::string& dir,
                           const std::vector<AffineBody>& bodies);

// Snapshot files: [u64 frame][u64 n_dynamic][per body: id(u64), 6x q, 6x
// q_dot as f64], bodies ascending by id.
void write_snapshot(const std::string& path, int64_t frame,
                    const std::vector<AffineBody>& bodies, const Configs& q,
                    const Configs& q_dot);
struct Snapshot {
    int64_t frame = 0;
    std::vector<int> ids;
    std::vector<Vec6> q;
    std::vector<Vec6> q_dot;
};
Snapshot read_snapshot(const std::string& path);

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows, int workers);

} // namespace dabd
