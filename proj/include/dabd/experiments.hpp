#pragma once

#include "dabd/sim.hpp"

#include <string>

namespace dabd {

// Desk-scale study drivers. Each writes one CSV plus summary.json into
// out_dir and returns the tabulated rows for programmatic checks.

// Mean ADMM iterations per frame over the density x beta grid.
struct BetaSweepRow {
    double density = 0.0;
    double beta = 0.0;
    double mean_admm_iterations = 0.0;
};
std::vector<BetaSweepRow> run_beta_sweep(const std::string& out_dir,
                                         int frames = 60);

// Residual-driven adaptation vs fixed penalty, per density level.
struct AblationRow {
    double density = 0.0;
    double adaptive_mean = 0.0;
    double fixed_mean = 0.0;
    double reduction = 0.0; // 1 - adaptive/fixed
};
std::vector<AblationRow> run_ablation(const std::string& out_dir, int frames = 60);

// Iteration counts and the per-frame timing breakdown on drop-grid at
// N = 1, 2, 4 workers.
struct ScalingRow {
    int workers = 0;
    double mean_admm_iterations = 0.0;
    double mean_newton_body_workload = 0.0; // max over workers, see README
    double t_solve = 0.0;
    double t_coll = 0.0;
    double t_sync = 0.0;
    double t_frame = 0.0;
};
std::vector<ScalingRow> run_scaling(const std::string& out_dir, int frames = 60);

// Runs every scenario generator with per-frame interpenetration audits.
struct AuditRow {
    std::string scenario;
    int workers = 0;
    int frames = 0;
    int violations = 0;
    double mean_admm_iterations = 0.0;
};
std::vector<AuditRow> run_audit(const std::string& out_dir, int frames = 300);

} // namespace dabd
