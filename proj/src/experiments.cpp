#include "dabd/experiments.hpp"

#include "dabd/scene.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>

namespace dabd {

namespace {

const double kDensities[] = {10.0, 100.0, 1000.0, 10000.0, 100000.0};
const double kBetas[] = {0.01, 0.1, 1.0, 10.0, 100.0};

double mean_admm(const RunResult& result) {
    if (result.frames.empty()) return 0.0;
    double sum = 0.0;
    for (const FrameStats& f : result.frames) sum += f.admm_iterations;
    return sum / result.frames.size();
}

void ensure_dir(const std::string& dir) {
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

} // namespace

std::vector<BetaSweepRow> run_beta_sweep(const std::string& out_dir, int frames) {
    ensure_dir(out_dir);
    std::vector<BetaSweepRow> rows;
    for (double density : kDensities) {
        for (double beta : kBetas) {
            SceneData scene =
                make_scenario("density-sweep-" + std::to_string(static_cast<int>(density)));
            scene.frames = frames;
            scene.adapt.beta = beta;
            RunOptions opts;
            opts.workers = 2;
            const RunResult result = run_distributed(scene, opts);
            rows.push_back({density, beta, mean_admm(result)});
        }
    }
    if (!out_dir.empty()) {
        std::ofstream csv(out_dir + "/beta_sweep.csv");
        csv << "density,beta,mean_admm_iterations\n";
        for (const BetaSweepRow& row : rows)
            csv << row.density << ',' << row.beta << ',' << row.mean_admm_iterations
                << "\n";
        nlohmann::json summary;
        summary["experiment"] = "beta-sweep";
        summary["frames"] = frames;
        summary["rows"] = rows.size();
        for (double density : kDensities) {
            double best = 1e300, at_one = 0.0;
            for (const BetaSweepRow& row : rows) {
                if (row.density != density) continue;
                best = std::min(best, row.mean_admm_iterations);
                if (row.beta == 1.0) at_one = row.mean_admm_iterations;
            }
            summary["beta1_over_best"].push_back(at_one / best);
        }
        std::ofstream(out_dir + "/summary.json") << summary.dump(2) << "\n";
    }
    return rows;
}

std::vector<AblationRow> run_ablation(const std::string& out_dir, int frames) {
    ensure_dir(out_dir);
    std::vector<AblationRow> rows;
    for (double density : kDensities) {
        SceneData scene =
            make_scenario("density-sweep-" + std::to_string(static_cast<int>(density)));
        scene.frames = frames;
        RunOptions opts;
        opts.workers = 2;

        scene.adapt.adapt_enabled = true;
        const double adaptive = mean_admm(run_distributed(scene, opts));
        scene.adapt.adapt_enabled = false;
        const double fixed = mean_admm(run_distributed(scene, opts));
        rows.push_back({density, adaptive, fixed, 1.0 - adaptive / fixed});
    }
    if (!out_dir.empty()) {
        std::ofstream csv(out_dir + "/ablation.csv");
        csv << "density,adaptive_mean_admm,fixed_mean_admm,reduction\n";
        for (const AblationRow& row : rows)
            csv << row.density << ',' << row.adaptive_mean << ',' << row.fixed_mean
                << ',' << row.reduction << "\n";
        nlohmann::json summary;
        summary["experiment"] = "ablation";
        summary["frames"] = frames;
        for (const AblationRow& row : rows) summary["reductions"].push_back(row.reduction);
        std::ofstream(out_dir + "/summary.json") << summary.dump(2) << "\n";
    }
    return rows;
}

std::vector<ScalingRow> run_scaling(const std::string& out_dir, int frames) {
    ensure_dir(out_dir);
    std::vector<ScalingRow> rows;
    // Strong scaling: the same 64-body scene split across 1, 2 or 4 workers.
    const SceneData base = make_scenario("drop-grid-4");
    for (int workers : {1, 2, 4}) {
        SceneData scene = base;
        scene.frames = frames;
        if (workers == 1) scene.planes.clear();
        if (workers == 2) scene.planes = {base.planes[1]}; // the middle plane
        RunOptions opts;
        opts.workers = workers;
        const RunResult result = run_distributed(scene, opts);

        ScalingRow row;
        row.workers = workers;
        row.mean_admm_iterations = mean_admm(result);
        double workload = 0.0;
        for (const FrameStats& f : result.frames) {
            double worst = 0.0;
            for (size_t i = 0; i < f.newton_iters.size(); ++i) {
                const double per_solve =
                    f.admm_iterations > 0
                        ? static_cast<double>(f.newton_iters[i]) / f.admm_iterations
                        : 0.0;
                worst = std::max(worst, per_solve * f.local_bodies[i]);
            }
            workload += worst;
            for (size_t i = 0; i < f.t_solve.size(); ++i) {
                row.t_solve += f.t_solve[i];
                row.t_coll += f.t_coll[i];
                row.t_sync += f.t_sync[i];
            }
        }
        row.mean_newton_body_workload = workload / std::max<size_t>(1, result.frames.size());
        const double nf = std::max<size_t>(1, result.frames.size());
        row.t_solve /= nf * workers;
        row.t_coll /= nf * workers;
        row.t_sync /= nf * workers;
        row.t_frame = result.wall_time / nf;
        rows.push_back(row);
    }
    if (!out_dir.empty()) {
        std::ofstream csv(out_dir + "/scaling.csv");
        csv << "workers,mean_admm_iterations,mean_newton_body_workload,t_solve,"
               "t_coll,t_sync,t_frame\n";
        for (const ScalingRow& row : rows)
            csv << row.workers << ',' << row.mean_admm_iterations << ','
                << row.mean_newton_body_workload << ',' << row.t_solve << ','
                << row.t_coll << ',' << row.t_sync << ',' << row.t_frame << "\n";
        nlohmann::json summary;
        summary["experiment"] = "scaling";
        summary["frames"] = frames;
        for (const ScalingRow& row : rows)
            summary["workload"].push_back(row.mean_newton_body_workload);
        std::ofstream(out_dir + "/summary.json") << summary.dump(2) << "\n";
    }
    return rows;
}

std::vector<AuditRow> run_audit(const std::string& out_dir, int frames) {
    ensure_dir(out_dir);
    std::vector<AuditRow> rows;
    for (const std::string& name : scenario_names()) {
        SceneData scene = make_scenario(name);
        scene.frames = frames;
        RunOptions opts;
        opts.workers = 2;
        if (name == "drop-grid-1") opts.workers = 1;
        if (name == "drop-grid-4") opts.workers = 4;
        opts.audit = true;
        const RunResult result = run_distributed(scene, opts);
        rows.push_back({name, opts.workers,
                        static_cast<int>(result.trajectory.q.size()),
                        result.intersection_violations, mean_admm(result)});
    }
    if (!out_dir.empty()) {
        std::ofstream csv(out_dir + "/audit.csv");
        csv << "scenario,workers,frames,violations,mean_admm_iterations\n";
        for (const AuditRow& row : rows)
            csv << row.scenario << ',' << row.workers << ',' << row.frames << ','
                << row.violations << ',' << row.mean_admm_iterations << "\n";
        nlohmann::json summary;
        summary["experiment"] = "audit";
        int total = 0;
        for (const AuditRow& row : rows) total += row.violations;
        summary["total_violations"] = total;
        std::ofstream(out_dir + "/summary.json") << summary.dump(2) << "\n";
    }
    return rows;
}

} // namespace dabd
