#pragma once

#include "dabd/balance.hpp"
#include "dabd/params.hpp"
#include "dabd/partition.hpp"

#include <map>
#include <string>

namespace dabd {

// A fully instantiated scene: bodies with initial states plus every solver,
// consensus and runtime knob. Parsed from JSON scene files or produced by
// the built-in scenario generators.
struct SceneData {
    std::string name = "scene";
    std::vector<AffineBody> bodies;
    SimParams params;
    AdaptParams adapt;

    std::vector<Plane> planes; // interface planes, one per worker pair
    double w_min = 0.1;

    int frames = 100;
    int admm_max_iterations = 300; // K
    int newton_cap = 32;
    int max_halvings = 4;

    bool balance_enabled = false;
    Balancer::Options balance;

    // Worker-dependent lateral force on shared bodies (blocked-merge
    // scenario device): the lowest-rank holder applies +f, the other -f.
    // Active while frame < force_split_frames (negative: always).
    std::map<int, Vec2> replica_force_split;
    int force_split_frames = -1;

    uint64_t seed = 0;

    Configs initial_configs() const {
        Configs q(bodies.size());
        for (size_t i = 0; i < bodies.size(); ++i) q[i] = bodies[i].q;
        return q;
    }
    Configs initial_velocities() const {
        Configs v(bodies.size());
        for (size_t i = 0; i < bodies.size(); ++i) v[i] = bodies[i].q_dot;
        return v;
    }
    int dynamic_count() const {
        int n = 0;
        for (const AffineBody& b : bodies)
            if (!b.is_static) ++n;
        return n;
    }
};

// Strict JSON (de)serialization: unknown keys are rejected, round-trips are
// lossless. Geometry can be given inline or via grid generators with
// seed-deterministic jitter.
SceneData load_scene_file(const std::string& path);
SceneData parse_scene_json(const std::string& text);
std::string scene_to_json(const SceneData& scene);

// Built-in scenarios. Names: funnel-analog, drop-grid-1, drop-grid-2,
// drop-grid-4, density-sweep-<rho>, blocked-merge, heterogeneous. The seed
// override re-rolls the placement jitter.
SceneData make_scenario(const std::string& name);
SceneData make_scenario(const std::string& name, uint64_t seed);
std::vector<std::string> scenario_names();

} // namespace dabd
