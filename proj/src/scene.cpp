#include "dabd/scene.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace dabd {

namespace {

using nlohmann::json;

// Deterministic jitter source (splitmix64); std distributions are not
// portable across implementations.
class JitterRng {
  public:
    explicit JitterRng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double uniform(double lo, double hi) {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        z = z ^ (z >> 31);
        const double u = static_cast<double>(z >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

  private:
    uint64_t state_;
};

void require_keys(const json& obj, const char* where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw Error(std::string("scene: ") + where + " must be an object");
    for (const auto& [key, value] : obj.items())
        if (!allowed.count(key))
            throw Error(std::string("scene: unknown key '") + key + "' in " + where);
}

Vec2 parse_vec2(const json& v, const char* where) {
    if (!v.is_array() || v.size() != 2)
        throw Error(std::string("scene: ") + where + " must be [x, y]");
    return Vec2(v[0].get<double>(), v[1].get<double>());
}

Loop box_loop(const Vec2& center, const Vec2& half) {
    return {center + Vec2(-half.x(), -half.y()), center + Vec2(half.x(), -half.y()),
            center + Vec2(half.x(), half.y()), center + Vec2(-half.x(), half.y())};
}

Loop ngon_loop(const Vec2& center, double radius, int sides, double phase) {
    Loop loop;
    for (int i = 0; i < sides; ++i) {
        const double a = phase + 2.0 * M_PI * i / sides;
        loop.push_back(center + radius * Vec2(std::cos(a), std::sin(a)));
    }
    return loop;
}

// CCW quad around the segment a-b with the given thickness.
Loop thick_segment_loop(const Vec2& a, const Vec2& b, double thickness) {
    const Vec2 d = (b - a).normalized();
    const Vec2 n(-d.y(), d.x());
    const Vec2 t = 0.5 * thickness * n;
    Loop loop = {a - t, b - t, b + t, a + t};
    if (loop_moments(loop).area < 0.0) std::reverse(loop.begin(), loop.end());
    return loop;
}

Loop rotate_loop(const Loop& loop, const Vec2& pivot, double angle) {
    Mat2 r;
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    Loop out;
    out.reserve(loop.size());
    for (const Vec2& v : loop) out.push_back(pivot + r * (v - pivot));
    return out;
}

struct BodySpec {
    std::vector<Loop> loops;
    double density = 1000.0;
    Vec6 velocity = Vec6::Zero();
    bool is_static = false;
    double arap_scale = 1.0;
    bool has_force_split = false;
    Vec2 force_split{0.0, 0.0};
};

void push_body(SceneData& scene, const BodySpec& spec) {
    const int id = static_cast<int>(scene.bodies.size());
    AffineBody body = make_affine_body(id, spec.loops, spec.density, spec.is_static);
    body.q_dot = spec.velocity;
    body.arap_scale = spec.arap_scale;
    scene.bodies.push_back(std::move(body));
    if (spec.has_force_split) scene.replica_force_split[id] = spec.force_split;
}

Vec6 parse_velocity(const json& v) {
    Vec6 out = Vec6::Zero();
    if (!v.is_array() || (v.size() != 2 && v.size() != 6))
        throw Error("scene: velocity must have 2 or 6 entries");
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i].get<double>();
    return out;
}

} // namespace

SceneData parse_scene_json(const std::string& text) {
    json root = json::parse(text);
    require_keys(root, "root",
                 {"name", "frames", "seed", "params", "adapt", "admm", "partition",
                  "balance", "bodies", "grids", "force_split_frames"});

    SceneData scene;
    scene.name = root.value("name", "scene");
    scene.frames = root.value("frames", 100);
    scene.seed = root.value("seed", uint64_t{0});
    scene.force_split_frames = root.value("force_split_frames", -1);

    if (root.contains("params")) {
        const json& p = root["params"];
        require_keys(p, "params",
                     {"h", "gravity", "arap_stiffness", "barrier_stiffness", "d_hat",
                      "theta", "scene_scale"});
        if (p.contains("h")) scene.params.h = p["h"].get<double>();
        if (p.contains("gravity")) scene.params.gravity = parse_vec2(p["gravity"], "gravity");
        if (p.contains("arap_stiffness"))
            scene.params.arap_stiffness = p["arap_stiffness"].get<double>();
        if (p.contains("barrier_stiffness"))
            scene.params.barrier_stiffness = p["barrier_stiffness"].get<double>();
        if (p.contains("d_hat")) scene.params.d_hat = p["d_hat"].get<double>();
        if (p.contains("theta")) scene.params.theta = p["theta"].get<double>();
        if (p.contains("scene_scale"))
            scene.params.scene_scale = p["scene_scale"].get<double>();
    }
    if (root.contains("adapt")) {
        const json& a = root["adapt"];
        require_keys(a, "adapt", {"beta", "tau", "mu", "sigma_min", "sigma_max", "enabled"});
        if (a.contains("beta")) scene.adapt.beta = a["beta"].get<double>();
        if (a.contains("tau")) scene.adapt.tau = a["tau"].get<double>();
        if (a.contains("mu")) scene.adapt.mu = a["mu"].get<double>();
        if (a.contains("sigma_min")) scene.adapt.sigma_min = a["sigma_min"].get<double>();
        if (a.contains("sigma_max")) scene.adapt.sigma_max = a["sigma_max"].get<double>();
        if (a.contains("enabled")) scene.adapt.adapt_enabled = a["enabled"].get<bool>();
    }
    if (root.contains("admm")) {
        const json& a = root["admm"];
        require_keys(a, "admm", {"max_iterations", "newton_cap", "max_halvings"});
        if (a.contains("max_iterations"))
            scene.admm_max_iterations = a["max_iterations"].get<int>();
        if (a.contains("newton_cap")) scene.newton_cap = a["newton_cap"].get<int>();
        if (a.contains("max_halvings")) scene.max_halvings = a["max_halvings"].get<int>();
    }
    if (root.contains("partition")) {
        const json& p = root["partition"];
        require_keys(p, "partition", {"planes", "w_min"});
        if (p.contains("w_min")) scene.w_min = p["w_min"].get<double>();
        if (p.contains("planes")) {
            for (const json& pl : p["planes"]) {
                require_keys(pl, "plane", {"point", "normal"});
                Plane plane;
                plane.point = parse_vec2(pl["point"], "plane point");
                plane.normal = parse_vec2(pl["normal"], "plane normal").normalized();
                scene.planes.push_back(plane);
            }
        }
    }
    if (root.contains("balance")) {
        const json& b = root["balance"];
        require_keys(b, "balance", {"enabled", "kp", "kd", "smoothing", "dp_max"});
        if (b.contains("enabled")) scene.balance_enabled = b["enabled"].get<bool>();
        if (b.contains("kp")) scene.balance.kp = b["kp"].get<double>();
        if (b.contains("kd")) scene.balance.kd = b["kd"].get<double>();
        if (b.contains("smoothing")) scene.balance.smoothing = b["smoothing"].get<double>();
        if (b.contains("dp_max")) scene.balance.dp_max = b["dp_max"].get<double>();
    }

    if (root.contains("bodies")) {
        for (const json& b : root["bodies"]) {
            require_keys(b, "body",
                         {"kind", "center", "half_extents", "radius", "sides", "loops",
                          "density", "velocity", "static", "rotation", "arap_scale",
                          "force_split", "from", "to", "thickness"});
            BodySpec spec;
            spec.density = b.value("density", 1000.0);
            spec.is_static = b.value("static", false);
            spec.arap_scale = b.value("arap_scale", 1.0);
            if (b.contains("velocity")) spec.velocity = parse_velocity(b["velocity"]);
            if (b.contains("force_split")) {
                spec.has_force_split = true;
                spec.force_split = parse_vec2(b["force_split"], "force_split");
            }
            const std::string kind = b.value("kind", "box");
            if (kind == "box") {
                const Vec2 c = parse_vec2(b.at("center"), "center");
                const Vec2 half = parse_vec2(b.at("half_extents"), "half_extents");
                Loop loop = box_loop(c, half);
                if (b.contains("rotation"))
                    loop = rotate_loop(loop, c, b["rotation"].get<double>());
                spec.loops = {loop};
            } else if (kind == "ngon") {
                const Vec2 c = parse_vec2(b.at("center"), "center");
                spec.loops = {ngon_loop(c, b.at("radius").get<double>(),
                                        b.at("sides").get<int>(),
                                        b.value("rotation", 0.0))};
            } else if (kind == "bar") {
                spec.loops = {thick_segment_loop(parse_vec2(b.at("from"), "from"),
                                                 parse_vec2(b.at("to"), "to"),
                                                 b.at("thickness").get<double>())};
            } else if (kind == "polygon") {
                for (const json& loop : b.at("loops")) {
                    Loop l;
                    for (const json& v : loop) l.push_back(parse_vec2(v, "vertex"));
                    spec.loops.push_back(std::move(l));
                }
            } else {
                throw Error("scene: unknown body kind '" + kind + "'");
            }
            push_body(scene, spec);
        }
    }

    if (root.contains("grids")) {
        JitterRng rng(scene.seed);
        for (const json& g : root["grids"]) {
            require_keys(g, "grid",
                         {"kind", "half_extents", "radius", "sides", "rows", "cols",
                          "origin", "spacing", "jitter", "density", "velocity",
                          "arap_scale"});
            const int rows = g.at("rows").get<int>();
            const int cols = g.at("cols").get<int>();
            const Vec2 origin = parse_vec2(g.at("origin"), "origin");
            const Vec2 spacing = parse_vec2(g.at("spacing"), "spacing");
            const double jitter = g.value("jitter", 0.0);
            const std::string kind = g.value("kind", "box");
            for (int r = 0; r < rows; ++r) {
                for (int c = 0; c < cols; ++c) {
                    BodySpec spec;
                    spec.density = g.value("density", 1000.0);
                    spec.arap_scale = g.value("arap_scale", 1.0);
                    if (g.contains("velocity")) spec.velocity = parse_velocity(g["velocity"]);
                    Vec2 center = origin + Vec2(c * spacing.x(), r * spacing.y());
                    center += Vec2(rng.uniform(-jitter, jitter),
                                   rng.uniform(-jitter, jitter));
                    if (kind == "box") {
                        spec.loops = {box_loop(center,
                                               parse_vec2(g.at("half_extents"),
                                                          "half_extents"))};
                    } else if (kind == "ngon") {
                        spec.loops = {ngon_loop(center, g.at("radius").get<double>(),
                                                g.at("sides").get<int>(),
                                                rng.uniform(0.0, 2.0 * M_PI))};
                    } else {
                        throw Error("scene: unknown grid kind '" + kind + "'");
                    }
                    push_body(scene, spec);
                }
            }
        }
    }

    scene.params.validate();
    scene.adapt.validate();
    if (scene.frames < 0 || scene.admm_max_iterations < 2 || scene.newton_cap < 1)
        throw Error("scene: invalid iteration limits");
    return scene;
}

SceneData load_scene_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("scene: cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_scene_json(buffer.str());
}

std::string scene_to_json(const SceneData& scene) {
    json root;
    root["name"] = scene.name;
    root["frames"] = scene.frames;
    root["seed"] = scene.seed;
    if (scene.force_split_frames >= 0)
        root["force_split_frames"] = scene.force_split_frames;
    root["params"] = {{"h", scene.params.h},
                      {"gravity", {scene.params.gravity.x(), scene.params.gravity.y()}},
                      {"arap_stiffness", scene.params.arap_stiffness},
                      {"barrier_stiffness", scene.params.barrier_stiffness},
                      {"d_hat", scene.params.d_hat},
                      {"theta", scene.params.theta},
                      {"scene_scale", scene.params.scene_scale}};
    root["adapt"] = {{"beta", scene.adapt.beta},
                     {"tau", scene.adapt.tau},
                     {"mu", scene.adapt.mu},
                     {"sigma_min", scene.adapt.sigma_min},
                     {"sigma_max", scene.adapt.sigma_max},
                     {"enabled", scene.adapt.adapt_enabled}};
    root["admm"] = {{"max_iterations", scene.admm_max_iterations},
                    {"newton_cap", scene.newton_cap},
                    {"max_halvings", scene.max_halvings}};
    json planes = json::array();
    for (const Plane& p : scene.planes)
        planes.push_back({{"point", {p.point.x(), p.point.y()}},
                          {"normal", {p.normal.x(), p.normal.y()}}});
    root["partition"] = {{"planes", planes}, {"w_min", scene.w_min}};
    root["balance"] = {{"enabled", scene.balance_enabled},
                       {"kp", scene.balance.kp},
                       {"kd", scene.balance.kd},
                       {"smoothing", scene.balance.smoothing},
                       {"dp_max", scene.balance.dp_max}};
    json bodies = json::array();
    for (const AffineBody& body : scene.bodies) {
        json b;
        b["kind"] = "polygon";
        json loops = json::array();
        for (const Loop& loop : body.rest_loops) {
            json l = json::array();
            for (const Vec2& v : loop) {
                const Vec2 world = world_point(body.q, v);
                l.push_back({world.x(), world.y()});
            }
            loops.push_back(l);
        }
        b["loops"] = loops;
        b["density"] = body.density;
        b["static"] = body.is_static;
        if (body.arap_scale != 1.0) b["arap_scale"] = body.arap_scale;
        json vel = json::array();
        for (int i = 0; i < 6; ++i) vel.push_back(body.q_dot[i]);
        b["velocity"] = vel;
        const auto split = scene.replica_force_split.find(body.id);
        if (split != scene.replica_force_split.end())
            b["force_split"] = {split->second.x(), split->second.y()};
        bodies.push_back(b);
    }
    root["bodies"] = bodies;
    return root.dump(2);
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

namespace {

SceneData funnel_analog(double density, uint64_t seed = 7) {
    SceneData scene;
    scene.name = "funnel-analog";
    scene.frames = 100;
    scene.seed = seed;
    scene.params.h = 0.01;
    scene.params.gravity = Vec2(0.0, -10.0);
    scene.params.arap_stiffness = 1e8;
    scene.params.barrier_stiffness = 1e5;
    scene.params.d_hat = 0.01;
    scene.params.theta = 3e-4;
    scene.params.scene_scale = 4.0;
    scene.planes = {Plane{{0.0, 0.0}, {-1.0, 0.0}}};
    scene.w_min = 0.5;

    // Funnel-profile container spanning the worker boundary: a flat channel
    // floor with slanted guide walls, built as one static body so the loops
    // may overlap each other.
    BodySpec container;
    container.is_static = true;
    container.density = 1000.0;
    container.loops = {box_loop({0.0, -0.06}, {1.3, 0.06}),
                       thick_segment_loop({-1.24, -0.02}, {-2.0, 0.78}, 0.12),
                       thick_segment_loop({1.24, -0.02}, {2.0, 0.78}, 0.12)};
    push_body(scene, container);

    // Bodies released just above their lattice spots; the pile fills the
    // channel deterministically and wedges across the interface.
    JitterRng rng(scene.seed);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 8; ++c) {
            BodySpec spec;
            spec.density = density;
            Vec2 center(-0.98 + 0.28 * c, 0.145 + 0.45 * r);
            center += Vec2(rng.uniform(-0.012, 0.012), rng.uniform(-0.005, 0.005));
            spec.loops = {box_loop(center, {0.12, 0.12})};
            push_body(scene, spec);
        }
    }
    return scene;
}

SceneData drop_grid(int slabs, uint64_t seed = 11) {
    SceneData scene;
    scene.name = "drop-grid-" + std::to_string(slabs);
    scene.frames = 100;
    scene.seed = seed;
    scene.params.h = 0.01;
    scene.params.gravity = Vec2(0.0, -10.0);
    scene.params.arap_stiffness = 1e8;
    scene.params.barrier_stiffness = 1e4;
    scene.params.d_hat = 0.01;
    scene.params.theta = 1e-3;
    scene.params.scene_scale = 2.0 * slabs;
    scene.w_min = 0.4;
    const double width = 2.0 * slabs; // slab width 2 each
    for (int k = 1; k < slabs; ++k)
        scene.planes.push_back(Plane{{-width / 2.0 + 2.0 * k, 0.0}, {-1.0, 0.0}});

    BodySpec container;
    container.is_static = true;
    container.loops = {box_loop({0.0, -0.06}, {width / 2.0 + 0.2, 0.06}),
                       box_loop({-width / 2.0 - 0.14, 0.8}, {0.06, 0.8}),
                       box_loop({width / 2.0 + 0.14, 0.8}, {0.06, 0.8})};
    push_body(scene, container);

    JitterRng rng(scene.seed);
    for (int s = 0; s < slabs; ++s) {
        const double x0 = -width / 2.0 + 2.0 * s + 0.35;
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                BodySpec spec;
                spec.density = 1000.0;
                Vec2 center(x0 + 0.43 * c, 0.35 + 0.42 * r);
                center += Vec2(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
                spec.loops = {box_loop(center, {0.12, 0.12})};
                push_body(scene, spec);
            }
        }
    }
    return scene;
}

SceneData blocked_merge() {
    SceneData scene;
    scene.name = "blocked-merge";
    scene.frames = 3;
    scene.seed = 3;
    scene.params.h = 0.02;
    scene.params.gravity = Vec2(0.0, -10.0);
    scene.params.arap_stiffness = 1e8;
    scene.params.barrier_stiffness = 1e4;
    scene.params.d_hat = 0.01;
    scene.params.theta = 1e-3;
    scene.params.scene_scale = 2.0;
    scene.planes = {Plane{{0.0, 0.0}, {-1.0, 0.0}}};
    scene.w_min = 0.8;
    scene.admm_max_iterations = 40;
    scene.force_split_frames = 1; // drive the replicas apart on frame 0 only

    BodySpec floor;
    floor.is_static = true;
    floor.loops = {box_loop({0.0, -0.06}, {1.5, 0.06})};
    push_body(scene, floor);

    BodySpec obstacle;
    obstacle.is_static = true;
    obstacle.loops = {box_loop({0.0, 1.0}, {0.05, 0.3})};
    push_body(scene, obstacle);

    BodySpec body;
    body.density = 1000.0;
    body.loops = {box_loop({0.0, 1.7}, {0.15, 0.15})};
    body.velocity[1] = -20.0;
    body.has_force_split = true;
    body.force_split = Vec2(6.0e4, 0.0);
    push_body(scene, body);
    return scene;
}

SceneData heterogeneous(uint64_t seed = 13) {
    SceneData scene;
    scene.name = "heterogeneous";
    scene.frames = 100;
    scene.seed = seed;
    scene.params.h = 0.01;
    scene.params.gravity = Vec2(0.0, -10.0);
    scene.params.arap_stiffness = 1e6;
    scene.params.barrier_stiffness = 1e4;
    scene.params.d_hat = 0.01;
    scene.params.theta = 1e-3;
    scene.params.scene_scale = 4.0;
    scene.planes = {Plane{{0.0, 0.0}, {-1.0, 0.0}}};
    scene.w_min = 0.4;

    BodySpec container;
    container.is_static = true;
    container.loops = {box_loop({0.0, -0.06}, {2.2, 0.06}),
                       box_loop({-2.14, 0.8}, {0.06, 0.8}),
                       box_loop({2.14, 0.8}, {0.06, 0.8})};
    push_body(scene, container);

    // Three groups with (mass, stiffness) contrasts. Body area is 0.0576 m^2,
    // so the densities put the masses near 1, 100 and 10000 kg.
    const double area = 0.24 * 0.24;
    const struct {
        double mass;
        double arap_scale;
    } groups[3] = {{1.0, 1.0}, {100.0, 100.0}, {10000.0, 10000.0}};

    JitterRng rng(scene.seed);
    int placed = 0;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 8; ++c) {
            const auto& group = groups[placed % 3];
            BodySpec spec;
            spec.density = group.mass / area;
            spec.arap_scale = group.arap_scale;
            Vec2 center(-1.47 + 0.42 * c, 0.35 + 0.45 * r);
            center += Vec2(rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02));
            spec.loops = {box_loop(center, {0.12, 0.12})};
            push_body(scene, spec);
            ++placed;
        }
    }
    return scene;
}

SceneData regenerate_with_seed(const std::string& name, uint64_t seed) {
    if (name == "funnel-analog") return funnel_analog(1000.0, seed);
    if (name == "drop-grid-1") return drop_grid(1, seed);
    if (name == "drop-grid-2") return drop_grid(2, seed);
    if (name == "drop-grid-4") return drop_grid(4, seed);
    if (name == "heterogeneous") return heterogeneous(seed);
    if (name == "blocked-merge") {
        SceneData scene = blocked_merge();
        scene.seed = seed; // no jitter in this scene
        return scene;
    }
    const std::string prefix = "density-sweep-";
    if (name.rfind(prefix, 0) == 0) {
        const double density = std::stod(name.substr(prefix.size()));
        SceneData scene = funnel_analog(density, seed);
        scene.name = name;
        return scene;
    }
    throw Error("unknown scenario '" + name + "'");
}

} // namespace

SceneData make_scenario(const std::string& name) {
    if (name == "funnel-analog") return funnel_analog(1000.0);
    if (name == "drop-grid-1") return drop_grid(1);
    if (name == "drop-grid-2") return drop_grid(2);
    if (name == "drop-grid-4") return drop_grid(4);
    if (name == "blocked-merge") return blocked_merge();
    if (name == "heterogeneous") return heterogeneous();
    const std::string prefix = "density-sweep-";
    if (name.rfind(prefix, 0) == 0) {
        const double density = std::stod(name.substr(prefix.size()));
        SceneData scene = funnel_analog(density);
        scene.name = name;
        return scene;
    }
    throw Error("unknown scenario '" + name + "'");
}

SceneData make_scenario(const std::string& name, uint64_t seed) {
    return regenerate_with_seed(name, seed);
}

std::vector<std::string> scenario_names() {
    return {"funnel-analog",      "drop-grid-1",        "drop-grid-2",
            "drop-grid-4",        "density-sweep-10",   "density-sweep-100",
            "density-sweep-1000", "density-sweep-10000", "density-sweep-100000",
            "blocked-merge",      "heterogeneous"};
}

} // namespace dabd
