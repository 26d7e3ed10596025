#include "dabd.h"

#include "dabd/experiments.hpp"
#include "dabd/scene.hpp"
#include "dabd/sim.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& message) { g_last_error = message; }

template <typename Fn>
dabd_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        set_error(e.what());
        return DABD_ERR_PARSE;
    } catch (const dabd::Error& e) {
        set_error(e.what());
        return DABD_ERR_RUNTIME;
    } catch (const std::exception& e) {
        set_error(e.what());
        return DABD_ERR_RUNTIME;
    }
}

} // namespace

struct dabd_scene {
    dabd::SceneData data;
    // Kept for re-seeding: builtin name or original json text.
    std::string builtin;
    std::string source_json;
};

extern "C" {

const char* dabd_version(void) { return "1.0.0"; }

const char* dabd_last_error(void) { return g_last_error.c_str(); }

dabd_status dabd_scene_load_file(const char* path, dabd_scene** out) {
    if (!path || !out) {
        set_error("null argument");
        return DABD_ERR_INVALID;
    }
    return guarded([&] {
        auto scene = std::make_unique<dabd_scene>();
        try {
            scene->data = dabd::load_scene_file(path);
        } catch (const dabd::Error& e) {
            if (std::strstr(e.what(), "cannot open")) {
                set_error(e.what());
                return DABD_ERR_IO;
            }
            throw;
        }
        std::ifstream in(path);
        std::stringstream buf;
        buf << in.rdbuf();
        scene->source_json = buf.str();
        *out = scene.release();
        return DABD_OK;
    });
}

dabd_status dabd_scene_from_json(const char* text, dabd_scene** out) {
    if (!text || !out) {
        set_error("null argument");
        return DABD_ERR_INVALID;
    }
    return guarded([&] {
        auto scene = std::make_unique<dabd_scene>();
        scene->data = dabd::parse_scene_json(text);
        scene->source_json = text;
        *out = scene.release();
        return DABD_OK;
    });
}

dabd_status dabd_scene_builtin(const char* name, dabd_scene** out) {
    if (!name || !out) {
        set_error("null argument");
        return DABD_ERR_INVALID;
    }
    return guarded([&] {
        auto scene = std::make_unique<dabd_scene>();
        scene->data = dabd::make_scenario(name);
        scene->builtin = name;
        *out = scene.release();
        return DABD_OK;
    });
}

void dabd_scene_free(dabd_scene* scene) { delete scene; }

dabd_status dabd_scene_set_frames(dabd_scene* scene, int frames) {
    if (!scene || frames < 0) {
        set_error("invalid frames");
        return DABD_ERR_INVALID;
    }
    scene->data.frames = frames;
    return DABD_OK;
}

dabd_status dabd_scene_set_theta(dabd_scene* scene, double theta) {
    if (!scene || !(theta > 0.0)) {
        set_error("invalid theta");
        return DABD_ERR_INVALID;
    }
    scene->data.params.theta = theta;
    return DABD_OK;
}

dabd_status dabd_scene_set_seed(dabd_scene* scene, uint64_t seed) {
    if (!scene) {
        set_error("null scene");
        return DABD_ERR_INVALID;
    }
    return guarded([&] {
        const int frames = scene->data.frames;
        const double theta = scene->data.params.theta;
        if (!scene->builtin.empty()) {
            scene->data = dabd::make_scenario(scene->builtin, seed);
        } else if (!scene->source_json.empty()) {
            nlohmann::json root = nlohmann::json::parse(scene->source_json);
            root["seed"] = seed;
            scene->data = dabd::parse_scene_json(root.dump());
        } else {
            scene->data.seed = seed;
        }
        scene->data.frames = frames; // keep prior overrides sticky
        scene->data.params.theta = theta;
        return DABD_OK;
    });
}

dabd_status dabd_scene_body_count(const dabd_scene* scene, int* out) {
    if (!scene || !out) {
        set_error("null argument");
        return DABD_ERR_INVALID;
    }
    *out = static_cast<int>(scene->data.bodies.size());
    return DABD_OK;
}

dabd_status dabd_scene_name(const dabd_scene* scene, const char** out) {
    if (!scene || !out) {
        set_error("null argument");
        return DABD_ERR_INVALID;
    }
    *out = scene->data.name.c_str();
    return DABD_OK;
}

dabd_status dabd_run_reference(const dabd_scene* scene, const char* out_dir) {
    if (!scene) {
        set_error("null scene");
        return DABD_ERR_INVALID;
    }
    return guarded([&] {
        dabd::run_reference(scene->data, out_dir ? out_dir : "");
        return DABD_OK;
    });
}

dabd_status dabd_run_simulation(const dabd_scene* scene, int workers,
                                const char* transport, const char* out_dir,
                                const char* reference_dir, int audit,
                                uint16_t tcp_port) {
    if (!scene || workers < 1) {
        set_error("invalid scene or worker count");
        return DABD_ERR_INVALID;
    }
    dabd::RunOptions options;
    options.workers = workers;
    options.tcp_port = tcp_port;
    options.audit = audit != 0;
    if (out_dir) options.out_dir = out_dir;
    const std::string kind = transport ? transport : "inproc";
    if (kind == "inproc") {
        options.transport = dabd::TransportKind::InProc;
    } else if (kind == "tcp") {
        options.transport = dabd::TransportKind::Tcp;
    } else {
        set_error("transport must be 'inproc' or 'tcp'");
        return DABD_ERR_INVALID;
    }
    return guarded([&] {
        std::optional<dabd::Trajectory> reference;
        if (reference_dir && *reference_dir) {
            reference = dabd::load_trajectory(reference_dir, scene->data.bodies);
            options.reference = &*reference;
        }
        const dabd::RunResult result = dabd::run_distributed(scene->data, options);
        if (options.audit && result.intersection_violations > 0) {
            set_error("interpenetration detected on " +
                      std::to_string(result.intersection_violations) +
                      " committed frame(s)");
            return DABD_ERR_RUNTIME;
        }
        return DABD_OK;
    });
}

dabd_status dabd_run_experiment(const char* which, const char* out_dir,
                                int frames) {
    if (!which || !out_dir) {
        set_error("null argument");
        return DABD_ERR_INVALID;
    }
    const std::string name = which;
    return guarded([&] {
        if (name == "beta-sweep") {
            frames > 0 ? dabd::run_beta_sweep(out_dir, frames)
                       : dabd::run_beta_sweep(out_dir);
        } else if (name == "ablation") {
            frames > 0 ? dabd::run_ablation(out_dir, frames)
                       : dabd::run_ablation(out_dir);
        } else if (name == "scaling") {
            frames > 0 ? dabd::run_scaling(out_dir, frames)
                       : dabd::run_scaling(out_dir);
        } else if (name == "audit") {
            const auto rows = frames > 0 ? dabd::run_audit(out_dir, frames)
                                         : dabd::run_audit(out_dir);
            int violations = 0;
            for (const auto& row : rows) violations += row.violations;
            if (violations > 0) {
                set_error("audit found " + std::to_string(violations) +
                          " interpenetrating frame(s)");
                return DABD_ERR_RUNTIME;
            }
        } else {
            set_error("unknown experiment '" + name + "'");
            return DABD_ERR_INVALID;
        }
        return DABD_OK;
    });
}

} // extern "C"
