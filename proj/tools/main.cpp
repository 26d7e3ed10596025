// Command-line front end over the shared-library C API.

#include <dabd.h>

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <string>

namespace {

struct SceneHandle {
    dabd_scene* scene = nullptr;
    ~SceneHandle() { dabd_scene_free(scene); }
};

int fail(const char* what) {
    std::fprintf(stderr, "error: %s: %s\n", what, dabd_last_error());
    return 1;
}

int load_scene(const std::string& spec, int frames, double theta, int64_t seed,
               SceneHandle& handle) {
    dabd_status status;
    const std::string builtin_prefix = "builtin:";
    if (spec.rfind(builtin_prefix, 0) == 0) {
        status = dabd_scene_builtin(spec.substr(builtin_prefix.size()).c_str(),
                                    &handle.scene);
    } else {
        status = dabd_scene_load_file(spec.c_str(), &handle.scene);
    }
    if (status != DABD_OK) return fail("loading scene");
    if (seed >= 0 &&
        dabd_scene_set_seed(handle.scene, static_cast<uint64_t>(seed)) != DABD_OK)
        return fail("applying seed");
    if (frames >= 0 && dabd_scene_set_frames(handle.scene, frames) != DABD_OK)
        return fail("applying frame count");
    if (theta > 0.0 && dabd_scene_set_theta(handle.scene, theta) != DABD_OK)
        return fail("applying theta");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed affine-body dynamics with consensus ADMM"};
    app.require_subcommand(1);
    app.set_version_flag("--version", dabd_version());

    std::string scene_spec, out_dir, transport = "inproc", reference_dir;
    int workers = 1;
    int frames = -1;
    double theta = 0.0;
    int64_t seed = -1;
    uint16_t port = 0;
    bool audit = false;

    auto add_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--frames", frames, "Frame count override");
        cmd->add_option("--theta", theta, "Convergence threshold override");
        cmd->add_option("--seed", seed, "Placement jitter seed override");
    };

    CLI::App* simulate =
        app.add_subcommand("simulate", "Run the distributed solver");
    simulate->add_option("--scene", scene_spec,
                         "Scene file or builtin:<name>")->required();
    simulate->add_option("--workers", workers, "Worker count")->check(CLI::Range(1, 32));
    simulate->add_option("--transport", transport, "inproc or tcp")
        ->check(CLI::IsMember({"inproc", "tcp"}));
    simulate->add_option("--out", out_dir, "Output directory")->required();
    simulate->add_option("--reference", reference_dir,
                         "Reference snapshot directory (enables the error column)");
    simulate->add_option("--port", port, "Controller TCP port (0 = ephemeral)");
    simulate->add_flag("--audit", audit, "Interpenetration audit on every frame");
    add_overrides(simulate);

    CLI::App* reference =
        app.add_subcommand("reference", "Run the single-domain reference solver");
    reference->add_option("--scene", scene_spec, "Scene file or builtin:<name>")
        ->required();
    reference->add_option("--out", out_dir, "Output directory")->required();
    add_overrides(reference);

    std::string experiment_name;
    CLI::App* experiment =
        app.add_subcommand("experiment", "Run a study driver");
    experiment
        ->add_option("name", experiment_name,
                     "beta-sweep | ablation | scaling | audit")
        ->required()
        ->check(CLI::IsMember({"beta-sweep", "ablation", "scaling", "audit"}));
    experiment->add_option("--out", out_dir, "Output directory")->required();
    experiment->add_option("--frames", frames, "Frames per run override");

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) {
        SceneHandle handle;
        if (int rc = load_scene(scene_spec, frames, theta, seed, handle)) return rc;
        if (dabd_run_simulation(handle.scene, workers, transport.c_str(),
                                out_dir.c_str(),
                                reference_dir.empty() ? nullptr
                                                      : reference_dir.c_str(),
                                audit ? 1 : 0, port) != DABD_OK)
            return fail("simulation");
        std::printf("simulated into %s\n", out_dir.c_str());
        return 0;
    }
    if (reference->parsed()) {
        SceneHandle handle;
        if (int rc = load_scene(scene_spec, frames, theta, seed, handle)) return rc;
        if (dabd_run_reference(handle.scene, out_dir.c_str()) != DABD_OK)
            return fail("reference run");
        std::printf("reference trajectory written to %s\n", out_dir.c_str());
        return 0;
    }
    if (experiment->parsed()) {
        if (dabd_run_experiment(experiment_name.c_str(), out_dir.c_str(),
                                frames) != DABD_OK)
            return fail("experiment");
        std::printf("experiment '%s' written to %s\n", experiment_name.c_str(),
                    out_dir.c_str());
        return 0;
    }
    return 1;
}
