/* Distributed affine-body dynamics: C API.
 *
 * Opaque-handle interface over the simulation core. All functions return a
 * dabd_status; on failure dabd_last_error() describes the problem
 * (thread-local). Output directories receive metrics.csv, summary.json and
 * per-frame binary snapshots.
 */

#ifndef DABD_H
#define DABD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DABD_API __declspec(dllexport)
#else
#define DABD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dabd_status {
    DABD_OK = 0,
    DABD_ERR_IO = 1,      /* file missing / unreadable / unwritable */
    DABD_ERR_PARSE = 2,   /* malformed scene json */
    DABD_ERR_INVALID = 3, /* bad arguments or scene constraints violated */
    DABD_ERR_RUNTIME = 4, /* solver or protocol failure */
} dabd_status;

typedef struct dabd_scene dabd_scene;

DABD_API const char* dabd_version(void);
DABD_API const char* dabd_last_error(void);

/* Scene loading. Builtin names: funnel-analog, drop-grid-{1,2,4},
 * density-sweep-{10,100,1000,10000,100000}, blocked-merge, heterogeneous. */
DABD_API dabd_status dabd_scene_load_file(const char* path, dabd_scene** out);
DABD_API dabd_status dabd_scene_from_json(const char* text, dabd_scene** out);
DABD_API dabd_status dabd_scene_builtin(const char* name, dabd_scene** out);
DABD_API void dabd_scene_free(dabd_scene* scene);

/* Overrides (applied before running). Re-seeding re-rolls placement jitter. */
DABD_API dabd_status dabd_scene_set_frames(dabd_scene* scene, int frames);
DABD_API dabd_status dabd_scene_set_theta(dabd_scene* scene, double theta);
DABD_API dabd_status dabd_scene_set_seed(dabd_scene* scene, uint64_t seed);

DABD_API dabd_status dabd_scene_body_count(const dabd_scene* scene, int* out);
DABD_API dabd_status dabd_scene_name(const dabd_scene* scene, const char** out);

/* Single-domain reference solve; writes snapshots into out_dir. */
DABD_API dabd_status dabd_run_reference(const dabd_scene* scene,
                                        const char* out_dir);

/* Controller + N workers. transport: "inproc" or "tcp" (loopback sockets,
 * tcp_port 0 = ephemeral). reference_dir (nullable): a directory of
 * reference snapshots enabling the per-iteration error column. audit != 0
 * runs an interpenetration audit on every committed frame and fails the run
 * if one is found. */
DABD_API dabd_status dabd_run_simulation(const dabd_scene* scene, int workers,
                                         const char* transport,
                                         const char* out_dir,
                                         const char* reference_dir, int audit,
                                         uint16_t tcp_port);

/* Experiment drivers: "beta-sweep", "ablation", "scaling", "audit". */
DABD_API dabd_status dabd_run_experiment(const char* which, const char* out_dir,
                                         int frames);

#ifdef __cplusplus
}
#endif

#endif /* DABD_H */
