/* C interface to the upen navigation library.
 *
 * Every function returns a upen_status. On failure the message for the calling
 * thread is available from upen_last_error() until the next call on that thread.
 * Handles are opaque and owned by the caller; destroy functions accept NULL.
 */
#ifndef UPEN_UPEN_H
#define UPEN_UPEN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define UPEN_API __attribute__((visibility("default")))
#else
#define UPEN_API
#endif

typedef enum upen_status {
  UPEN_OK = 0,
  UPEN_ERR_INVALID_ARGUMENT = 1,
  UPEN_ERR_IO = 2,
  UPEN_ERR_GENERATION_FAILED = 3,
  UPEN_ERR_NO_EPISODE = 4,
  UPEN_ERR_TRAINING_DIVERGED = 5,
  UPEN_ERR_PLANNING = 6,
  UPEN_ERR_RUNTIME = 7
} upen_status;

typedef struct upen_config upen_config;
typedef struct upen_floorplan upen_floorplan;
typedef struct upen_ensemble upen_ensemble;

typedef struct upen_pose {
  double x_m;
  double z_m;
  double heading_deg;
} upen_pose;

typedef struct upen_episode {
  upen_pose start;
  double goal_x_m;
  double goal_z_m;
  double geodesic_m;
  double euclidean_m;
  double gedr;
  int32_t budget_steps;
} upen_episode;

typedef struct upen_metrics {
  double map_acc_m2;
  double iou_pct;
  double cov_m2;
  double cov_pct;
  int32_t success;
  double spl;
  int32_t steps_taken;
  double gd_m;
  double gedr;
  double path_m;
  double mean_step_ms;
} upen_metrics;

typedef struct upen_suite_summary {
  int32_t episodes;
  int32_t aborted;
  double success_rate;
  upen_metrics mean;
} upen_suite_summary;

UPEN_API const char* upen_version(void);
UPEN_API const char* upen_status_string(upen_status status);
UPEN_API const char* upen_last_error(void);

/* Configuration: sectioned key/value store, keys written "section.key". */
UPEN_API upen_status upen_config_create(upen_config** out);
UPEN_API void upen_config_destroy(upen_config* cfg);
UPEN_API upen_status upen_config_load(upen_config* cfg, const char* path);
UPEN_API upen_status upen_config_set(upen_config* cfg, const char* key, const char* value);
/* Copies the value into buf (NUL-terminated); *needed receives the full length plus one. */
UPEN_API upen_status upen_config_get(const upen_config* cfg, const char* key, char* buf, size_t buf_len,
                                     size_t* needed);

/* Floorplans. Generation uses the world.* keys of cfg (NULL selects defaults). */
UPEN_API upen_status upen_floorplan_generate(const upen_config* cfg, uint64_t seed, upen_floorplan** out);
UPEN_API upen_status upen_floorplan_load(const char* path, upen_floorplan** out);
UPEN_API upen_status upen_floorplan_save_ascii(const upen_floorplan* fp, const char* path);
UPEN_API upen_status upen_floorplan_save_pgm(const upen_floorplan* fp, const char* path);
UPEN_API upen_status upen_floorplan_size(const upen_floorplan* fp, int32_t* rows, int32_t* cols, double* cell_size_m);
/* Geodesic distance in metres; INFINITY when unreachable. */
UPEN_API upen_status upen_floorplan_geodesic(const upen_floorplan* fp, double ax, double az, double bx, double bz,
                                             double* out_m);
UPEN_API void upen_floorplan_destroy(upen_floorplan* fp);

UPEN_API upen_status upen_sample_episode(const upen_floorplan* fp, uint64_t seed, double min_geodesic_m,
                                         double min_gedr, int32_t budget_steps, upen_episode* out);

/* Trains an ensemble using the train.* keys and writes it to out_dir. */
UPEN_API upen_status upen_train(const upen_config* cfg, const char* out_dir);

UPEN_API upen_status upen_ensemble_load(const char* dir, upen_ensemble** out);
/* Members with all-zero weights (uniform predictions over unobserved cells). */
UPEN_API upen_status upen_ensemble_zero(int32_t members, upen_ensemble** out);
UPEN_API upen_status upen_ensemble_size(const upen_ensemble* ens, int32_t* members);
UPEN_API void upen_ensemble_destroy(upen_ensemble* ens);

/* One episode with the run.* and policy.* keys of cfg. artifact_dir may be NULL. */
UPEN_API upen_status upen_run_episode(const upen_config* cfg, const upen_floorplan* fp, const upen_ensemble* ens,
                                      const upen_episode* episode, const char* artifact_dir, upen_metrics* out);

/* The configured suite; ens NULL resolves members from run.weights / run.ensemble_size. */
UPEN_API upen_status upen_run_suite(const upen_config* cfg, const upen_ensemble* ens, const char* out_dir,
                                    upen_suite_summary* out);

/* Writes a markdown comparison of every summary.csv found under dir to out_path. */
UPEN_API upen_status upen_write_report(const char* dir, const char* out_path);

#ifdef __cplusplus
}
#endif

#endif
