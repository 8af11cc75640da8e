#include "upen/upen.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "upen/runner.hpp"

struct upen_config {
  upen::Config cfg;
};
struct upen_floorplan {
  upen::Floorplan fp;
};
struct upen_ensemble {
  std::vector<upen::PredictorParams> members;
};

namespace {

thread_local std::string g_last_error;

upen_status to_status(upen::ErrorCode code) {
  switch (code) {
    case upen::ErrorCode::kInvalidArgument: return UPEN_ERR_INVALID_ARGUMENT;
    case upen::ErrorCode::kIo: return UPEN_ERR_IO;
    case upen::ErrorCode::kGenerationFailed: return UPEN_ERR_GENERATION_FAILED;
    case upen::ErrorCode::kNoEpisode: return UPEN_ERR_NO_EPISODE;
    case upen::ErrorCode::kTrainingDiverged: return UPEN_ERR_TRAINING_DIVERGED;
    case upen::ErrorCode::kPlanning: return UPEN_ERR_PLANNING;
    case upen::ErrorCode::kRuntime: return UPEN_ERR_RUNTIME;
  }
  return UPEN_ERR_RUNTIME;
}

template <class F>
upen_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return UPEN_OK;
  } catch (const upen::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  }
  return UPEN_ERR_RUNTIME;
}

void need(const void* p, const char* what) {
  if (!p) upen::fail(upen::ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

upen_metrics to_c(const upen::MetricsRecord& m) {
  return upen_metrics{m.map_acc_m2, m.iou_pct, m.cov_m2,  m.cov_pct, m.success ? 1 : 0, m.spl,
                      m.steps_taken, m.gd_m,  m.gedr,    m.path_m,  m.mean_step_ms};
}

const upen::Config& config_or_default(const upen_config* cfg) {
  static const upen::Config defaults;
  return cfg ? cfg->cfg : defaults;
}

}  // namespace

extern "C" {

const char* upen_version(void) { return "1.0.0"; }

const char* upen_status_string(upen_status status) {
  switch (status) {
    case UPEN_OK: return "ok";
    case UPEN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case UPEN_ERR_IO: return "i/o error";
    case UPEN_ERR_GENERATION_FAILED: return "floorplan generation failed";
    case UPEN_ERR_NO_EPISODE: return "no valid episode";
    case UPEN_ERR_TRAINING_DIVERGED: return "training diverged";
    case UPEN_ERR_PLANNING: return "planning failed";
    case UPEN_ERR_RUNTIME: return "runtime error";
  }
  return "unknown status";
}

const char* upen_last_error(void) { return g_last_error.c_str(); }

upen_status upen_config_create(upen_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new upen_config{};
  });
}

void upen_config_destroy(upen_config* cfg) { delete cfg; }

upen_status upen_config_load(upen_config* cfg, const char* path) {
  return guarded([&] {
    need(cfg, "cfg");
    need(path, "path");
    cfg->cfg.load(path);
  });
}

upen_status upen_config_set(upen_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    need(value, "value");
    cfg->cfg.set(key, value);
  });
}

upen_status upen_config_get(const upen_config* cfg, const char* key, char* buf, size_t buf_len, size_t* needed) {
  return guarded([&] {
    need(cfg, "cfg");
    need(key, "key");
    const std::string& v = cfg->cfg.get(key);
    if (needed) *needed = v.size() + 1;
    if (buf && buf_len > 0) {
      const std::size_t n = std::min(buf_len - 1, v.size());
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
  });
}

upen_status upen_floorplan_generate(const upen_config* cfg, uint64_t seed, upen_floorplan** out) {
  return guarded([&] {
    need(out, "out");
    const upen::RunConfig rc = upen::RunConfig::from(config_or_default(cfg));
    *out = new upen_floorplan{upen::generate_floorplan(seed, rc.world)};
  });
}

upen_status upen_floorplan_load(const char* path, upen_floorplan** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new upen_floorplan{upen::load_ascii(path)};
  });
}

upen_status upen_floorplan_save_ascii(const upen_floorplan* fp, const char* path) {
  return guarded([&] {
    need(fp, "fp");
    need(path, "path");
    upen::save_ascii(path, fp->fp);
  });
}

upen_status upen_floorplan_save_pgm(const upen_floorplan* fp, const char* path) {
  return guarded([&] {
    need(fp, "fp");
    need(path, "path");
    upen::save_pgm(path, fp->fp);
  });
}

upen_status upen_floorplan_size(const upen_floorplan* fp, int32_t* rows, int32_t* cols, double* cell_size_m) {
  return guarded([&] {
    need(fp, "fp");
    if (rows) *rows = fp->fp.rows();
    if (cols) *cols = fp->fp.cols();
    if (cell_size_m) *cell_size_m = fp->fp.cell_size_m;
  });
}

upen_status upen_floorplan_geodesic(const upen_floorplan* fp, double ax, double az, double bx, double bz,
                                    double* out_m) {
  return guarded([&] {
    need(fp, "fp");
    need(out_m, "out_m");
    *out_m = upen::geodesic_distance(fp->fp, ax, az, bx, bz);
  });
}

void upen_floorplan_destroy(upen_floorplan* fp) { delete fp; }

upen_status upen_sample_episode(const upen_floorplan* fp, uint64_t seed, double min_geodesic_m, double min_gedr,
                                int32_t budget_steps, upen_episode* out) {
  return guarded([&] {
    need(fp, "fp");
    need(out, "out");
    const upen::Episode e = upen::sample_episode(fp->fp, seed, min_geodesic_m, min_gedr, budget_steps);
    *out = upen_episode{{e.start.x_m, e.start.z_m, e.start.heading_deg}, e.goal_x, e.goal_z, e.geodesic_m,
                        e.euclidean_m, e.gedr, e.budget_steps};
  });
}

upen_status upen_train(const upen_config* cfg, const char* out_dir) {
  return guarded([&] {
    need(out_dir, "out_dir");
    upen::train_predictors(upen::TrainSetup::from(config_or_default(cfg)), out_dir);
  });
}

upen_status upen_ensemble_load(const char* dir, upen_ensemble** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = new upen_ensemble{upen::load_ensemble(dir)};
  });
}

upen_status upen_ensemble_zero(int32_t members, upen_ensemble** out) {
  return guarded([&] {
    need(out, "out");
    upen::require(members >= 1, "ensemble needs at least one member");
    *out = new upen_ensemble{std::vector<upen::PredictorParams>(members, upen::PredictorParams::zeros())};
  });
}

upen_status upen_ensemble_size(const upen_ensemble* ens, int32_t* members) {
  return guarded([&] {
    need(ens, "ens");
    need(members, "members");
    *members = static_cast<int32_t>(ens->members.size());
  });
}

void upen_ensemble_destroy(upen_ensemble* ens) { delete ens; }

upen_status upen_run_episode(const upen_config* cfg, const upen_floorplan* fp, const upen_ensemble* ens,
                             const upen_episode* episode, const char* artifact_dir, upen_metrics* out) {
  return guarded([&] {
    need(fp, "fp");
    need(ens, "ens");
    need(episode, "episode");
    need(out, "out");
    const upen::RunConfig rc = upen::RunConfig::from(config_or_default(cfg));
    upen::Episode e;
    e.floorplan_id = fp->fp.id;
    e.start = {episode->start.x_m, episode->start.z_m, episode->start.heading_deg};
    e.goal_x = episode->goal_x_m;
    e.goal_z = episode->goal_z_m;
    e.geodesic_m = episode->geodesic_m;
    e.euclidean_m = episode->euclidean_m;
    e.gedr = episode->gedr;
    e.budget_steps = episode->budget_steps;
    std::optional<std::string> art;
    if (artifact_dir) art = artifact_dir;
    *out = to_c(upen::run_episode(rc, fp->fp, ens->members, e, art));
  });
}

upen_status upen_run_suite(const upen_config* cfg, const upen_ensemble* ens, const char* out_dir,
                           upen_suite_summary* out) {
  return guarded([&] {
    const upen::RunConfig rc = upen::RunConfig::from(config_or_default(cfg));
    const std::vector<upen::PredictorParams> members = ens ? ens->members : upen::resolve_members(rc);
    const upen::SuiteResult r = upen::run_suite(rc, members, out_dir ? out_dir : "");
    if (out) {
      int completed = 0, successes = 0;
      for (const upen::SuiteRow& row : r.rows)
        if (!row.aborted) {
          ++completed;
          successes += row.metrics.success;
        }
      out->episodes = completed;
      out->aborted = r.aborted;
      out->success_rate = completed ? static_cast<double>(successes) / completed : 0.0;
      out->mean = to_c(r.mean);
      out->mean.success = successes;
    }
  });
}

upen_status upen_write_report(const char* dir, const char* out_path) {
  return guarded([&] {
    need(dir, "dir");
    need(out_path, "out_path");
    std::ofstream out(out_path);
    if (!out) upen::fail(upen::ErrorCode::kIo, std::string("cannot write ") + out_path);
    out << upen::build_report(dir);
  });
}

}  // extern "C"
