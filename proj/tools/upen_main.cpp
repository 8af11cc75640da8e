// Command-line front end; talks to the library only through upen.h.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "upen/upen.h"

namespace {

struct Common {
  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
};

int report_failure(upen_status st, const char* what) {
  std::fprintf(stderr, "upen: %s: %s (%s)\n", what, upen_last_error(), upen_status_string(st));
  return static_cast<int>(st) + 1;
}

// Resolution order for the output directory: UPEN_OUTPUT_DIR, --out, run.output_dir.
std::string output_dir(upen_config* cfg, const std::string& flag) {
  if (const char* env = std::getenv("UPEN_OUTPUT_DIR"); env && *env) return env;
  if (!flag.empty()) return flag;
  char buf[4096];
  if (upen_config_get(cfg, "run.output_dir", buf, sizeof buf, nullptr) == UPEN_OK) return buf;
  return "upen_out";
}

class ConfigHandle {
 public:
  ConfigHandle() {
    if (upen_config_create(&cfg_) != UPEN_OK) cfg_ = nullptr;
  }
  ~ConfigHandle() { upen_config_destroy(cfg_); }
  ConfigHandle(const ConfigHandle&) = delete;
  ConfigHandle& operator=(const ConfigHandle&) = delete;
  upen_config* get() const { return cfg_; }

 private:
  upen_config* cfg_ = nullptr;
};

upen_status apply(upen_config* cfg, const Common& c) {
  if (!c.config_path.empty())
    if (upen_status st = upen_config_load(cfg, c.config_path.c_str()); st != UPEN_OK) return st;
  for (const std::string& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "upen: --set expects key=value, got '%s'\n", kv.c_str());
      return UPEN_ERR_INVALID_ARGUMENT;
    }
    if (upen_status st = upen_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); st != UPEN_OK)
      return st;
  }
  return UPEN_OK;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config_path, "Configuration file")->check(CLI::ExistingFile);
  app->add_option("-o,--out", c.out_dir, "Output directory (UPEN_OUTPUT_DIR overrides)");
  app->add_option("-s,--set", c.overrides, "Override a config key, e.g. --set run.episodes=3");
}

int run_suite_command(upen_config* cfg, const Common& c, const char* task, const std::string& policy) {
  if (upen_status st = upen_config_set(cfg, "run.task", task); st != UPEN_OK) return report_failure(st, "config");
  if (!policy.empty())
    if (upen_status st = upen_config_set(cfg, "run.policy", policy.c_str()); st != UPEN_OK)
      return report_failure(st, "config");
  const std::string out = output_dir(cfg, c.out_dir);
  upen_suite_summary summary{};
  if (upen_status st = upen_run_suite(cfg, nullptr, out.c_str(), &summary); st != UPEN_OK)
    return report_failure(st, "suite");
  std::printf("%s: %d episodes (%d aborted) success=%.3f spl=%.3f cov=%.2f m2 (%.1f%%) map_acc=%.2f m2 iou=%.1f%%\n",
              task, summary.episodes, summary.aborted, summary.success_rate, summary.mean.spl, summary.mean.cov_m2,
              summary.mean.cov_pct, summary.mean.map_acc_m2, summary.mean.iou_pct);
  std::printf("results in %s\n", out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-driven planner for navigation in simulated floorplans"};
  app.require_subcommand(1);
  app.set_version_flag("--version", upen_version());

  Common gen_c, train_c, explore_c, point_c, base_c;
  int count = 5;
  std::uint64_t first_seed = 1;
  auto* gen = app.add_subcommand("gen-maps", "Generate floorplans as ASCII grids and PGM images");
  add_common(gen, gen_c);
  gen->add_option("-n,--count", count, "Number of floorplans")->check(CLI::PositiveNumber);
  gen->add_option("--seed", first_seed, "Seed of the first floorplan");

  auto* train = app.add_subcommand("train", "Train the predictor ensemble");
  add_common(train, train_c);

  std::string explore_policy, point_policy, base_policy, base_task = "explore";
  auto* explore = app.add_subcommand("explore", "Run the exploration suite");
  add_common(explore, explore_c);
  explore->add_option("-p,--policy", explore_policy, "upen, frontier or random_goal");

  auto* point = app.add_subcommand("pointnav", "Run the point-goal suite");
  add_common(point, point_c);
  point->add_option("-p,--policy", point_policy, "upen or straight_goal");

  auto* base = app.add_subcommand("baseline", "Run a baseline policy");
  add_common(base, base_c);
  base->add_option("-p,--policy", base_policy, "frontier, random_goal or straight_goal")->required();
  base->add_option("-t,--task", base_task, "explore or pointgoal")->check(CLI::IsMember({"explore", "pointgoal"}));

  std::string report_dir, report_out;
  auto* report = app.add_subcommand("report", "Summarise suite results as markdown");
  report->add_option("dir", report_dir, "Directory searched for summary.csv files")->required();
  report->add_option("-o,--out", report_out, "Output file (default <dir>/report.md)");

  CLI11_PARSE(app, argc, argv);

  ConfigHandle handle;
  upen_config* cfg = handle.get();
  if (!cfg) return report_failure(UPEN_ERR_RUNTIME, "config");

  if (*gen) {
    if (upen_status st = apply(cfg, gen_c); st != UPEN_OK) return report_failure(st, "config");
    const std::string out = output_dir(cfg, gen_c.out_dir);
    std::filesystem::create_directories(out);
    for (int i = 0; i < count; ++i) {
      const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(i);
      upen_floorplan* fp = nullptr;
      if (upen_status st = upen_floorplan_generate(cfg, seed, &fp); st != UPEN_OK) return report_failure(st, "gen-maps");
      const std::string stem = out + "/floorplan_" + std::to_string(seed);
      upen_status st = upen_floorplan_save_ascii(fp, (stem + ".txt").c_str());
      if (st == UPEN_OK) st = upen_floorplan_save_pgm(fp, (stem + ".pgm").c_str());
      upen_floorplan_destroy(fp);
      if (st != UPEN_OK) return report_failure(st, "gen-maps");
      std::printf("%s.txt\n", stem.c_str());
    }
    return 0;
  }
  if (*train) {
    if (upen_status st = apply(cfg, train_c); st != UPEN_OK) return report_failure(st, "config");
    const std::string out = output_dir(cfg, train_c.out_dir);
    if (upen_status st = upen_train(cfg, out.c_str()); st != UPEN_OK) return report_failure(st, "train");
    std::printf("weights written to %s\n", out.c_str());
    return 0;
  }
  if (*explore) {
    if (upen_status st = apply(cfg, explore_c); st != UPEN_OK) return report_failure(st, "config");
    return run_suite_command(cfg, explore_c, "explore", explore_policy);
  }
  if (*point) {
    if (upen_status st = apply(cfg, point_c); st != UPEN_OK) return report_failure(st, "config");
    return run_suite_command(cfg, point_c, "pointgoal", point_policy);
  }
  if (*base) {
    if (upen_status st = apply(cfg, base_c); st != UPEN_OK) return report_failure(st, "config");
    return run_suite_command(cfg, base_c, base_task.c_str(), base_policy);
  }
  if (*report) {
    const std::string out = report_out.empty() ? report_dir + "/report.md" : report_out;
    if (upen_status st = upen_write_report(report_dir.c_str(), out.c_str()); st != UPEN_OK)
      return report_failure(st, "report");
    std::printf("%s\n", out.c_str());
    return 0;
  }
  return 0;
}
