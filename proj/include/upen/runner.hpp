#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "upen/config.hpp"
#include "upen/controller.hpp"
#include "upen/metrics.hpp"
#include "upen/policy.hpp"
#include "upen/predictor.hpp"

namespace upen {

enum class PolicyKind { kUpen, kFrontier, kRandomGoal, kStraightGoal };

const char* policy_name(PolicyKind p);
/// Accepts "upen" and the baseline names; throws Error(kInvalidArgument) otherwise.
PolicyKind parse_policy(const std::string& name);
const char* task_name(Task t);
Task parse_task(const std::string& name);
/// Throws Error(kInvalidArgument) for baselines that do not apply to the task.
void require_compatible(Task task, PolicyKind policy);

struct RunConfig {
  Task task = Task::kExplore;
  PolicyKind policy = PolicyKind::kUpen;
  int episodes = 5;
  std::uint64_t seed = 1;
  int budget = 0;  // 0 selects the task default (explore 1000, point-goal 500)
  int checkpoint = 500;
  std::string floorplan_path;
  std::string weights_dir;
  int ensemble_size = 4;
  double min_geodesic_m = 1.0;
  double min_gedr = 1.0;
  double success_radius_m = 0.2;
  std::vector<int> snapshots{100, 250, 500, 1000};
  bool artifacts = false;
  std::string output_dir = "upen_out";
  std::uint64_t train_seed_base = 1000000;

  PolicyConfig policy_cfg{};
  RrtParams rrt{};
  SensorConfig sensor{};
  ControllerConfig controller{};
  FloorplanParams world{};
  int map_rows = 256;
  int map_cols = 256;
  int local_h = 160;
  int local_w = 160;

  int effective_budget() const { return budget > 0 ? budget : (task == Task::kExplore ? 1000 : 500); }
  static RunConfig from(const Config& cfg);
};

/// Per-episode record of what happened, for artifacts and structural checks.
struct EpisodeTrace {
  std::vector<AgentPose> poses;
  std::vector<Action> actions;
  std::vector<int> replan_steps;
  std::vector<int> candidate_counts;
  std::vector<std::pair<int, double>> coverage_curve;  // (step, m^2) at snapshot steps
  std::vector<std::string> decision_log;
  std::vector<Cell> short_term_goals;
  std::vector<double> step_ms;
  bool stopped = false;
  std::string failure;
};

/// Runs one episode; artifacts are written under `artifact_dir` when given.
MetricsRecord run_episode(const RunConfig& cfg, const Floorplan& fp, const std::vector<PredictorParams>& members,
                          const Episode& episode, const std::optional<std::string>& artifact_dir = std::nullopt,
                          EpisodeTrace* trace = nullptr);

struct SuiteRow {
  std::string episode_id;
  MetricsRecord metrics;
  bool aborted = false;
  std::string failure;
};

struct SuiteResult {
  std::vector<SuiteRow> rows;
  MetricsRecord mean;
  int aborted = 0;
};

/// Floorplan and episode for suite slot `index` (deterministic in cfg.seed).
std::pair<Floorplan, Episode> suite_episode(const RunConfig& cfg, int index);

/// Runs cfg.episodes episodes and writes episodes.csv, summary.csv and timing.csv to `out_dir`
/// (when non-empty).
SuiteResult run_suite(const RunConfig& cfg, const std::vector<PredictorParams>& members, const std::string& out_dir);

/// Members from cfg.weights_dir, or cfg.ensemble_size zero-weight members when unset.
std::vector<PredictorParams> resolve_members(const RunConfig& cfg);

struct TrainSetup {
  int members = 4;
  int plans = 8;
  int heldout_plans = 2;
  int episodes_per_plan = 4;
  int waypoints = 5;
  int samples_per_pair = 1500;
  TrainConfig sgd{};
  std::uint64_t seed = 1;
  std::uint64_t seed_base = 1000000;
  FloorplanParams world{};
  DatasetConfig dataset{};

  static TrainSetup from(const Config& cfg);
};

struct MemberTrainReport {
  double heldout_initial = 0.0;
  double heldout_final = 0.0;
  TrainReport train;
};

/// Trains an ensemble on floorplans with seeds >= seed_base (disjoint from evaluation seeds) and
/// writes member_<i>.weights, loss_curve.csv and training.txt into `out_dir`.
std::vector<MemberTrainReport> train_predictors(const TrainSetup& setup, const std::string& out_dir);

/// Throws when evaluation floorplan seeds overlap the training range recorded with the weights.
void check_seed_split(const RunConfig& cfg);

/// Markdown comparison of every summary.csv found under `dir`.
std::string build_report(const std::string& dir);

/// SVG with the floorplan, trajectory, last candidate set, selected path and short-term goals.
std::string render_svg(const Floorplan& fp, const EpisodeTrace& trace, const CandidateSet* candidates,
                       std::optional<std::size_t> selected, std::optional<Cell> goal);

}  // namespace upen
