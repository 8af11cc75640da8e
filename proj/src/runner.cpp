#include "upen/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"

namespace upen {

namespace fs = std::filesystem;

namespace {

constexpr int kStuckReplan = 8;
constexpr double kArriveCells = 3.0;
constexpr int kMinFrontierCluster = 4;
constexpr int kFloorplanAttempts = 20;
constexpr std::uint64_t kFloorplanSeedStride = 10007;

double cells_apart(Cell a, Cell b) { return std::hypot(a.row - b.row, a.col - b.col); }

std::uint64_t episode_seed(const RunConfig& cfg, const Episode& ep) {
  std::uint64_t h = std::hash<std::string>{}(ep.floorplan_id);
  h ^= static_cast<std::uint64_t>(std::llround(ep.start.x_m * 1000.0)) * 0x9E3779B97F4A7C15ULL;
  h ^= static_cast<std::uint64_t>(std::llround(ep.start.z_m * 1000.0)) * 0xC2B2AE3D27D4EB4FULL;
  return h ^ (cfg.seed * 0x165667B19E3779F9ULL);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

// Frontier cells: observed FREE cells 4-adjacent to an unobserved cell of the observation map.
std::optional<Cell> nearest_frontier(const GlobalMap& obs, const Grid<double>& costs, Cell agent) {
  const int rows = obs.rows(), cols = obs.cols();
  Grid<std::uint8_t> frontier(rows, cols, 0);
  constexpr int dr4[4] = {1, -1, 0, 0};
  constexpr int dc4[4] = {0, 0, 1, -1};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const ClassDist& d = obs.probs(r, c);
      if (is_uniform(d) || argmax_class(d) != CellClass::kFree) continue;
      for (int k = 0; k < 4; ++k) {
        const Cell n{r + dr4[k], c + dc4[k]};
        if (obs.probs.contains(n) && is_uniform(obs.probs[n])) {
          frontier(r, c) = 1;
          break;
        }
      }
    }
  std::optional<Cell> best;
  double best_cost = kUnreachable;
  Grid<std::uint8_t> seen(rows, cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!frontier(r, c) || seen(r, c)) continue;
      std::vector<Cell> cluster, stack{{r, c}};
      seen(r, c) = 1;
      while (!stack.empty()) {
        const Cell cur = stack.back();
        stack.pop_back();
        cluster.push_back(cur);
        for (int dr = -1; dr <= 1; ++dr)
          for (int dc = -1; dc <= 1; ++dc) {
            const Cell n{cur.row + dr, cur.col + dc};
            if (frontier.contains(n) && frontier[n] && !seen[n]) {
              seen[n] = 1;
              stack.push_back(n);
            }
          }
      }
      if (static_cast<int>(cluster.size()) < kMinFrontierCluster) continue;
      double mr = 0, mc = 0;
      for (const Cell& x : cluster) {
        mr += x.row;
        mc += x.col;
      }
      mr /= cluster.size();
      mc /= cluster.size();
      // Reachable cluster cell closest to the centroid.
      std::optional<Cell> target;
      double target_d = kUnreachable;
      for (const Cell& x : cluster) {
        if (costs[x] == kUnreachable) continue;
        const double d = std::hypot(x.row - mr, x.col - mc);
        if (d < target_d) {
          target_d = d;
          target = x;
        }
      }
      if (!target || cells_apart(*target, agent) <= kArriveCells) continue;
      if (costs[*target] < best_cost) {
        best_cost = costs[*target];
        best = target;
      }
    }
  return best;
}

// Uniform over reachable, unblocked cells at most `radius` cells from the agent.
std::optional<Cell> random_reachable(const GlobalMap& fused, const Grid<double>& costs, Cell agent,
                                     double blocked_threshold, double radius, std::mt19937_64& rng) {
  std::vector<Cell> cells;
  for (int r = 0; r < fused.rows(); ++r)
    for (int c = 0; c < fused.cols(); ++c) {
      const double d = cells_apart({r, c}, agent);
      if (costs(r, c) != kUnreachable && occupancy(fused.probs(r, c)) < blocked_threshold && d > kArriveCells &&
          d <= radius)
        cells.push_back({r, c});
    }
  if (cells.empty()) return std::nullopt;
  return cells[std::uniform_int_distribution<std::size_t>(0, cells.size() - 1)(rng)];
}

// Index of the path cell nearest the agent, searching forward from `from`.
std::size_t advance_progress(const Path& path, std::size_t from, Cell agent) {
  std::size_t best = from;
  double best_d = cells_apart(path.cells[from], agent);
  const std::size_t end = std::min(path.cells.size(), from + 40);
  for (std::size_t i = from + 1; i < end; ++i) {
    const double d = cells_apart(path.cells[i], agent);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

void fill_map_metrics(MetricsRecord& m, const EnsembleState& state, const Floorplan& fp) {
  m.map_acc_m2 = map_accuracy(state.mean_map, fp);
  m.iou_pct = iou(state.mean_map, fp);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

const char* policy_name(PolicyKind p) {
  switch (p) {
    case PolicyKind::kUpen: return "upen";
    case PolicyKind::kFrontier: return "frontier";
    case PolicyKind::kRandomGoal: return "random_goal";
    case PolicyKind::kStraightGoal: return "straight_goal";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  for (PolicyKind p : {PolicyKind::kUpen, PolicyKind::kFrontier, PolicyKind::kRandomGoal, PolicyKind::kStraightGoal})
    if (name == policy_name(p)) return p;
  fail(ErrorCode::kInvalidArgument,
       "unknown policy '" + name + "' (expected upen, frontier, random_goal or straight_goal)");
}

const char* task_name(Task t) { return t == Task::kExplore ? "explore" : "pointgoal"; }

Task parse_task(const std::string& name) {
  if (name == "explore") return Task::kExplore;
  if (name == "pointgoal" || name == "pointnav") return Task::kPointGoal;
  fail(ErrorCode::kInvalidArgument, "unknown task '" + name + "' (expected explore or pointgoal)");
}

RunConfig RunConfig::from(const Config& c) {
  RunConfig r;
  r.task = parse_task(c.get("run.task"));
  r.policy = parse_policy(c.get("run.policy"));
  r.episodes = static_cast<int>(c.get_int("run.episodes"));
  r.seed = static_cast<std::uint64_t>(c.get_int("run.seed"));
  r.budget = static_cast<int>(c.get_int("run.budget"));
  r.checkpoint = static_cast<int>(c.get_int("run.checkpoint"));
  r.floorplan_path = c.get("run.floorplan");
  r.weights_dir = c.get("run.weights");
  r.ensemble_size = static_cast<int>(c.get_int("run.ensemble_size"));
  r.min_geodesic_m = c.get_double("run.min_geodesic_m");
  r.min_gedr = c.get_double("run.min_gedr");
  r.success_radius_m = c.get_double("run.success_radius_m");
  r.snapshots = c.get_int_list("run.snapshots");
  r.artifacts = c.get_bool("run.artifacts");
  r.output_dir = c.get("run.output_dir");
  r.train_seed_base = static_cast<std::uint64_t>(c.get_int("train.seed_base"));
  r.policy_cfg.alpha1 = c.get_double("policy.alpha1");
  r.policy_cfg.alpha2 = c.get_double("policy.alpha2");
  r.policy_cfg.lookahead_m = c.get_double("policy.lookahead_m");
  r.policy_cfg.explore_cadence = static_cast<int>(c.get_int("policy.explore_cadence"));
  r.policy_cfg.pointgoal_cadence = static_cast<int>(c.get_int("policy.pointgoal_cadence"));
  r.rrt.max_paths = static_cast<int>(c.get_int("rrt.max_paths"));
  r.rrt.goal_rate = c.get_double("rrt.goal_rate");
  r.rrt.step_cells = static_cast<int>(c.get_int("rrt.step_cells"));
  r.rrt.iterations = static_cast<int>(c.get_int("rrt.iterations"));
  r.rrt.occupancy_threshold = c.get_double("rrt.occupancy_threshold");
  r.rrt.goal_tolerance_cells = static_cast<int>(c.get_int("rrt.goal_tolerance_cells"));
  r.sensor.fov_deg = c.get_double("sensor.fov_deg");
  r.sensor.n_rays = static_cast<int>(c.get_int("sensor.n_rays"));
  r.sensor.max_range_m = c.get_double("sensor.max_range_m");
  r.map_rows = static_cast<int>(c.get_int("map.rows"));
  r.map_cols = static_cast<int>(c.get_int("map.cols"));
  r.local_h = static_cast<int>(c.get_int("map.local_h"));
  r.local_w = static_cast<int>(c.get_int("map.local_w"));
  r.world.rows = static_cast<int>(c.get_int("world.rows"));
  r.world.cols = static_cast<int>(c.get_int("world.cols"));
  r.world.cell_size_m = c.get_double("world.cell_size_m");
  r.world.room_slots_rows = static_cast<int>(c.get_int("world.room_slots_rows"));
  r.world.room_slots_cols = static_cast<int>(c.get_int("world.room_slots_cols"));
  r.world.min_room_cells = static_cast<int>(c.get_int("world.min_room_cells"));
  r.world.max_room_cells = static_cast<int>(c.get_int("world.max_room_cells"));
  r.world.corridor_width = static_cast<int>(c.get_int("world.corridor_width"));
  r.world.extra_connection_prob = c.get_double("world.extra_connection_prob");
  r.world.max_obstacles_per_room = static_cast<int>(c.get_int("world.max_obstacles_per_room"));
  require(r.episodes >= 0, "run.episodes must be >= 0");
  require(r.budget >= 0, "run.budget must be >= 0 (0 selects the task default)");
  require(r.policy_cfg.alpha1 >= 0 && r.policy_cfg.alpha2 >= 0, "policy alphas must be >= 0");
  require(r.policy_cfg.explore_cadence >= 1 && r.policy_cfg.pointgoal_cadence >= 1, "replan cadence must be >= 1");
  require(r.min_gedr >= 1.0, "run.min_gedr must be >= 1");
  return r;
}

TrainSetup TrainSetup::from(const Config& c) {
  TrainSetup s;
  s.members = static_cast<int>(c.get_int("train.members"));
  s.plans = static_cast<int>(c.get_int("train.plans"));
  s.heldout_plans = static_cast<int>(c.get_int("train.heldout_plans"));
  s.episodes_per_plan = static_cast<int>(c.get_int("train.episodes_per_plan"));
  s.waypoints = static_cast<int>(c.get_int("train.waypoints"));
  s.samples_per_pair = static_cast<int>(c.get_int("train.samples_per_pair"));
  s.sgd.epochs = static_cast<int>(c.get_int("train.epochs"));
  s.sgd.learning_rate = c.get_double("train.learning_rate");
  s.sgd.batch_size = static_cast<int>(c.get_int("train.batch_size"));
  s.seed = static_cast<std::uint64_t>(c.get_int("train.seed"));
  s.seed_base = static_cast<std::uint64_t>(c.get_int("train.seed_base"));
  s.world = RunConfig::from(c).world;
  s.dataset.h = static_cast<int>(c.get_int("map.local_h"));
  s.dataset.w = static_cast<int>(c.get_int("map.local_w"));
  s.dataset.waypoints_per_episode = s.waypoints;
  s.dataset.sensor.fov_deg = c.get_double("sensor.fov_deg");
  s.dataset.sensor.n_rays = static_cast<int>(c.get_int("sensor.n_rays"));
  s.dataset.sensor.max_range_m = c.get_double("sensor.max_range_m");
  require(s.members >= 1 && s.plans >= 1 && s.heldout_plans >= 1, "train: members, plans and heldout_plans must be >= 1");
  return s;
}

void require_compatible(Task task, PolicyKind policy) {
  require(!(task == Task::kExplore && policy == PolicyKind::kStraightGoal), "straight_goal is a point-goal baseline");
  require(!(task == Task::kPointGoal && (policy == PolicyKind::kFrontier || policy == PolicyKind::kRandomGoal)),
          std::string(policy_name(policy)) + " is an exploration baseline");
}

MetricsRecord run_episode(const RunConfig& cfg, const Floorplan& fp, const std::vector<PredictorParams>& members,
                          const Episode& ep, const std::optional<std::string>& artifact_dir, EpisodeTrace* trace_out) {
  EpisodeTrace local_trace;
  EpisodeTrace& tr = trace_out ? *trace_out : local_trace;
  tr = {};
  require(!members.empty(), "run_episode: empty ensemble");
  require(cfg.map_rows >= fp.rows() && cfg.map_cols >= fp.cols(), "run_episode: global map smaller than the floorplan");
  const Task task = cfg.task;
  const PolicyKind policy = cfg.policy;
  require_compatible(task, policy);

  const GlobalMap blank(cfg.map_rows, cfg.map_cols, fp.cell_size_m, fp.origin_x, fp.origin_z);
  EnsembleState state(members, blank, cfg.local_h, cfg.local_w);
  AgentPose pose = ep.start;
  const Grid<std::uint8_t> navigable = reachable_free_mask(fp, fp.cell_at(pose.x_m, pose.z_m));
  const Cell goal_cell = blank.cell_at(ep.goal_x, ep.goal_z);
  const std::uint64_t seed = episode_seed(cfg, ep);
  std::mt19937_64 rng(seed);
  const int budget = cfg.effective_budget();
  const int cadence = cfg.policy_cfg.cadence(task);

  std::vector<int> snapshots;
  for (int s : cfg.snapshots)
    if (s >= 1 && s <= budget) snapshots.push_back(s);
  if (artifact_dir) fs::create_directories(*artifact_dir);
  std::vector<std::string> path_records;

  const auto observe = [&] { update_ensemble_maps(state, sense(fp, pose, cfg.sensor), pose); };
  observe();
  tr.poses.push_back(pose);

  ControllerState ctl;
  std::optional<Path> path;
  std::size_t progress = 0;
  bool path_to_goal = false;
  bool blocked_turn = false;
  std::optional<Cell> target;
  CandidateSet last_candidates;
  std::optional<std::size_t> last_selected;
  MetricsRecord m;
  bool checkpoint_done = false;
  double taken = 0.0;
  int steps = 0;

  try {
    for (int t = 0; t < budget; ++t) {
      const auto t0 = std::chrono::steady_clock::now();
      if (task == Task::kPointGoal && reached(pose, ep.goal_x, ep.goal_z, cfg.success_radius_m)) {
        tr.actions.push_back(Action::kStop);
        tr.stopped = true;
        steps = t + 1;
        tr.step_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        break;
      }
      const Cell agent = blank.cell_at(pose.x_m, pose.z_m);

      // Early replans: the previous plan is used up or the controller keeps failing.
      bool early = ctl.stuck >= kStuckReplan;
      if (policy == PolicyKind::kUpen) {
        if (!path && !blocked_turn) early = true;
        if (path && !path_to_goal && cells_apart(agent, path->cells.back()) <= kArriveCells) early = true;
      } else if (policy != PolicyKind::kStraightGoal) {
        if (!target || cells_apart(agent, *target) <= kArriveCells) early = true;
      }
      const bool replan = policy != PolicyKind::kStraightGoal && (t % cadence == 0 || early);

      if (replan) {
        tr.replan_steps.push_back(t);
        ctl.stuck = 0;
        if (policy == PolicyKind::kUpen) {
          RrtParams rp = cfg.rrt;
          rp.seed = seed + static_cast<std::uint64_t>(t) * 7919ULL;
          CandidateSet cs;
          try {
            cs = plan_paths(state.mean_map, agent,
                            task == Task::kPointGoal ? std::optional<Cell>(goal_cell) : std::nullopt, rp);
          } catch (const Error& e) {
            if (e.code() != ErrorCode::kPlanning) throw;
            cs.blocked = true;
          }
          const std::vector<PathScore> scores =
              score_candidates(cs, task, state.member_maps, state.uncertainty, cfg.policy_cfg);
          std::optional<std::size_t> sel;
          std::optional<Cell> stg;
          if (cs.paths.empty()) {
            blocked_turn = true;
            path.reset();
          } else {
            sel = select_path(cs.paths, scores, task);
            path = cs.paths[*sel];
            progress = 0;
            path_to_goal = cs.reached_goal;
            blocked_turn = false;
            stg = short_term_goal(*path, cfg.policy_cfg.lookahead_m, blank.cell_size_m);
            for (std::size_t i = 0; i < cs.paths.size(); ++i)
              path_records.push_back("step " + std::to_string(t) + " " + path_record(cs.paths[i], i) +
                                     (i == *sel ? " selected" : ""));
          }
          tr.candidate_counts.push_back(static_cast<int>(cs.paths.size()));
          tr.decision_log.push_back(decision_log_row(t, task, cs, scores, sel, stg));
          last_candidates = std::move(cs);
          last_selected = sel;
        } else {
          const Grid<double> costs = route_costs(state.mean_map, agent, cfg.controller, ctl.bumped);
          const double thr = cfg.controller.blocked_threshold;
          const double horizon = cfg.policy_cfg.lookahead_m / blank.cell_size_m;
          target = policy == PolicyKind::kFrontier ? nearest_frontier(state.obs_map, costs, agent)
                                                   : random_reachable(state.mean_map, costs, agent, thr, horizon, rng);
          if (!target)
            target = random_reachable(state.mean_map, costs, agent, thr, std::numeric_limits<double>::infinity(), rng);
          nlohmann::json row{{"step", t}, {"policy", policy_name(policy)}, {"target", nullptr}};
          if (target) row["target"] = {target->row, target->col};
          tr.decision_log.push_back(row.dump());
        }
      }

      Action action = Action::kTurnLeft;
      std::optional<Cell> goal_for_controller;
      if (policy == PolicyKind::kStraightGoal) {
        goal_for_controller = goal_cell;
      } else if (policy == PolicyKind::kUpen) {
        if (path && !blocked_turn) {
          progress = advance_progress(*path, progress, agent);
          Path rest;
          rest.cells.assign(path->cells.begin() + static_cast<std::ptrdiff_t>(progress), path->cells.end());
          const std::size_t idx = progress + short_term_goal_index(rest, cfg.policy_cfg.lookahead_m, blank.cell_size_m);
          goal_for_controller = path->cells[idx];
          if (path_to_goal && idx + 1 == path->cells.size()) goal_for_controller = goal_cell;
        }
      } else {
        goal_for_controller = target;
      }
      if (goal_for_controller) {
        tr.short_term_goals.push_back(*goal_for_controller);
        action = next_action(ctl, pose, state.mean_map, *goal_for_controller, cfg.controller);
      }

      const StepResult res = step(fp, pose, action);
      if (res.collided) note_collision(ctl, pose, state.mean_map);
      taken += std::hypot(res.pose.x_m - pose.x_m, res.pose.z_m - pose.z_m);
      pose = res.pose;
      tr.actions.push_back(action);
      tr.poses.push_back(pose);
      observe();
      steps = t + 1;

      if (std::find(snapshots.begin(), snapshots.end(), steps) != snapshots.end()) {
        tr.coverage_curve.push_back({steps, coverage(state.obs_map, fp, navigable).m2});
        if (artifact_dir) {
          const fs::path dir(*artifact_dir);
          save_map_pgm((dir / ("obs_" + std::to_string(steps) + ".pgm")).string(), state.obs_map);
          save_map_pgm((dir / ("fused_" + std::to_string(steps) + ".pgm")).string(), state.mean_map);
          save_scalar_pgm((dir / ("uncertainty_" + std::to_string(steps) + ".pgm")).string(), state.uncertainty, 0.25);
        }
      }
      if (task == Task::kExplore && steps == cfg.checkpoint) {
        fill_map_metrics(m, state, fp);
        checkpoint_done = true;
      }
      tr.step_ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
  } catch (const Error& e) {
    tr.failure = e.what();
    throw;
  }

  if (!checkpoint_done) fill_map_metrics(m, state, fp);
  const Coverage cov = coverage(state.obs_map, fp, navigable);
  m.cov_m2 = cov.m2;
  m.cov_pct = cov.pct;
  m.steps_taken = steps;
  m.path_m = taken;
  m.gd_m = ep.geodesic_m;
  m.gedr = ep.gedr;
  if (task == Task::kPointGoal) {
    m.success = tr.stopped;
    m.spl = spl(m.success, ep.geodesic_m, taken);
  }
  if (!tr.step_ms.empty()) {
    double sum = 0.0;
    for (double v : tr.step_ms) sum += v;
    m.mean_step_ms = sum / static_cast<double>(tr.step_ms.size());
  }

  if (artifact_dir) {
    const fs::path dir(*artifact_dir);
    std::string log;
    for (const std::string& row : tr.decision_log) log += row + "\n";
    write_text(dir / "decisions.jsonl", log);
    std::string paths;
    for (const std::string& row : path_records) paths += row + "\n";
    write_text(dir / "paths.txt", paths);
    write_text(dir / "metrics.csv", metrics_csv_header() + "\n" + metrics_csv_row(fp.id, policy_name(policy), m) + "\n");
    write_text(dir / "trajectory.svg",
               render_svg(fp, tr, last_candidates.paths.empty() ? nullptr : &last_candidates, last_selected,
                          task == Task::kPointGoal ? std::optional<Cell>(goal_cell) : std::nullopt));
    save_map((dir / "obs.map").string(), state.obs_map);
    save_map((dir / "fused.map").string(), state.mean_map);
  }
  return m;
}

std::pair<Floorplan, Episode> suite_episode(const RunConfig& cfg, int index) {
  const bool explore = cfg.task == Task::kExplore;
  const double min_geo = explore ? 0.0 : cfg.min_geodesic_m;
  const double min_gedr = explore ? 1.0 : cfg.min_gedr;
  if (!cfg.floorplan_path.empty()) {
    Floorplan fp = load_ascii(cfg.floorplan_path);
    Episode ep = sample_episode(fp, cfg.seed * 1000003ULL + static_cast<std::uint64_t>(index), min_geo, min_gedr,
                                cfg.effective_budget());
    return {std::move(fp), ep};
  }
  std::string last_error;
  for (int attempt = 0; attempt < kFloorplanAttempts; ++attempt) {
    const std::uint64_t fp_seed = cfg.seed + static_cast<std::uint64_t>(index) + attempt * kFloorplanSeedStride;
    Floorplan fp = generate_floorplan(fp_seed, cfg.world);
    try {
      Episode ep = sample_episode(fp, fp_seed * 31ULL + 7ULL, min_geo, min_gedr, cfg.effective_budget());
      return {std::move(fp), ep};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoEpisode) throw;
      last_error = e.what();
    }
  }
  fail(ErrorCode::kNoEpisode, "suite slot " + std::to_string(index) + ": " + last_error);
}

void check_seed_split(const RunConfig& cfg) {
  std::uint64_t base = cfg.train_seed_base;
  if (!cfg.weights_dir.empty()) {
    std::ifstream in(fs::path(cfg.weights_dir) / "training.txt");
    std::string key;
    std::uint64_t value = 0;
    while (in >> key >> value)
      if (key == "seed_base") base = value;
  }
  if (!cfg.floorplan_path.empty()) return;
  const std::uint64_t max_eval =
      cfg.seed + static_cast<std::uint64_t>(std::max(cfg.episodes, 1)) + kFloorplanAttempts * kFloorplanSeedStride;
  if (max_eval >= base)
    fail(ErrorCode::kInvalidArgument, "evaluation floorplan seeds reach " + std::to_string(max_eval) +
                                          ", overlapping the training seed range starting at " + std::to_string(base));
}

std::vector<PredictorParams> resolve_members(const RunConfig& cfg) {
  if (!cfg.weights_dir.empty()) return load_ensemble(cfg.weights_dir);
  require(cfg.ensemble_size >= 1, "run.ensemble_size must be >= 1");
  return std::vector<PredictorParams>(static_cast<std::size_t>(cfg.ensemble_size), PredictorParams::zeros());
}

SuiteResult run_suite(const RunConfig& cfg, const std::vector<PredictorParams>& members, const std::string& out_dir) {
  require_compatible(cfg.task, cfg.policy);
  check_seed_split(cfg);
  SuiteResult result;
  for (int i = 0; i < cfg.episodes; ++i) {
    SuiteRow row;
    row.episode_id = "slot" + std::to_string(i);
    try {
      const auto [fp, ep] = suite_episode(cfg, i);
      row.episode_id = fp.id + "-ep" + std::to_string(i);
      std::optional<std::string> art;
      if (cfg.artifacts && !out_dir.empty()) art = (fs::path(out_dir) / "episodes" / row.episode_id).string();
      row.metrics = run_episode(cfg, fp, members, ep, art);
    } catch (const Error& e) {
      row.aborted = true;
      row.failure = e.what();
      ++result.aborted;
    }
    result.rows.push_back(row);
  }

  MetricsRecord& mean = result.mean;
  int n = 0;
  for (const SuiteRow& r : result.rows) {
    if (r.aborted) continue;
    ++n;
    mean.map_acc_m2 += r.metrics.map_acc_m2;
    mean.iou_pct += r.metrics.iou_pct;
    mean.cov_m2 += r.metrics.cov_m2;
    mean.cov_pct += r.metrics.cov_pct;
    mean.spl += r.metrics.spl;
    mean.steps_taken += r.metrics.steps_taken;
    mean.gd_m += r.metrics.gd_m;
    mean.gedr += r.metrics.gedr;
    mean.path_m += r.metrics.path_m;
    mean.mean_step_ms += r.metrics.mean_step_ms;
  }
  int successes = 0;
  for (const SuiteRow& r : result.rows) successes += !r.aborted && r.metrics.success;
  const double success_rate = n ? static_cast<double>(successes) / n : 0.0;
  double mean_steps = 0.0;
  if (n) {
    mean.map_acc_m2 /= n;
    mean.iou_pct /= n;
    mean.cov_m2 /= n;
    mean.cov_pct /= n;
    mean.spl /= n;
    mean_steps = static_cast<double>(mean.steps_taken) / n;
    mean.steps_taken = static_cast<int>(std::lround(mean_steps));
    mean.gd_m /= n;
    mean.gedr /= n;
    mean.path_m /= n;
    mean.mean_step_ms /= n;
  }

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::string episodes = metrics_csv_header() + "\n";
    std::string failures, timing = "episode,mean_step_ms\n";
    for (const SuiteRow& r : result.rows) {
      if (r.aborted) {
        failures += r.episode_id + ": " + r.failure + "\n";
        continue;
      }
      episodes += metrics_csv_row(r.episode_id, policy_name(cfg.policy), r.metrics) + "\n";
      timing += r.episode_id + "," + fmt(r.metrics.mean_step_ms) + "\n";
    }
    write_text(fs::path(out_dir) / "episodes.csv", episodes);
    write_text(fs::path(out_dir) / "timing.csv", timing);
    if (!failures.empty()) write_text(fs::path(out_dir) / "failures.txt", failures);
    std::string summary =
        "policy,task,alpha1,alpha2,episodes,aborted,map_acc_m2,iou_pct,cov_m2,cov_pct,success_rate,spl,steps_taken,gd_m,"
        "gedr,path_m\n";
    summary += std::string(policy_name(cfg.policy)) + "," + task_name(cfg.task) + "," + fmt(cfg.policy_cfg.alpha1) +
               "," + fmt(cfg.policy_cfg.alpha2) + "," + std::to_string(n) + "," + std::to_string(result.aborted) + "," +
               fmt(mean.map_acc_m2) + "," + fmt(mean.iou_pct) + "," + fmt(mean.cov_m2) + "," + fmt(mean.cov_pct) +
               "," + fmt(success_rate) + "," + fmt(mean.spl) + "," + fmt(mean_steps) + "," + fmt(mean.gd_m) + "," +
               fmt(mean.gedr) + "," + fmt(mean.path_m) + "\n";
    write_text(fs::path(out_dir) / "summary.csv", summary);
  }
  mean.success = success_rate > 0.0;
  return result;
}

std::vector<MemberTrainReport> train_predictors(const TrainSetup& setup, const std::string& out_dir) {
  require(setup.members >= 1, "train: need at least one member");
  fs::create_directories(out_dir);
  const std::uint64_t first = setup.seed_base + setup.seed * 1000ULL;

  // Samples grouped per training pair so members can bootstrap over pairs.
  std::vector<std::vector<Sample>> train_groups;
  std::vector<Sample> heldout;
  std::mt19937_64 rng(setup.seed);
  DatasetConfig dcfg = setup.dataset;
  dcfg.waypoints_per_episode = setup.waypoints;
  for (int k = 0; k < setup.plans + setup.heldout_plans; ++k) {
    const Floorplan fp = generate_floorplan(first + static_cast<std::uint64_t>(k), setup.world);
    const std::vector<TrainingPair> pairs =
        build_dataset(std::span<const Floorplan>(&fp, 1), setup.episodes_per_plan, rng(), dcfg);
    for (const TrainingPair& pair : pairs) {
      std::vector<Sample> s = make_samples(std::span<const TrainingPair>(&pair, 1), setup.samples_per_pair, rng());
      if (k < setup.plans) {
        train_groups.push_back(std::move(s));
      } else {
        heldout.insert(heldout.end(), s.begin(), s.end());
      }
    }
  }
  if (train_groups.empty() || heldout.empty()) fail(ErrorCode::kTrainingDiverged, "train: empty dataset");

  std::vector<MemberTrainReport> reports;
  std::string curve = "member,epoch,train_loss\n";
  for (int i = 0; i < setup.members; ++i) {
    std::mt19937_64 boot(setup.seed * 7919ULL + static_cast<std::uint64_t>(i));
    std::uniform_int_distribution<std::size_t> pick(0, train_groups.size() - 1);
    std::vector<Sample> samples;
    for (std::size_t j = 0; j < train_groups.size(); ++j) {
      const auto& g = train_groups[pick(boot)];
      samples.insert(samples.end(), g.begin(), g.end());
    }
    const PredictorParams init = PredictorParams::random_init(setup.seed * 1000ULL + static_cast<std::uint64_t>(i) + 1);
    TrainConfig sgd = setup.sgd;
    sgd.seed = setup.seed * 31ULL + static_cast<std::uint64_t>(i);
    MemberTrainReport rep;
    rep.heldout_initial = loss_and_gradient(init, heldout, nullptr);
    const PredictorParams trained = train(init, samples, sgd, &rep.train);
    rep.heldout_final = loss_and_gradient(trained, heldout, nullptr);
    if (!std::isfinite(rep.heldout_final)) fail(ErrorCode::kTrainingDiverged, "train: held-out loss is not finite");
    save_weights(member_weights_path(out_dir, i), trained);
    curve += std::to_string(i) + ",0," + fmt(rep.train.initial_loss) + "\n";
    for (std::size_t e = 0; e < rep.train.epoch_loss.size(); ++e)
      curve += std::to_string(i) + "," + std::to_string(e + 1) + "," + fmt(rep.train.epoch_loss[e]) + "\n";
    reports.push_back(rep);
  }
  write_text(fs::path(out_dir) / "loss_curve.csv", curve);
  std::string manifest = "seed_base " + std::to_string(setup.seed_base) + "\nfirst_seed " + std::to_string(first) +
                         "\nplans " + std::to_string(setup.plans) + "\nheldout_plans " +
                         std::to_string(setup.heldout_plans) + "\nmembers " + std::to_string(setup.members) + "\n";
  for (std::size_t i = 0; i < reports.size(); ++i)
    manifest += "heldout_loss_" + std::to_string(i) + " " + fmt(reports[i].heldout_initial) + " " +
                fmt(reports[i].heldout_final) + "\n";
  write_text(fs::path(out_dir) / "training.txt", manifest);
  return reports;
}

std::string build_report(const std::string& dir) {
  std::vector<fs::path> summaries;
  if (fs::exists(dir))
    for (const auto& entry : fs::recursive_directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().filename() == "summary.csv") summaries.push_back(entry.path());
  std::sort(summaries.begin(), summaries.end());
  std::ostringstream os;
  os << "# Suite report\n\n";
  os << "| suite | policy | task | alpha1 | alpha2 | episodes | aborted | success | SPL | Cov (m2) | Cov (%) | Map Acc (m2) | "
        "IoU (%) |\n";
  os << "|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const fs::path& p : summaries) {
    std::ifstream in(p);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    std::vector<std::string> f;
    std::stringstream ss(row);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() < 16) continue;
    std::string policy = f[0];
    if (policy == "frontier") policy = "frontier (nearest-frontier)";
    os << "| " << fs::relative(p.parent_path(), dir).string() << " | " << policy << " | " << f[1] << " | " << f[2]
       << " | " << f[3] << " | " << f[4] << " | " << f[5] << " | " << f[10] << " | " << f[11] << " | " << f[8] << " | "
       << f[9] << " | " << f[6] << " | " << f[7] << " |\n";
  }
  if (summaries.empty()) os << "\n_no summary.csv files found under " << dir << "_\n";
  return os.str();
}

std::string render_svg(const Floorplan& fp, const EpisodeTrace& trace, const CandidateSet* candidates,
                       std::optional<std::size_t> selected, std::optional<Cell> goal) {
  constexpr double kPx = 3.0;
  const double s = fp.cell_size_m;
  const auto px = [&](double world, double origin) { return (world - origin) / s * kPx; };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fp.cols() * kPx << "\" height=\"" << fp.rows() * kPx
     << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g fill=\"#444\">\n";
  for (int r = 0; r < fp.rows(); ++r) {
    int c = 0;
    while (c < fp.cols()) {
      if (fp.cells(r, c) != kOccupiedCell) {
        ++c;
        continue;
      }
      const int start = c;
      while (c < fp.cols() && fp.cells(r, c) == kOccupiedCell) ++c;
      os << "<rect x=\"" << start * kPx << "\" y=\"" << r * kPx << "\" width=\"" << (c - start) * kPx
         << "\" height=\"" << kPx << "\"/>\n";
    }
  }
  os << "</g>\n";
  const auto polyline = [&](const std::vector<Cell>& cells, const char* color, double width) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\" points=\"";
    for (const Cell& c : cells) os << (c.col + 0.5) * kPx << ',' << (c.row + 0.5) * kPx << ' ';
    os << "\"/>\n";
  };
  if (candidates) {
    for (std::size_t i = 0; i < candidates->paths.size(); ++i)
      if (!selected || i != *selected) polyline(candidates->paths[i].cells, "#9a9a9a", 1.0);
    if (selected && *selected < candidates->paths.size()) polyline(candidates->paths[*selected].cells, "#d00000", 2.0);
  }
  os << "<polyline fill=\"none\" stroke=\"#1f5fd0\" stroke-width=\"1.5\" points=\"";
  for (const AgentPose& p : trace.poses) os << px(p.x_m, fp.origin_x) << ',' << px(p.z_m, fp.origin_z) << ' ';
  os << "\"/>\n";
  for (std::size_t i = 0; i < trace.short_term_goals.size(); i += 10) {
    const Cell& c = trace.short_term_goals[i];
    os << "<circle cx=\"" << (c.col + 0.5) * kPx << "\" cy=\"" << (c.row + 0.5) * kPx << "\" r=\"2\" fill=\"#d00000\"/>\n";
  }
  if (!trace.poses.empty())
    os << "<circle cx=\"" << px(trace.poses.front().x_m, fp.origin_x) << "\" cy=\""
       << px(trace.poses.front().z_m, fp.origin_z) << "\" r=\"4\" fill=\"#1f5fd0\"/>\n";
  if (goal)
    os << "<circle cx=\"" << (goal->col + 0.5) * kPx << "\" cy=\"" << (goal->row + 0.5) * kPx
       << "\" r=\"5\" fill=\"none\" stroke=\"#00a000\" stroke-width=\"2\"/>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace upen
