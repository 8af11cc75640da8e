#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "upen/runner.hpp"

using namespace upen;
namespace fs = std::filesystem;

namespace {

RunConfig small_run(Task task, PolicyKind policy, int budget) {
  Config c;
  c.set("world.rows", "120");
  c.set("world.cols", "120");
  c.set("world.room_slots_rows", "1");
  c.set("world.room_slots_cols", "2");
  c.set("world.min_room_cells", "40");
  c.set("world.max_room_cells", "50");
  c.set("map.rows", "128");
  c.set("map.cols", "128");
  c.set("run.ensemble_size", "2");
  RunConfig rc = RunConfig::from(c);
  rc.task = task;
  rc.policy = policy;
  rc.budget = budget;
  rc.snapshots = {10, 25};
  return rc;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("upen_runner_" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("runner") {
  TEST_CASE("point-goal success means STOP inside the closed goal ball within budget") {
    for (PolicyKind policy : {PolicyKind::kUpen, PolicyKind::kStraightGoal}) {
      RunConfig rc = small_run(Task::kPointGoal, policy, 500);
      const auto members = resolve_members(rc);
      for (int i = 0; i < 3; ++i) {
        const auto [fp, ep] = suite_episode(rc, i);
        EpisodeTrace tr;
        const MetricsRecord m = run_episode(rc, fp, members, ep, std::nullopt, &tr);
        CHECK(m.success == tr.stopped);
        CHECK(static_cast<int>(tr.actions.size()) <= 500);
        CHECK(m.steps_taken == static_cast<int>(tr.actions.size()));
        for (std::size_t k = 0; k + 1 < tr.actions.size(); ++k) CHECK(tr.actions[k] != Action::kStop);
        if (tr.stopped) {
          CHECK(tr.actions.back() == Action::kStop);
          CHECK(std::hypot(tr.poses.back().x_m - ep.goal_x, tr.poses.back().z_m - ep.goal_z) <= 0.2);
          CHECK(m.spl > 0.0);
          CHECK(m.spl <= 1.0);
        } else {
          CHECK(m.spl == 0.0);
        }
      }
    }
  }

  TEST_CASE("running out of budget is a failure") {
    RunConfig rc = small_run(Task::kPointGoal, PolicyKind::kStraightGoal, 3);
    rc.min_geodesic_m = 2.0;
    const auto [fp, ep] = suite_episode(rc, 0);
    EpisodeTrace tr;
    const MetricsRecord m = run_episode(rc, fp, resolve_members(rc), ep, std::nullopt, &tr);
    CHECK_FALSE(m.success);
    CHECK(m.steps_taken == 3);
    CHECK(m.spl == 0.0);
  }

  TEST_CASE("coverage comes from the observation-only map") {
    const RunConfig rc = small_run(Task::kExplore, PolicyKind::kUpen, 40);
    const auto [fp, ep] = suite_episode(rc, 0);
    const fs::path dir = scratch("cov");
    EpisodeTrace tr;
    const MetricsRecord m = run_episode(rc, fp, resolve_members(rc), ep, dir.string(), &tr);

    // Replay the observations alone at every visited pose.
    GlobalMap obs(rc.map_rows, rc.map_cols, fp.cell_size_m, fp.origin_x, fp.origin_z);
    for (const AgentPose& p : tr.poses)
      register_bayes(obs, ground_project(sense(fp, p, rc.sensor), fp.cell_size_m, rc.local_h, rc.local_w), p);
    const GlobalMap saved = load_map((dir / "obs.map").string());
    // The file stores float32 probabilities.
    REQUIRE(saved.probs.size() == obs.probs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < obs.probs.size(); ++i)
      for (int k = 0; k < kNumClasses; ++k)
        worst = std::max(worst, std::abs(saved.probs.data()[i][k] - obs.probs.data()[i][k]));
    CHECK(worst < 1e-6);

    const auto mask = reachable_free_mask(fp, fp.cell_at(ep.start.x_m, ep.start.z_m));
    const Coverage cov = coverage(obs, fp, mask);
    CHECK(m.cov_m2 == cov.m2);
    CHECK(m.cov_pct == cov.pct);
    // The predicted map may fill in more cells, but coverage never counts them.
    const GlobalMap fused = load_map((dir / "fused.map").string());
    CHECK(coverage(fused, fp, mask).m2 >= m.cov_m2);
    fs::remove_all(dir);
  }

  TEST_CASE("candidate sets and replan cadence follow the protocol") {
    for (Task task : {Task::kExplore, Task::kPointGoal}) {
      RunConfig rc = small_run(task, PolicyKind::kUpen, 70);
      const int cadence = task == Task::kExplore ? 30 : 20;
      const auto [fp, ep] = suite_episode(rc, 1);
      const fs::path dir = scratch("cadence");
      EpisodeTrace tr;
      run_episode(rc, fp, resolve_members(rc), ep, dir.string(), &tr);
      const std::set<int> replans(tr.replan_steps.begin(), tr.replan_steps.end());
      const int steps = static_cast<int>(tr.actions.size());
      for (int t = 0; t < steps; t += cadence) CHECK(replans.contains(t));
      for (int n : tr.candidate_counts) CHECK(n <= 10);
      CHECK(tr.decision_log.size() == tr.replan_steps.size());
      for (const std::string& row : tr.decision_log) {
        const auto j = nlohmann::json::parse(row);
        CHECK(j["candidates"].get<int>() <= 10);
        CHECK(j["scores"].size() == j["candidates"].get<std::size_t>());
      }

      // Logged paths start at the agent and expand by at most five cells per edge.
      std::ifstream paths(dir / "paths.txt");
      std::string line;
      int checked = 0;
      while (std::getline(paths, line)) {
        std::istringstream ls(line);
        std::string word;
        std::vector<Cell> cells;
        while (ls >> word) {
          const auto comma = word.find(',');
          if (comma != std::string::npos && word.find('=') == std::string::npos)
            cells.push_back({std::stoi(word.substr(0, comma)), std::stoi(word.substr(comma + 1))});
        }
        for (std::size_t k = 1; k < cells.size(); ++k)
          CHECK(std::hypot(cells[k].row - cells[k - 1].row, cells[k].col - cells[k - 1].col) <= 5.0 + 1e-9);
        ++checked;
      }
      CHECK(checked > 0);
      fs::remove_all(dir);
    }
  }

  TEST_CASE("an untrained ensemble explores with zero uncertainty and the length tiebreak") {
    const RunConfig rc = small_run(Task::kExplore, PolicyKind::kUpen, 60);
    const auto [fp, ep] = suite_episode(rc, 2);
    EpisodeTrace tr;
    run_episode(rc, fp, resolve_members(rc), ep, std::nullopt, &tr);
    int decisions = 0;
    for (const std::string& row : tr.decision_log) {
      const auto j = nlohmann::json::parse(row);
      if (j["selected"].is_null()) continue;
      ++decisions;
      std::size_t best = 0;
      for (std::size_t i = 0; i < j["scores"].size(); ++i) {
        CHECK(j["scores"][i]["explore"].get<double>() == 0.0);
        if (j["scores"][i]["length_m"].get<double>() < j["scores"][best]["length_m"].get<double>()) best = i;
      }
      CHECK(j["selected"].get<std::size_t>() == best);
    }
    CHECK(decisions > 0);
  }

  TEST_CASE("suites write byte-identical outputs for identical seeds") {
    RunConfig rc = small_run(Task::kExplore, PolicyKind::kUpen, 30);
    rc.episodes = 2;
    rc.artifacts = true;
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    const auto members = resolve_members(rc);
    run_suite(rc, members, a.string());
    run_suite(rc, members, b.string());
    int compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file() || entry.path().filename() == "timing.csv") continue;
      const fs::path other = b / fs::relative(entry.path(), a);
      REQUIRE(fs::exists(other));
      CHECK(slurp(entry.path()) == slurp(other));
      ++compared;
    }
    CHECK(compared > 10);
    fs::remove_all(a);
    fs::remove_all(b);
  }

  TEST_CASE("artifacts are well-formed") {
    RunConfig rc = small_run(Task::kPointGoal, PolicyKind::kUpen, 30);
    const auto [fp, ep] = suite_episode(rc, 0);
    const fs::path dir = scratch("art");
    run_episode(rc, fp, resolve_members(rc), ep, dir.string());
    CHECK(slurp(dir / "obs_10.pgm").rfind("P", 0) == 0);
    CHECK(slurp(dir / "uncertainty_25.pgm").rfind("P", 0) == 0);
    const std::string svg = slurp(dir / "trajectory.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::ifstream log(dir / "decisions.jsonl");
    std::string line;
    int rows = 0;
    while (std::getline(log, line)) {
      CHECK_NOTHROW((void)nlohmann::json::parse(line));
      ++rows;
    }
    CHECK(rows > 0);
    const std::string csv = slurp(dir / "metrics.csv");
    CHECK(csv.rfind(metrics_csv_header() + "\n", 0) == 0);
    fs::remove_all(dir);
  }

  TEST_CASE("policy and task names round-trip and mismatches are rejected") {
    for (PolicyKind p : {PolicyKind::kUpen, PolicyKind::kFrontier, PolicyKind::kRandomGoal, PolicyKind::kStraightGoal})
      CHECK(parse_policy(policy_name(p)) == p);
    CHECK_THROWS_AS(parse_policy("greedy"), Error);
    const RunConfig rc = small_run(Task::kExplore, PolicyKind::kStraightGoal, 5);
    const auto [fp, ep] = suite_episode(rc, 0);
    CHECK_THROWS_AS(run_episode(rc, fp, resolve_members(rc), ep), Error);
  }
}
