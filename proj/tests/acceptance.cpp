// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit when any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "upen/metrics.hpp"
#include "upen/runner.hpp"

using namespace upen;
namespace fs = std::filesystem;

namespace {

// --- reporting -------------------------------------------------------------

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail = what;
    ok = ok && cond;
  }
};

struct Worst {
  double rel = 0.0;
  int compared = 0;

  void add(double got, double want) {
    const double err = std::abs(got - want);
    rel = std::max(rel, err == 0.0 ? 0.0 : err / std::max(std::abs(want), 1e-300));
    ++compared;
  }
};

int g_failed = 0;

void report(int id, const char* title, const Check& c, const std::string& summary) {
  std::printf("criterion %d [%s] %s: %s\n", id, c.ok ? "PASS" : "FAIL", title,
              c.ok ? summary.c_str() : (c.detail + "; " + summary).c_str());
  std::fflush(stdout);
  if (!c.ok) ++g_failed;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --- random fixtures ---------------------------------------------------------

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
int below(Rng& rng, int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); }

ClassDist random_dist(Rng& rng) {
  const double a = uniform(rng, 1e-3), b = uniform(rng, 1e-3), c = uniform(rng, 1e-3);
  return {a / (a + b + c), b / (a + b + c), c / (a + b + c)};
}

GlobalMap random_map(Rng& rng, int rows, int cols) {
  GlobalMap m(rows, cols, 0.05);
  for (auto& d : m.probs.data()) d = random_dist(rng);
  return m;
}

Floorplan random_plan(Rng& rng, int rows, int cols) {
  Floorplan fp;
  fp.cells = Grid<std::uint8_t>(rows, cols, kFreeCell);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1 || uniform(rng) < 0.2) fp.cells(r, c) = kOccupiedCell;
  return fp;
}

Path random_path(Rng& rng, int rows, int cols) {
  Path p;
  const int n = 1 + below(rng, 12);
  for (int i = 0; i < n; ++i) p.cells.push_back({below(rng, rows), below(rng, cols)});
  p.length_m = path_length(p.cells, 0.05);
  return p;
}

// --- independent oracles -------------------------------------------------------

double oracle_cross_entropy(const Grid<ClassDist>& pred, const Grid<std::uint8_t>& labels) {
  std::vector<double> terms;
  for (int r = 0; r < pred.rows(); ++r)
    for (int c = 0; c < pred.cols(); ++c) terms.push_back(-std::log(pred(r, c)[labels(r, c)]));
  return std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
}

// Softmax cross entropy via log-sum-exp.
double oracle_sample_loss(const PredictorParams& p, const std::vector<Sample>& batch) {
  double total = 0.0;
  for (const Sample& s : batch) {
    double z[kNumClasses];
    for (int k = 0; k < kNumClasses; ++k) z[k] = std::inner_product(s.features.begin(), s.features.end(), p.weights[k].begin(), 0.0);
    const double m = *std::max_element(z, z + kNumClasses);
    double lse = 0.0;
    for (double v : z) lse += std::exp(v - m);
    total += m + std::log(lse) - z[s.label];
  }
  return total / static_cast<double>(batch.size());
}

ClassDist oracle_bayes(const ClassDist& prior, const ClassDist& lik) {
  ClassDist p;
  double z = 0;
  for (int i = 0; i < 3; ++i) {
    p[i] = prior[i] * std::clamp(lik[i], kProbEpsilon, 1.0 - kProbEpsilon);
    z += p[i];
  }
  for (double& v : p) v /= z;
  for (int mask = 0; mask < 7; ++mask) {
    int n = 0;
    double rest = 0;
    for (int i = 0; i < 3; ++i) (mask >> i & 1) ? ++n : (rest += p[i], 0);
    ClassDist q;
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
      const bool pinned = mask >> i & 1;
      q[i] = pinned ? kProbEpsilon : p[i] * (1 - kProbEpsilon * n) / rest;
      if (pinned ? p[i] >= kProbEpsilon : q[i] < kProbEpsilon) ok = false;
    }
    if (ok) return q;
  }
  return p;
}

double occ(const ClassDist& d) { return d[static_cast<int>(CellClass::kOccupied)]; }

// --- criterion 1 -------------------------------------------------------------

void criterion_formulas() {
  Check c;
  Worst loss, explore_w, path_max_w, total_w, mean, var, bayes, spl_w, iou_w, cov_w;
  Rng rng(20240601);
  const PolicyConfig defaults;
  for (int fixture = 0; fixture < 120; ++fixture) {
    const int rows = 2 + below(rng, 31), cols = 2 + below(rng, 31);
    const int n = 2 + below(rng, 7);

    // Loss on a prediction grid and on a feature batch.
    Grid<ClassDist> pred(rows, cols);
    Grid<std::uint8_t> labels(rows, cols);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      pred.data()[i] = random_dist(rng);
      labels.data()[i] = static_cast<std::uint8_t>(below(rng, 3));
    }
    loss.add(cross_entropy(pred, labels), oracle_cross_entropy(pred, labels));
    std::vector<Sample> batch(1 + below(rng, 32));
    for (Sample& s : batch) {
      for (double& f : s.features) f = uniform(rng, -1, 1);
      s.label = static_cast<std::uint8_t>(below(rng, 3));
    }
    const PredictorParams params = PredictorParams::random_init(rng(), 0.7);
    loss.add(loss_and_gradient(params, batch, nullptr), oracle_sample_loss(params, batch));

    // Ensemble reductions.
    std::vector<GlobalMap> members;
    for (int i = 0; i < n; ++i) members.push_back(random_map(rng, rows, cols));
    std::vector<const Grid<ClassDist>*> ptrs;
    for (const GlobalMap& m : members) ptrs.push_back(&m.probs);
    const Grid<ClassDist> mu = ensemble_mean(ptrs);
    const Grid<double> v = ensemble_variance(ptrs);
    for (int r = 0; r < rows; ++r)
      for (int col = 0; col < cols; ++col) {
        for (int k = 0; k < kNumClasses; ++k) {
          double s = 0;
          for (const GlobalMap& m : members) s += m.probs(r, col)[k];
          mean.add(mu(r, col)[k], s / n);
        }
        double s = 0, ss = 0;
        for (const GlobalMap& m : members) s += occ(m.probs(r, col));
        for (const GlobalMap& m : members) ss += (occ(m.probs(r, col)) - s / n) * (occ(m.probs(r, col)) - s / n);
        var.add(v(r, col), ss / n);
      }

    // Path scores over a candidate set.
    Grid<double> unc(rows, cols);
    for (double& u : unc.data()) u = uniform(rng, 0, 0.25);
    CandidateSet cs;
    for (int k = 0; k < 1 + below(rng, 10); ++k) cs.paths.push_back(random_path(rng, rows, cols));
    PolicyConfig pc = defaults;
    if (fixture % 2) {
      pc.alpha1 = uniform(rng);
      pc.alpha2 = uniform(rng);
    }
    const auto explore = score_candidates(cs, Task::kExplore, members, unc, pc);
    const auto point = score_candidates(cs, Task::kPointGoal, members, unc, pc);
    double longest = 0;
    for (const Path& p : cs.paths) longest = std::max(longest, p.length_m);
    for (std::size_t k = 0; k < cs.paths.size(); ++k) {
      const Path& p = cs.paths[k];
      double s = 0;
      for (const Cell& cell : p.cells) s += unc[cell];
      explore_w.add(explore[k].explore_score, s / static_cast<double>(p.cells.size()));
      std::vector<double> maxes;
      for (const GlobalMap& m : members) {
        double best = -1;
        for (const Cell& cell : p.cells) best = std::max(best, occ(m.probs[cell]));
        maxes.push_back(best);
        path_max_w.add(path_occupancy_score(p, m), best);
      }
      const double mbar = std::accumulate(maxes.begin(), maxes.end(), 0.0) / n;
      double sq = 0;
      for (double x : maxes) sq += (x - mbar) * (x - mbar);
      const double d = longest > 0 ? p.length_m / longest : 1.0;
      total_w.add(point[k].total, mbar - pc.alpha1 * std::sqrt(sq / n) + pc.alpha2 * d);
    }

    // Bayes update.
    for (int k = 0; k < 20; ++k) {
      const ClassDist prior = random_dist(rng);
      ClassDist lik = random_dist(rng);
      if (k % 4 == 0) lik[below(rng, 3)] = uniform(rng, 0.995, 1.0);
      const ClassDist got = bayes_update(prior, lik), want = oracle_bayes(prior, lik);
      for (int i = 0; i < 3; ++i) bayes.add(got[i], want[i]);
    }

    // SPL.
    const double l = uniform(rng, 0.5, 20), p = uniform(rng, 0.0, 40);
    const bool ok = fixture % 3 != 0;
    spl_w.add(spl(ok, l, p), ok ? l / std::max(p, l) : 0.0);

    // IoU and coverage against a random floorplan.
    const Floorplan fp = random_plan(rng, rows, cols);
    const GlobalMap pm = random_map(rng, rows, cols);
    double iou_sum = 0;
    int classes = 0;
    for (int cls : {2, 1}) {
      int inter = 0, uni = 0;
      for (int r = 0; r < rows; ++r)
        for (int col = 0; col < cols; ++col) {
          const ClassDist& dd = pm.probs(r, col);
          const int arg = static_cast<int>(std::max_element(dd.begin(), dd.end()) - dd.begin());
          const bool predicted = arg == cls && dd[arg] > 1.0 / 3.0 + kDecidedMargin;
          const bool truth = (fp.cells(r, col) == kOccupiedCell ? 1 : 2) == cls;
          inter += predicted && truth;
          uni += predicted || truth;
        }
      if (uni) {
        iou_sum += static_cast<double>(inter) / uni;
        ++classes;
      }
    }
    iou_w.add(iou(pm, fp), classes ? 100.0 * iou_sum / classes : 0.0);

    GlobalMap seen(rows, cols, 0.05);
    for (auto& dd : seen.probs.data())
      if (uniform(rng) < 0.5) dd = random_dist(rng);
    Grid<std::uint8_t> mask(rows, cols, 0);
    int in_mask = 0, observed = 0;
    for (int r = 0; r < rows; ++r)
      for (int col = 0; col < cols; ++col) {
        mask(r, col) = fp.cells(r, col) == kFreeCell && uniform(rng) < 0.8;
        in_mask += mask(r, col);
        observed += mask(r, col) && !(seen.probs(r, col) == kUniform);
      }
    const Coverage cv = coverage(seen, fp, mask);
    cov_w.add(cv.m2, observed * 0.05 * 0.05);
    cov_w.add(cv.pct, in_mask ? 100.0 * observed / in_mask : 0.0);
  }

  std::ostringstream os;
  const std::pair<const char*, Worst*> all[] = {{"loss", &loss}, {"explore", &explore_w}, {"path_max", &path_max_w}, {"total", &total_w},
                                                {"mean", &mean}, {"var", &var},   {"bayes", &bayes}, {"spl", &spl_w},
                                                {"iou", &iou_w}, {"cov", &cov_w}};
  double worst = 0;
  for (const auto& [name, w] : all) {
    c.require(w->rel <= 1e-9, std::string(name) + " exceeds 1e-9 relative error");
    worst = std::max(worst, w->rel);
    os << name << '=' << w->compared << ' ';
  }
  report(1, "formula oracles", c, "120 fixtures, max relative error " + fmt("%.2e", worst) + ", comparisons " + os.str());
}

// --- criterion 2 -------------------------------------------------------------

void criterion_gradient() {
  Check c;
  Rng rng(77);
  double worst = 0;
  for (int input = 0; input < 20; ++input) {
    std::vector<Sample> batch(24);
    for (Sample& s : batch) {
      for (double& f : s.features) f = uniform(rng);
      s.features[kFeatureDim - 1] = 1.0;
      s.label = static_cast<std::uint8_t>(below(rng, 3));
    }
    const PredictorParams p = PredictorParams::random_init(1000 + input, 0.5);
    std::array<FeatureVector, kNumClasses> grad;
    loss_and_gradient(p, batch, &grad);
    for (int probe = 0; probe < 10; ++probe) {
      const int k = below(rng, kNumClasses), j = below(rng, kFeatureDim);
      const double h = 1e-5;
      PredictorParams plus = p, minus = p;
      plus.weights[k][j] += h;
      minus.weights[k][j] -= h;
      const double fd = (loss_and_gradient(plus, batch, nullptr) - loss_and_gradient(minus, batch, nullptr)) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[k][j]) / std::max(std::abs(fd) + std::abs(grad[k][j]), 1e-8));
    }
  }
  c.require(worst < 1e-4, "gradient mismatch");
  report(2, "gradient check", c, "20 inputs x 10 coordinates, max relative error " + fmt("%.2e", worst));
}

// --- shared suite helpers ------------------------------------------------------

RunConfig default_run(Task task, PolicyKind policy, const std::string& weights) {
  RunConfig rc = RunConfig::from(Config{});
  rc.task = task;
  rc.policy = policy;
  rc.weights_dir = weights;
  return rc;
}

double mean_of(const SuiteResult& r, double MetricsRecord::*field) {
  double s = 0;
  int n = 0;
  for (const SuiteRow& row : r.rows)
    if (!row.aborted) {
      s += row.metrics.*field;
      ++n;
    }
  return n ? s / n : 0.0;
}

double success_rate(const SuiteResult& r) {
  int n = 0, ok = 0;
  for (const SuiteRow& row : r.rows)
    if (!row.aborted) {
      ++n;
      ok += row.metrics.success;
    }
  return n ? static_cast<double>(ok) / n : 0.0;
}

// --- criterion 3 -------------------------------------------------------------

void criterion_ablation(const std::string& weights, const fs::path& work) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig full = default_run(Task::kPointGoal, PolicyKind::kUpen, weights);
  full.episodes = 50;
  full.min_gedr = 2.5;
  RunConfig occ_only = full;
  occ_only.policy_cfg.alpha1 = occ_only.policy_cfg.alpha2 = 0.0;
  RunConfig straight = full;
  straight.policy = PolicyKind::kStraightGoal;
  const auto members = resolve_members(full);
  const SuiteResult a = run_suite(full, members, (work / "pg_upen").string());
  const SuiteResult b = run_suite(occ_only, members, (work / "pg_occ").string());
  const SuiteResult s = run_suite(straight, members, (work / "pg_straight").string());
  bool same_episodes = a.rows.size() == b.rows.size() && a.rows.size() == s.rows.size();
  double min_gedr = 1e9;
  for (std::size_t i = 0; same_episodes && i < a.rows.size(); ++i) {
    same_episodes = a.rows[i].episode_id == b.rows[i].episode_id && a.rows[i].episode_id == s.rows[i].episode_id &&
                    a.rows[i].metrics.gd_m == s.rows[i].metrics.gd_m;
    if (!a.rows[i].aborted) min_gedr = std::min(min_gedr, a.rows[i].metrics.gedr);
  }
  const int completed = static_cast<int>(a.rows.size()) - a.aborted;
  c.require(same_episodes, "suites did not share episodes");
  c.require(completed >= 50, "fewer than 50 completed episodes");
  c.require(min_gedr >= 2.5, "episode below GEDR 2.5");
  const double su = success_rate(a), so = success_rate(b), ss = success_rate(s);
  c.require(su >= so, "UPEN success below UPEN-Occ");
  c.require(su >= ss, "UPEN success below straight_goal");
  report(3, "point-goal ablation ordering", c,
         fmt("%.0f episodes (min GEDR %.2f); success UPEN %.3f, UPEN-Occ %.3f", completed, min_gedr, su, so) +
             fmt(", straight_goal %.3f; gaps %+.3f / %+.3f; SPL %.3f", ss, su - so, su - ss, mean_of(a, &MetricsRecord::spl)) +
             fmt(" / %.3f / %.3f; %.0f s", mean_of(b, &MetricsRecord::spl), mean_of(s, &MetricsRecord::spl), seconds_since(t0)));
}

// --- criterion 4 -------------------------------------------------------------

double g_upen_step_ms = 0.0;

void criterion_exploration(const std::string& weights, const fs::path& work) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig upen = default_run(Task::kExplore, PolicyKind::kUpen, weights);
  upen.episodes = 20;
  upen.budget = 1000;
  RunConfig random = upen, frontier = upen;
  random.policy = PolicyKind::kRandomGoal;
  frontier.policy = PolicyKind::kFrontier;
  const auto members = resolve_members(upen);
  const SuiteResult u = run_suite(upen, members, (work / "ex_upen").string());
  const SuiteResult r = run_suite(random, members, (work / "ex_random").string());
  const SuiteResult f = run_suite(frontier, members, (work / "ex_frontier").string());
  g_upen_step_ms = mean_of(u, &MetricsRecord::mean_step_ms);
  const int completed = static_cast<int>(u.rows.size()) - u.aborted;
  bool full_budget = true;
  for (const SuiteRow& row : u.rows) full_budget = full_budget && (row.aborted || row.metrics.steps_taken == 1000);
  const double cu = mean_of(u, &MetricsRecord::cov_pct), cr = mean_of(r, &MetricsRecord::cov_pct),
               cf = mean_of(f, &MetricsRecord::cov_pct);
  c.require(completed >= 20 && r.aborted == 0 && f.aborted == 0, "fewer than 20 completed floorplans");
  c.require(full_budget, "episode ended before T=1000");
  c.require(cu >= 1.10 * cr, "UPEN coverage below 1.10x random_goal");
  c.require(cu >= cf - 2.0, "UPEN coverage more than 2 points below frontier");
  report(4, "exploration ordering", c,
         fmt("%.0f floorplans at T=1000; Cov%% UPEN %.2f, random_goal %.2f (x%.3f)", completed, cu, cr, cr > 0 ? cu / cr : 0) +
             fmt(", frontier %.2f (%+.2f); %.0f s", cf, cu - cf, seconds_since(t0)));
}

// --- criterion 5 -------------------------------------------------------------

void criterion_uncertainty(const std::vector<PredictorParams>& trained) {
  Check c;
  const RunConfig rc = default_run(Task::kExplore, PolicyKind::kUpen, "");
  const GlobalMap blank(rc.map_rows, rc.map_cols, rc.world.cell_size_m);

  // Untrained identical members.
  int zero_violations = 0, tiebreak_checks = 0, tiebreak_ok = 0;
  for (int k = 0; k < 10; ++k) {
    const Floorplan fp = generate_floorplan(500 + k, rc.world);
    const Episode ep = sample_episode(fp, 900 + k, 0.0, 1.0, 1000);
    EnsembleState st(std::vector<PredictorParams>(4, PredictorParams::zeros()), blank, rc.local_h, rc.local_w);
    AgentPose pose = ep.start;
    for (int s = 0; s < 5; ++s) {
      update_ensemble_maps(st, sense(fp, pose, rc.sensor), pose);
      for (double v : st.uncertainty.data()) zero_violations += v != 0.0;
      pose = step(fp, pose, s % 2 ? Action::kTurnLeft : Action::kMoveForward).pose;
    }
    RrtParams rp = rc.rrt;
    rp.seed = 31 + k;
    const CandidateSet cs = plan_paths(st.mean_map, blank.cell_at(pose.x_m, pose.z_m), std::nullopt, rp);
    if (cs.paths.empty()) continue;
    const auto scores = score_candidates(cs, Task::kExplore, st.member_maps, st.uncertainty, rc.policy_cfg);
    std::size_t shortest = 0;
    for (std::size_t i = 1; i < cs.paths.size(); ++i)
      if (cs.paths[i].length_m < cs.paths[shortest].length_m) shortest = i;
    ++tiebreak_checks;
    tiebreak_ok += select_path(cs.paths, scores, Task::kExplore) == shortest;
  }
  c.require(zero_violations == 0, "untrained ensemble produced non-zero uncertainty");
  c.require(tiebreak_checks > 0 && tiebreak_ok == tiebreak_checks, "untrained selection did not follow the tiebreak");

  // Trained bootstrap-diverse members over 100 fixture updates.
  int higher = 0;
  double ratio_sum = 0;
  for (int k = 0; k < 100; ++k) {
    const Floorplan fp = generate_floorplan(600 + k / 4, rc.world);
    const Episode ep = sample_episode(fp, 700 + k, 0.0, 1.0, 1000);
    EnsembleState st(trained, blank, rc.local_h, rc.local_w);
    update_ensemble_maps(st, sense(fp, ep.start, rc.sensor), ep.start);
    const WindowMapping win = map_window(blank, rc.local_h, rc.local_w, ep.start);
    double obs_sum = 0, unobs_sum = 0;
    int obs_n = 0, unobs_n = 0;
    for (int gi : win.global_index) {
      const bool observed = !(st.obs_map.probs.data()[gi] == kUniform);
      (observed ? obs_sum : unobs_sum) += st.uncertainty.data()[gi];
      ++(observed ? obs_n : unobs_n);
    }
    const double mo = obs_n ? obs_sum / obs_n : 0.0, mu = unobs_n ? unobs_sum / unobs_n : 0.0;
    higher += mu > mo;
    ratio_sum += mu;
  }
  c.require(higher >= 95, "unobserved uncertainty exceeded observed in fewer than 95 of 100 updates");
  report(5, "uncertainty behaviour", c,
         fmt("untrained: %.0f non-zero cells, tiebreak %.0f/%.0f", zero_violations, tiebreak_ok, tiebreak_checks) +
             fmt("; trained: unobserved > observed in %.0f/100 updates (mean unobserved variance %.4f)", higher, ratio_sum / 100));
}

// --- criterion 6 -------------------------------------------------------------

void criterion_protocol(const std::string& weights) {
  Check c;
  int episodes = 0, stops = 0, replans = 0, decisions = 0;
  for (Task task : {Task::kPointGoal, Task::kExplore}) {
    RunConfig rc = default_run(task, PolicyKind::kUpen, weights);
    rc.budget = task == Task::kExplore ? 200 : 0;
    const auto members = resolve_members(rc);
    const int cadence = task == Task::kExplore ? 30 : 20;
    c.require(rc.effective_budget() == (task == Task::kExplore ? 200 : 500), "wrong default budget");
    c.require(rc.success_radius_m == 0.2, "success radius is not 0.2 m");
    c.require(rc.rrt.max_paths == 10 && rc.rrt.step_cells == 5 && rc.rrt.goal_rate == 0.2, "RRT defaults differ");
    c.require(rc.policy_cfg.cadence(task) == cadence, "replan cadence differs");
    for (int i = 0; i < 4; ++i) {
      const auto [fp, ep] = suite_episode(rc, i);
      EpisodeTrace tr;
      const MetricsRecord m = run_episode(rc, fp, members, ep, std::nullopt, &tr);
      ++episodes;
      const int steps = static_cast<int>(tr.actions.size());
      c.require(steps <= rc.effective_budget(), "episode exceeded its budget");
      if (task == Task::kPointGoal) {
        const AgentPose& last = tr.poses.back();
        const bool inside = std::hypot(last.x_m - ep.goal_x, last.z_m - ep.goal_z) <= 0.2;
        c.require(m.success == (tr.stopped && inside), "success without STOP inside the goal ball");
        c.require(!tr.stopped || tr.actions.back() == Action::kStop, "STOP is not the final action");
        stops += tr.stopped;
      } else {
        // Coverage from the observation-only map, replayed from the poses alone.
        GlobalMap obs(rc.map_rows, rc.map_cols, fp.cell_size_m, fp.origin_x, fp.origin_z);
        for (const AgentPose& p : tr.poses)
          register_bayes(obs, ground_project(sense(fp, p, rc.sensor), fp.cell_size_m, rc.local_h, rc.local_w), p);
        const Coverage cov = coverage(obs, fp, reachable_free_mask(fp, fp.cell_at(ep.start.x_m, ep.start.z_m)));
        c.require(cov.m2 == m.cov_m2 && cov.pct == m.cov_pct, "coverage differs from the observation-only replay");
      }
      std::vector<int> sorted = tr.replan_steps;
      for (int t = 0; t < steps; t += cadence)
        c.require(std::binary_search(sorted.begin(), sorted.end(), t), "missed a scheduled replan");
      replans += static_cast<int>(sorted.size());
      for (int n : tr.candidate_counts) c.require(n <= 10, "more than 10 candidates");
      decisions += static_cast<int>(tr.candidate_counts.size());
    }
  }

  // RRT structure on fused maps from a real episode: edge length and goal sampling share.
  const RunConfig rc = default_run(Task::kPointGoal, PolicyKind::kUpen, "");
  const auto [fp, ep] = suite_episode(rc, 0);
  GlobalMap fused(rc.map_rows, rc.map_cols, fp.cell_size_m);
  register_bayes(fused, ground_project(sense(fp, ep.start, rc.sensor), fp.cell_size_m, rc.local_h, rc.local_w), ep.start);
  RrtParams rp = rc.rrt;
  rp.max_paths = 1 << 30;
  long draws = 0, goal_draws = 0;
  double longest_edge = 0;
  for (int s = 0; s < 5; ++s) {
    rp.seed = 100 + s;
    const CandidateSet cs = plan_paths(fused, fused.cell_at(ep.start.x_m, ep.start.z_m), Cell{5, 5}, rp);
    draws += cs.samples;
    goal_draws += cs.goal_samples;
    for (const Path& p : cs.paths)
      for (std::size_t k = 1; k < p.cells.size(); ++k)
        longest_edge = std::max(longest_edge, std::hypot(p.cells[k].row - p.cells[k - 1].row, p.cells[k].col - p.cells[k - 1].col));
  }
  const double rate = draws ? static_cast<double>(goal_draws) / draws : 0.0;
  c.require(longest_edge <= 5.0 + 1e-9, "edge longer than 5 cells");
  c.require(std::abs(rate - 0.2) <= 0.02, "goal sampling share outside 0.2 +- 0.02");
  report(6, "task protocol fidelity", c,
         fmt("%.0f episodes, %.0f STOPs, %.0f replans, %.0f decisions", episodes, stops, replans, decisions) +
             fmt("; longest RRT edge %.2f cells, goal share %.4f over %.0f draws", longest_edge, rate, static_cast<double>(draws)));
}

// --- criterion 7 -------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void criterion_determinism(const std::string& weights, const fs::path& work) {
  Check c;
  int files = 0, identical = 0;
  for (Task task : {Task::kExplore, Task::kPointGoal}) {
    RunConfig rc = default_run(task, PolicyKind::kUpen, weights);
    rc.episodes = 3;
    rc.budget = 250;
    rc.artifacts = true;
    const auto members = resolve_members(rc);
    const fs::path a = work / ("det_a_" + std::string(task_name(task))), b = work / ("det_b_" + std::string(task_name(task)));
    run_suite(rc, members, a.string());
    run_suite(rc, members, b.string());
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
      if (!entry.is_regular_file() || entry.path().filename() == "timing.csv") continue;
      ++files;
      const fs::path other = b / fs::relative(entry.path(), a);
      identical += fs::exists(other) && slurp(entry.path()) == slurp(other);
    }
  }
  c.require(files > 0 && identical == files, "suite outputs differ between runs");
  c.require(g_upen_step_ms > 0.0 && g_upen_step_ms <= 100.0, "mean step latency above 100 ms");
  report(7, "determinism and latency", c,
         fmt("%.0f/%.0f output files byte-identical; mean UPEN step %.2f ms at defaults", identical, files, g_upen_step_ms));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "upen_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);
  const auto t0 = std::chrono::steady_clock::now();

  criterion_formulas();
  criterion_gradient();

  // Weights for the behavioural criteria, trained on floorplans disjoint from the evaluation seeds.
  const std::string weights = (work / "weights").string();
  const auto reports = train_predictors(TrainSetup::from(Config{}), weights);
  std::printf("trained %zu members in %.1f s (held-out loss %.4f -> %.4f for member 0)\n", reports.size(),
              seconds_since(t0), reports[0].heldout_initial, reports[0].heldout_final);
  const std::vector<PredictorParams> trained = load_ensemble(weights);

  criterion_ablation(weights, work);
  criterion_exploration(weights, work);
  criterion_uncertainty(trained);
  criterion_protocol(weights);
  criterion_determinism(weights, work);

  std::printf("%d of 7 criteria failed; total %.0f s\n", g_failed, seconds_since(t0));
  fs::remove_all(work);
  return g_failed == 0 ? 0 : 1;
}
