#include "upen/policy.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace upen {

namespace {

constexpr double kTieTolerance = 1e-12;

void require_path(const Path& path) {
  if (path.cells.empty()) fail(ErrorCode::kInvalidArgument, "empty path");
}

}  // namespace

double score_exploration(const Path& path, const Grid<double>& uncertainty) {
  require_path(path);
  double sum = 0.0;
  for (const Cell& c : path.cells) {
    require(uncertainty.contains(c), "score_exploration: path cell outside the uncertainty grid");
    sum += uncertainty[c];
  }
  return sum / static_cast<double>(path.cells.size());
}

double path_occupancy_score(const Path& path, const GlobalMap& member_map) {
  require_path(path);
  double best = 0.0;
  for (const Cell& c : path.cells) {
    require(member_map.probs.contains(c), "path_occupancy_score: path cell outside the map");
    best = std::max(best, occupancy(member_map.probs[c]));
  }
  return best;
}

PathScore score_pointgoal(const Path& path, std::span<const GlobalMap> member_maps, const PolicyConfig& cfg,
                          double max_length_m) {
  require(member_maps.size() >= 2, "score_pointgoal: need at least two member maps");
  PathScore s;
  std::vector<double> p;
  p.reserve(member_maps.size());
  for (const GlobalMap& m : member_maps) p.push_back(path_occupancy_score(path, m));
  const double n = static_cast<double>(p.size());
  for (double v : p) s.mu += v;
  s.mu /= n;
  double var = 0.0;
  for (double v : p) var += (v - s.mu) * (v - s.mu);
  s.sigma = std::sqrt(var / n);
  s.length_m = path.length_m;
  s.d = max_length_m > 0.0 ? path.length_m / max_length_m : 1.0;
  s.total = s.mu - cfg.alpha1 * s.sigma + cfg.alpha2 * s.d;
  return s;
}

std::vector<PathScore> score_candidates(const CandidateSet& candidates, Task task,
                                        std::span<const GlobalMap> member_maps, const Grid<double>& uncertainty,
                                        const PolicyConfig& cfg) {
  std::vector<PathScore> scores;
  double max_len = 0.0;
  for (const Path& p : candidates.paths) max_len = std::max(max_len, p.length_m);
  for (const Path& p : candidates.paths) {
    PathScore s;
    if (task == Task::kExplore) {
      s.explore_score = score_exploration(p, uncertainty);
      s.length_m = p.length_m;
      s.d = max_len > 0.0 ? p.length_m / max_len : 1.0;
      s.total = s.explore_score;
    } else {
      s = score_pointgoal(p, member_maps, cfg, max_len);
      s.explore_score = score_exploration(p, uncertainty);
    }
    scores.push_back(s);
  }
  return scores;
}

std::size_t select_path(std::span<const Path> candidates, std::span<const PathScore> scores, Task task) {
  if (candidates.empty()) fail(ErrorCode::kPlanning, "select_path: empty candidate set");
  require(candidates.size() == scores.size(), "select_path: scores do not match candidates");
  const auto key = [&](std::size_t i) { return task == Task::kExplore ? -scores[i].explore_score : scores[i].total; };
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double ki = key(i), kb = key(best);
    if (ki < kb - kTieTolerance) {
      best = i;
    } else if (std::abs(ki - kb) <= kTieTolerance && candidates[i].length_m < candidates[best].length_m - kTieTolerance) {
      best = i;
    }
  }
  return best;
}

std::size_t short_term_goal_index(const Path& path, double lookahead_m, double cell_size_m) {
  require_path(path);
  double run = 0.0;
  std::size_t idx = 0;
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    run += std::hypot(path.cells[i].row - path.cells[i - 1].row, path.cells[i].col - path.cells[i - 1].col) *
           cell_size_m;
    if (run > lookahead_m + 1e-9) break;
    idx = i;
  }
  return idx;
}

Cell short_term_goal(const Path& path, double lookahead_m, double cell_size_m) {
  return path.cells[short_term_goal_index(path, lookahead_m, cell_size_m)];
}

std::string decision_log_row(int step, Task task, const CandidateSet& candidates, std::span<const PathScore> scores,
                             std::optional<std::size_t> selected, std::optional<Cell> short_term) {
  nlohmann::json row;
  row["step"] = step;
  row["task"] = task == Task::kExplore ? "explore" : "pointgoal";
  row["candidates"] = candidates.paths.size();
  row["blocked"] = candidates.blocked;
  row["reached_goal"] = candidates.reached_goal;
  row["tree_size"] = candidates.tree_size;
  nlohmann::json js = nlohmann::json::array();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    js.push_back({{"index", i},
                  {"explore", scores[i].explore_score},
                  {"mu", scores[i].mu},
                  {"sigma", scores[i].sigma},
                  {"d", scores[i].d},
                  {"total", scores[i].total},
                  {"length_m", scores[i].length_m}});
  }
  row["scores"] = js;
  row["selected"] = selected ? nlohmann::json(*selected) : nlohmann::json(nullptr);
  row["short_term_goal"] = short_term ? nlohmann::json::array({short_term->row, short_term->col}) : nlohmann::json(nullptr);
  return row.dump();
}

}  // namespace upen
