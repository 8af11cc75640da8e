#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "upen/rrt.hpp"

namespace upen {

enum class Task { kExplore, kPointGoal };

struct PolicyConfig {
  double alpha1 = 0.1;  // weight of the ensemble spread (optimism)
  double alpha2 = 0.5;  // weight of normalised path length
  double lookahead_m = 1.5;
  int explore_cadence = 30;
  int pointgoal_cadence = 20;

  int cadence(Task task) const { return task == Task::kExplore ? explore_cadence : pointgoal_cadence; }
};

struct PathScore {
  double explore_score = 0.0;  // mean uncertainty along the path
  double mu = 0.0;             // mean over members of the path occupancy score
  double sigma = 0.0;          // population std of the same
  double d = 0.0;              // length normalised by the longest candidate
  double total = 0.0;          // mu - alpha1 * sigma + alpha2 * d
  double length_m = 0.0;
};

/// Mean of `uncertainty` over the path cells.
double score_exploration(const Path& path, const Grid<double>& uncertainty);

/// Maximum OCCUPIED probability of `member_map` over the path cells.
double path_occupancy_score(const Path& path, const GlobalMap& member_map);

/// Upper-confidence traversability objective for one path. `max_length_m` normalises d.
PathScore score_pointgoal(const Path& path, std::span<const GlobalMap> member_maps, const PolicyConfig& cfg,
                          double max_length_m);

/// Scores every candidate for the task; point-goal lengths are normalised by the longest candidate
/// (d = 1 for every path when all candidates have zero length).
std::vector<PathScore> score_candidates(const CandidateSet& candidates, Task task,
                                        std::span<const GlobalMap> member_maps, const Grid<double>& uncertainty,
                                        const PolicyConfig& cfg);

/// Exploration: argmax explore_score; point-goal: argmin total. Ties go to the shorter path,
/// then the lower index. Throws Error(kPlanning) on an empty candidate set.
std::size_t select_path(std::span<const Path> candidates, std::span<const PathScore> scores, Task task);

/// Index of the farthest path cell whose cumulative along-path distance is <= lookahead_m.
std::size_t short_term_goal_index(const Path& path, double lookahead_m, double cell_size_m);
Cell short_term_goal(const Path& path, double lookahead_m, double cell_size_m);

/// JSON-lines audit row for one replanning decision.
std::string decision_log_row(int step, Task task, const CandidateSet& candidates, std::span<const PathScore> scores,
                             std::optional<std::size_t> selected, std::optional<Cell> short_term);

}  // namespace upen
