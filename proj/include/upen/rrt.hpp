#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "upen/mapping.hpp"

namespace upen {

/// Ordered global cells from the agent cell to a terminal cell.
struct Path {
  std::vector<Cell> cells;
  double length_m = 0.0;
};

/// Euclidean length over consecutive cell centres, in metres.
double path_length(const std::vector<Cell>& cells, double cell_size_m);

struct RrtParams {
  int max_paths = 10;
  double goal_rate = 0.2;
  int step_cells = 5;
  int iterations = 3000;
  double occupancy_threshold = 0.6;
  int goal_tolerance_cells = 4;
  std::uint64_t seed = 1;
};

struct CandidateSet {
  std::vector<Path> paths;
  bool blocked = false;       // the tree could not grow past the root
  bool reached_goal = false;  // paths end within goal tolerance (point-goal mode)
  int tree_size = 0;
  int samples = 0;       // sampling draws, including rejected ones
  int goal_samples = 0;  // draws that returned the goal
};

/// Interpolated edge test: every cell on the segment has occupancy below the threshold.
bool edge_traversable(const GlobalMap& fused, Cell a, Cell b, double occupancy_threshold);

/// Grows an RRT from `agent` on the fused map. With a goal: goal-biased sampling and
/// root-to-node chains ending near the goal (closest-node fallback). Without: chains to
/// the deepest leaves. Throws Error(kPlanning) when the agent cell is not traversable.
CandidateSet plan_paths(const GlobalMap& fused, Cell agent, std::optional<Cell> goal, const RrtParams& params);

/// One text record per path: "path <i> cells=<n> length_m=<l> r,c r,c ...".
std::string path_record(const Path& path, std::size_t index);

}  // namespace upen
