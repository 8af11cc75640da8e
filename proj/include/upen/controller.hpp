#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "upen/mapping.hpp"

namespace upen {

struct ControllerConfig {
  double blocked_threshold = 0.5;    // fused OCCUPIED probability at or above which a cell is blocked
  double unknown_penalty = 0.5;      // extra cost per unknown cell
  double clearance_penalty = 2.0;    // extra cost next to blocked cells
  double forward_veto = 0.9;         // never drive into a cell this likely occupied
  int waypoint_cells = 6;
};

/// Deterministic route-following controller state.
struct ControllerState {
  std::optional<Cell> goal;
  std::vector<Cell> route;
  int stuck = 0;
  std::unordered_set<Cell> bumped;  // cells where the agent collided, treated as blocked
};

/// A* route over the fused map (8-connected, no corner cutting). Empty when unreachable.
std::vector<Cell> plan_route(const GlobalMap& fused, Cell start, Cell goal, const ControllerConfig& cfg,
                             const std::unordered_set<Cell>& bumped = {});

/// Route costs (same cost model as plan_route) from `start` to every cell; kUnreachable where blocked.
Grid<double> route_costs(const GlobalMap& fused, Cell start, const ControllerConfig& cfg,
                         const std::unordered_set<Cell>& bumped = {});

/// Next discrete action towards `goal_cell`; rotates in place and counts a stuck step when no
/// route exists or the way ahead is vetoed. Never returns STOP.
Action next_action(ControllerState& state, const AgentPose& pose, const GlobalMap& fused, Cell goal_cell,
                   const ControllerConfig& cfg = {});

/// Records a collision: the cell just ahead of the agent becomes blocked for routing.
void note_collision(ControllerState& state, const AgentPose& pose, const GlobalMap& fused);

/// Closed-ball goal test.
bool reached(const AgentPose& pose, double goal_x, double goal_z, double radius_m = 0.2);

}  // namespace upen
