#include "upen/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <queue>

namespace upen {

namespace {

constexpr int kDr[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDc[8] = {0, 0, 1, -1, 1, -1, 1, -1};

double wrap180(double deg) {
  double d = std::fmod(deg + 180.0, 360.0);
  if (d < 0) d += 360.0;
  return d - 180.0;
}

// Shared A*/Dijkstra search; a null goal expands the whole reachable region.
struct Search {
  std::vector<double> g;
  std::vector<int> parent;
};

Search search(const GlobalMap& fused, Cell start, const Cell* goal, const ControllerConfig& cfg,
              const std::unordered_set<Cell>& bumped) {
  const int rows = fused.rows(), cols = fused.cols();
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  Search out{std::vector<double>(n, kUnreachable), std::vector<int>(n, -1)};
  if (!fused.probs.contains(start)) return out;

  // Per-cell blocked flags and extra step costs, computed once per search.
  const std::vector<ClassDist>& probs = fused.probs.data();
  std::vector<std::uint8_t> hard(n, 0);
  for (std::size_t i = 0; i < n; ++i) hard[i] = occupancy(probs[i]) >= cfg.blocked_threshold;
  for (const Cell& c : bumped)
    if (fused.probs.contains(c)) hard[static_cast<std::size_t>(c.row) * cols + c.col] = 1;
  std::vector<double> extra(n, 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * cols + c;
      const ClassDist& d = probs[i];
      if (is_uniform(d) || argmax_class(d) == CellClass::kUnknown) extra[i] += cfg.unknown_penalty;
      for (int k = 0; k < 8; ++k) {
        const int nr = r + kDr[k], nc = c + kDc[k];
        if (nr >= 0 && nc >= 0 && nr < rows && nc < cols && hard[static_cast<std::size_t>(nr) * cols + nc]) {
          extra[i] += cfg.clearance_penalty;
          break;
        }
      }
    }
  const int s = start.row * cols + start.col;
  const int t = goal ? goal->row * cols + goal->col : -1;
  const auto blocked = [&](int r, int c) {
    if (r < 0 || c < 0 || r >= rows || c >= cols) return true;
    const int i = r * cols + c;
    if (i == s || i == t) return false;
    return hard[i] != 0;
  };
  const auto heuristic = [&](int r, int c) {
    if (!goal) return 0.0;
    const int dr = std::abs(r - goal->row), dc = std::abs(c - goal->col);
    return std::max(dr, dc) + (std::numbers::sqrt2 - 1.0) * std::min(dr, dc);
  };

  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  out.g[s] = 0.0;
  open.push({heuristic(start.row, start.col), s});
  while (!open.empty()) {
    const auto [f, idx] = open.top();
    open.pop();
    if (idx == t) break;
    const int r = idx / cols, c = idx % cols;
    if (f - heuristic(r, c) > out.g[idx] + 1e-9) continue;
    for (int k = 0; k < 8; ++k) {
      const int nr = r + kDr[k], nc = c + kDc[k];
      if (blocked(nr, nc)) continue;
      if (k >= 4 && (blocked(nr, c) || blocked(r, nc))) continue;
      const int ni = nr * cols + nc;
      const double ng = out.g[idx] + (k >= 4 ? std::numbers::sqrt2 : 1.0) + extra[ni];
      if (ng < out.g[ni]) {
        out.g[ni] = ng;
        out.parent[ni] = idx;
        open.push({ng + heuristic(nr, nc), ni});
      }
    }
  }
  return out;
}

// Forward move along `heading_deg` stays clear of confidently occupied and bumped cells, checked
// along the centre line and both body edges.
bool forward_clear(const AgentPose& pose, double heading_deg, const GlobalMap& fused, const ControllerConfig& cfg,
                   const std::unordered_set<Cell>& bumped) {
  const double th = heading_deg * std::numbers::pi / 180.0;
  const double ux = std::cos(th), uz = std::sin(th);
  const double r = kAgentRadiusCells * fused.cell_size_m;
  const int samples = static_cast<int>(std::ceil(kForwardStepM / (0.25 * fused.cell_size_m)));
  const Cell here = fused.cell_at(pose.x_m, pose.z_m);
  for (int i = 1; i <= samples; ++i) {
    const double t = kForwardStepM * i / samples;
    for (const double side : {0.0, -1.0, 1.0}) {
      const double x = pose.x_m + (t + (side == 0.0 ? r : 0.0)) * ux - side * r * uz;
      const double z = pose.z_m + (t + (side == 0.0 ? r : 0.0)) * uz + side * r * ux;
      const Cell c = fused.cell_at(x, z);
      if (c == here) continue;
      if (!fused.probs.contains(c) || occupancy(fused.probs[c]) >= cfg.forward_veto || bumped.contains(c)) return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Cell> plan_route(const GlobalMap& fused, Cell start, Cell goal, const ControllerConfig& cfg,
                             const std::unordered_set<Cell>& bumped) {
  if (!fused.probs.contains(start) || !fused.probs.contains(goal)) return {};
  const Search s = search(fused, start, &goal, cfg, bumped);
  const int cols = fused.cols();
  const int t = goal.row * cols + goal.col;
  if (s.g[t] == kUnreachable) return {};
  std::vector<Cell> route;
  for (int i = t; i != -1; i = s.parent[i]) route.push_back({i / cols, i % cols});
  std::reverse(route.begin(), route.end());
  return route;
}

Grid<double> route_costs(const GlobalMap& fused, Cell start, const ControllerConfig& cfg,
                         const std::unordered_set<Cell>& bumped) {
  Search s = search(fused, start, nullptr, cfg, bumped);
  Grid<double> out(fused.rows(), fused.cols());
  out.data() = std::move(s.g);
  return out;
}

Action next_action(ControllerState& state, const AgentPose& pose, const GlobalMap& fused, Cell goal_cell,
                   const ControllerConfig& cfg) {
  require(fused.probs.contains(goal_cell), "next_action: goal cell outside map extent");
  state.goal = goal_cell;
  const Cell here = fused.cell_at(pose.x_m, pose.z_m);
  state.route = plan_route(fused, here, goal_cell, cfg, state.bumped);
  if (state.route.empty()) {
    ++state.stuck;
    return Action::kTurnLeft;
  }
  if (state.route.size() == 1) return Action::kTurnLeft;

  const Cell wp = state.route[std::min<std::size_t>(state.route.size() - 1, static_cast<std::size_t>(cfg.waypoint_cells))];
  const double tx = fused.origin_x + (wp.col + 0.5) * fused.cell_size_m;
  const double tz = fused.origin_z + (wp.row + 0.5) * fused.cell_size_m;
  const double target = std::atan2(tz - pose.z_m, tx - pose.x_m) * 180.0 / std::numbers::pi;

  // Among the headings reachable by whole turns, head for the feasible one closest to the waypoint
  // bearing. Choosing from the discrete set avoids ping-ponging around an unreachable exact bearing.
  const int n_headings = static_cast<int>(std::lround(360.0 / kTurnStepDeg));
  double best_err = 1e9;
  int best_k = 0;
  for (int k = 0; k < n_headings; ++k) {
    const int turns = k <= n_headings / 2 ? k : k - n_headings;  // positive = right turns
    const double h = pose.heading_deg + turns * kTurnStepDeg;
    const double err = std::abs(wrap180(target - h));
    if (err > 90.0 || !forward_clear(pose, h, fused, cfg, state.bumped)) continue;
    // Prefer smaller bearing error, then fewer turns.
    if (err < best_err - 1e-9 || (std::abs(err - best_err) <= 1e-9 && std::abs(turns) < std::abs(best_k))) {
      best_err = err;
      best_k = turns;
    }
  }
  if (best_err > 90.0) {
    ++state.stuck;
    return wrap180(target - pose.heading_deg) < 0 ? Action::kTurnLeft : Action::kTurnRight;
  }
  if (best_k == 0) return Action::kMoveForward;
  return best_k < 0 ? Action::kTurnLeft : Action::kTurnRight;
}

void note_collision(ControllerState& state, const AgentPose& pose, const GlobalMap& fused) {
  ++state.stuck;
  const double th = pose.heading_deg * std::numbers::pi / 180.0;
  const double s = fused.cell_size_m;
  const Cell here = fused.cell_at(pose.x_m, pose.z_m);
  // Mark the first cells past the agent body along the heading.
  for (double t = s; t <= kForwardStepM + 1e-9; t += s / 2) {
    const Cell c = fused.cell_at(pose.x_m + (t + kAgentRadiusCells * s) * std::cos(th),
                                 pose.z_m + (t + kAgentRadiusCells * s) * std::sin(th));
    if (!(c == here) && fused.probs.contains(c) && occupancy(fused.probs[c]) >= 0.3) {
      state.bumped.insert(c);
      return;
    }
  }
  const Cell ahead = fused.cell_at(pose.x_m + 2.0 * s * std::cos(th), pose.z_m + 2.0 * s * std::sin(th));
  if (!(ahead == here)) state.bumped.insert(ahead);
}

bool reached(const AgentPose& pose, double goal_x, double goal_z, double radius_m) {
  return std::hypot(pose.x_m - goal_x, pose.z_m - goal_z) <= radius_m;
}

}  // namespace upen
