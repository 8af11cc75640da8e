#include "upen/rrt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_set>

namespace upen {

namespace {

struct Node {
  Cell cell;
  int parent = -1;
  int depth = 0;
  int children = 0;
};

double cell_distance(Cell a, Cell b) { return std::hypot(a.row - b.row, a.col - b.col); }

int squared_distance(Cell a, Cell b) {
  const int dr = a.row - b.row, dc = a.col - b.col;
  return dr * dr + dc * dc;
}

bool traversable(const GlobalMap& m, Cell c, double threshold) {
  return m.probs.contains(c) && occupancy(m.probs[c]) < threshold;
}

Path chain(const std::vector<Node>& tree, int node, double cell_size) {
  Path p;
  for (int i = node; i >= 0; i = tree[i].parent) p.cells.push_back(tree[i].cell);
  std::reverse(p.cells.begin(), p.cells.end());
  p.length_m = path_length(p.cells, cell_size);
  return p;
}

// Dijkstra over traversable cells of the fused map, in cells, from `source`.
Grid<double> map_geodesic(const GlobalMap& m, Cell source, double threshold) {
  Grid<double> dist(m.rows(), m.cols(), kUnreachable);
  if (!m.probs.contains(source)) return dist;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[source] = 0.0;
  open.push({0.0, source.row * m.cols() + source.col});
  constexpr int dr[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dc[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    const Cell c{idx / m.cols(), idx % m.cols()};
    if (d > dist[c]) continue;
    for (int k = 0; k < 8; ++k) {
      const Cell n{c.row + dr[k], c.col + dc[k]};
      if (!traversable(m, n, threshold)) continue;
      const double nd = d + (k >= 4 ? std::numbers::sqrt2 : 1.0);
      if (nd < dist[n]) {
        dist[n] = nd;
        open.push({nd, n.row * m.cols() + n.col});
      }
    }
  }
  return dist;
}

}  // namespace

double path_length(const std::vector<Cell>& cells, double cell_size_m) {
  double len = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) len += cell_distance(cells[i - 1], cells[i]);
  return len * cell_size_m;
}

bool edge_traversable(const GlobalMap& fused, Cell a, Cell b, double occupancy_threshold) {
  const double d = cell_distance(a, b);
  const int samples = std::max(1, static_cast<int>(std::ceil(d * 2.0)));
  for (int i = 0; i <= samples; ++i) {
    const double t = static_cast<double>(i) / samples;
    const Cell c{static_cast<int>(std::lround(a.row + t * (b.row - a.row))),
                 static_cast<int>(std::lround(a.col + t * (b.col - a.col)))};
    if (!traversable(fused, c, occupancy_threshold)) return false;
  }
  return true;
}

CandidateSet plan_paths(const GlobalMap& fused, Cell agent, std::optional<Cell> goal, const RrtParams& params) {
  require(params.max_paths >= 1 && params.step_cells >= 1 && params.iterations >= 0, "plan_paths: bad parameters");
  require(params.goal_rate >= 0.0 && params.goal_rate <= 1.0, "plan_paths: goal rate must be in [0, 1]");
  if (!traversable(fused, agent, params.occupancy_threshold))
    fail(ErrorCode::kPlanning, "plan_paths: agent cell is not traversable");
  if (goal) require(fused.probs.contains(*goal), "plan_paths: goal outside map extent");

  std::mt19937_64 rng(params.seed);
  std::uniform_int_distribution<int> row_dist(0, fused.rows() - 1);
  std::uniform_int_distribution<int> col_dist(0, fused.cols() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Node> tree{{agent, -1, 0, 0}};
  std::unordered_set<Cell> occupied_cells{agent};
  std::vector<int> reaching;
  const double tol = params.goal_tolerance_cells;
  if (goal && cell_distance(agent, *goal) <= tol) reaching.push_back(0);

  int samples = 0, goal_samples = 0;
  for (int it = 0; it < params.iterations && static_cast<int>(reaching.size()) < params.max_paths; ++it) {
    Cell sample;
    ++samples;
    if (goal && unit(rng) < params.goal_rate) {
      sample = *goal;
      ++goal_samples;
    } else {
      sample = {row_dist(rng), col_dist(rng)};
      if (!traversable(fused, sample, params.occupancy_threshold)) continue;
    }
    int nearest = 0;
    int best = squared_distance(tree[0].cell, sample);
    for (int i = 1; i < static_cast<int>(tree.size()); ++i) {
      const int d = squared_distance(tree[i].cell, sample);
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    if (best == 0) continue;
    const Cell from = tree[nearest].cell;
    Cell to = sample;
    const double dist = std::sqrt(static_cast<double>(best));
    if (dist > params.step_cells) {
      const double s = params.step_cells / dist;
      to = {from.row + static_cast<int>(std::trunc((sample.row - from.row) * s)),
            from.col + static_cast<int>(std::trunc((sample.col - from.col) * s))};
    }
    if (to == from || occupied_cells.contains(to)) continue;
    if (!edge_traversable(fused, from, to, params.occupancy_threshold)) continue;
    tree.push_back({to, nearest, tree[nearest].depth + 1, 0});
    ++tree[nearest].children;
    occupied_cells.insert(to);
    if (goal && cell_distance(to, *goal) <= tol) reaching.push_back(static_cast<int>(tree.size()) - 1);
  }

  CandidateSet out;
  out.tree_size = static_cast<int>(tree.size());
  out.samples = samples;
  out.goal_samples = goal_samples;
  if (tree.size() == 1) {
    out.blocked = true;
    if (!reaching.empty()) {
      out.reached_goal = true;
      out.paths.push_back(chain(tree, 0, fused.cell_size_m));
    }
    return out;
  }

  std::vector<int> chosen;
  if (goal && !reaching.empty()) {
    out.reached_goal = true;
    chosen = reaching;
  } else if (goal) {
    // Closest nodes to the goal by geodesic distance on the thresholded map, Euclidean tiebreak.
    const Grid<double> geo = map_geodesic(fused, *goal, params.occupancy_threshold);
    std::vector<int> idx;
    for (int i = 1; i < static_cast<int>(tree.size()); ++i) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
      const double ga = geo[tree[a].cell], gb = geo[tree[b].cell];
      if (ga != gb) return ga < gb;
      return cell_distance(tree[a].cell, *goal) < cell_distance(tree[b].cell, *goal);
    });
    chosen.assign(idx.begin(), idx.begin() + std::min<std::size_t>(idx.size(), params.max_paths));
  } else {
    // Deepest leaves first; lower index breaks ties.
    std::vector<int> leaves;
    for (int i = 1; i < static_cast<int>(tree.size()); ++i)
      if (tree[i].children == 0) leaves.push_back(i);
    std::stable_sort(leaves.begin(), leaves.end(), [&](int a, int b) { return tree[a].depth > tree[b].depth; });
    chosen.assign(leaves.begin(), leaves.begin() + std::min<std::size_t>(leaves.size(), params.max_paths));
  }
  if (static_cast<int>(chosen.size()) > params.max_paths) chosen.resize(params.max_paths);
  for (int node : chosen) out.paths.push_back(chain(tree, node, fused.cell_size_m));
  return out;
}

std::string path_record(const Path& path, std::size_t index) {
  std::ostringstream os;
  os << "path " << index << " cells=" << path.cells.size() << " length_m=" << path.length_m;
  for (const Cell& c : path.cells) os << ' ' << c.row << ',' << c.col;
  return os.str();
}

}  // namespace upen
