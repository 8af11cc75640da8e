#include "upen/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <queue>
#include <random>
#include <sstream>

namespace upen {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

struct Rect {
  int r0, c0, r1, c1;  // inclusive-exclusive
  int center_row() const { return (r0 + r1) / 2; }
  int center_col() const { return (c0 + c1) / 2; }
};

void carve(Grid<std::uint8_t>& g, int r0, int c0, int r1, int c1, std::uint8_t value) {
  r0 = std::max(r0, 1);
  c0 = std::max(c0, 1);
  r1 = std::min(r1, g.rows() - 1);
  c1 = std::min(c1, g.cols() - 1);
  for (int r = r0; r < r1; ++r)
    for (int c = c0; c < c1; ++c) g(r, c) = value;
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// Union-find over room slots for the spanning tree.
int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) i = parent[i] = parent[parent[i]];
  return i;
}

std::optional<Floorplan> try_generate(std::mt19937_64& rng, const FloorplanParams& p) {
  const int inner_rows = p.rows - 2;
  const int inner_cols = p.cols - 2;
  const int slot_h = inner_rows / p.room_slots_rows;
  const int slot_w = inner_cols / p.room_slots_cols;
  const int margin = 2;
  const int max_h = std::min(p.max_room_cells, slot_h - 2 * margin);
  const int max_w = std::min(p.max_room_cells, slot_w - 2 * margin);
  if (p.min_room_cells > max_h || p.min_room_cells > max_w) return std::nullopt;

  Grid<std::uint8_t> cells(p.rows, p.cols, kOccupiedCell);
  std::vector<Rect> rooms;
  for (int sr = 0; sr < p.room_slots_rows; ++sr) {
    for (int sc = 0; sc < p.room_slots_cols; ++sc) {
      const int h = uniform_int(rng, p.min_room_cells, max_h);
      const int w = uniform_int(rng, p.min_room_cells, max_w);
      const int top = 1 + sr * slot_h + margin + uniform_int(rng, 0, slot_h - 2 * margin - h);
      const int left = 1 + sc * slot_w + margin + uniform_int(rng, 0, slot_w - 2 * margin - w);
      rooms.push_back({top, left, top + h, left + w});
      carve(cells, top, left, top + h, left + w, kFreeCell);
    }
  }

  // Candidate edges between 4-adjacent slots, shuffled; Kruskal keeps a spanning tree.
  struct Edge {
    int a, b;
  };
  std::vector<Edge> edges;
  for (int sr = 0; sr < p.room_slots_rows; ++sr)
    for (int sc = 0; sc < p.room_slots_cols; ++sc) {
      const int i = sr * p.room_slots_cols + sc;
      if (sc + 1 < p.room_slots_cols) edges.push_back({i, i + 1});
      if (sr + 1 < p.room_slots_rows) edges.push_back({i, i + p.room_slots_cols});
    }
  std::shuffle(edges.begin(), edges.end(), rng);
  std::vector<int> parent(rooms.size());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  std::bernoulli_distribution extra(p.extra_connection_prob);
  const int half = p.corridor_width / 2;
  for (const Edge& e : edges) {
    const int ra = find_root(parent, e.a);
    const int rb = find_root(parent, e.b);
    const bool joins = ra != rb;
    if (joins) parent[ra] = rb;
    if (!joins && !extra(rng)) continue;
    const Rect& a = rooms[e.a];
    const Rect& b = rooms[e.b];
    // L-shaped corridor: horizontal leg at a's centre row, vertical leg at b's centre column.
    const int ar = a.center_row(), ac = a.center_col();
    const int br = b.center_row(), bc = b.center_col();
    carve(cells, ar - half, std::min(ac, bc) - half, ar - half + p.corridor_width,
          std::max(ac, bc) - half + p.corridor_width, kFreeCell);
    carve(cells, std::min(ar, br) - half, bc - half, std::max(ar, br) - half + p.corridor_width,
          bc - half + p.corridor_width, kFreeCell);
  }

  // Interior obstacles stay clear of room walls so doorways are never sealed.
  const int clearance = std::max(6, p.corridor_width / 2 + 2);
  for (const Rect& room : rooms) {
    const int n = uniform_int(rng, 0, std::max(0, p.max_obstacles_per_room));
    for (int k = 0; k < n; ++k) {
      const int oh = uniform_int(rng, p.min_obstacle_cells, p.max_obstacle_cells);
      const int ow = uniform_int(rng, p.min_obstacle_cells, p.max_obstacle_cells);
      const int lo_r = room.r0 + clearance, hi_r = room.r1 - clearance - oh;
      const int lo_c = room.c0 + clearance, hi_c = room.c1 - clearance - ow;
      if (hi_r < lo_r || hi_c < lo_c) continue;
      const int r = uniform_int(rng, lo_r, hi_r);
      const int c = uniform_int(rng, lo_c, hi_c);
      carve(cells, r, c, r + oh, c + ow, kOccupiedCell);
    }
  }

  Floorplan fp;
  fp.cells = std::move(cells);
  fp.cell_size_m = p.cell_size_m;
  if (!is_connected(fp)) return std::nullopt;
  return fp;
}

}  // namespace

Cell Floorplan::cell_at(double x, double z) const {
  return {static_cast<int>(std::floor((z - origin_z) / cell_size_m)),
          static_cast<int>(std::floor((x - origin_x) / cell_size_m))};
}

std::size_t Floorplan::free_cell_count() const {
  return static_cast<std::size_t>(std::count(cells.data().begin(), cells.data().end(), kFreeCell));
}

Floorplan generate_floorplan(std::uint64_t seed, const FloorplanParams& params) {
  require(params.rows >= 64 && params.cols >= 64, "floorplan grid must be at least 64x64");
  require(params.room_slots_rows >= 1 && params.room_slots_cols >= 1, "room slot grid must be non-empty");
  require(params.min_room_cells >= 1 && params.min_room_cells <= params.max_room_cells,
          "room size range must be non-empty");
  require(params.corridor_width >= 1, "corridor width must be positive");
  require(params.min_obstacle_cells >= 1 && params.min_obstacle_cells <= params.max_obstacle_cells,
          "obstacle size range must be non-empty");
  require(params.cell_size_m > 0.0, "cell size must be positive");

  std::mt19937_64 rng(seed);
  for (int attempt = 0; attempt < std::max(1, params.max_retries); ++attempt) {
    if (auto fp = try_generate(rng, params)) {
      fp->id = "gen-" + std::to_string(seed);
      validate_floorplan(*fp);
      return *std::move(fp);
    }
  }
  fail(ErrorCode::kGenerationFailed,
       "floorplan generation failed after " + std::to_string(params.max_retries) + " attempts (seed " +
           std::to_string(seed) + "); room sizes do not fit the slot grid");
}

void validate_floorplan(const Floorplan& fp) {
  require(fp.cell_size_m > 0.0, "floorplan cell size must be positive");
  require(fp.rows() >= 3 && fp.cols() >= 3, "floorplan must be at least 3x3");
  require(fp.free_cell_count() > 0, "floorplan has no free cell");
  for (int c = 0; c < fp.cols(); ++c)
    require(fp.cells(0, c) == kOccupiedCell && fp.cells(fp.rows() - 1, c) == kOccupiedCell,
            "floorplan boundary ring must be occupied");
  for (int r = 0; r < fp.rows(); ++r)
    require(fp.cells(r, 0) == kOccupiedCell && fp.cells(r, fp.cols() - 1) == kOccupiedCell,
            "floorplan boundary ring must be occupied");
}

bool is_connected(const Floorplan& fp) {
  const auto& data = fp.cells.data();
  const auto first = std::find(data.begin(), data.end(), kFreeCell);
  if (first == data.end()) return false;
  const int idx = static_cast<int>(first - data.begin());
  Grid<std::uint8_t> seen(fp.rows(), fp.cols(), 0);
  std::vector<Cell> stack{{idx / fp.cols(), idx % fp.cols()}};
  seen[stack.back()] = 1;
  std::size_t visited = 0;
  constexpr int dr[4] = {1, -1, 0, 0};
  constexpr int dc[4] = {0, 0, 1, -1};
  while (!stack.empty()) {
    const Cell c = stack.back();
    stack.pop_back();
    ++visited;
    for (int k = 0; k < 4; ++k) {
      const Cell n{c.row + dr[k], c.col + dc[k]};
      if (fp.is_free(n) && !seen[n]) {
        seen[n] = 1;
        stack.push_back(n);
      }
    }
  }
  return visited == fp.free_cell_count();
}

void write_ascii(std::ostream& out, const Floorplan& fp) {
  out << "cell_size_m=" << fp.cell_size_m << '\n';
  std::string line;
  for (int r = 0; r < fp.rows(); ++r) {
    line.assign(static_cast<std::size_t>(fp.cols()), '.');
    for (int c = 0; c < fp.cols(); ++c)
      if (fp.cells(r, c) == kOccupiedCell) line[c] = '#';
    out << line << '\n';
  }
}

Floorplan read_ascii(std::istream& in, std::string id) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("cell_size_m=", 0) != 0)
    fail(ErrorCode::kIo, "ascii map: missing 'cell_size_m=<float>' header");
  Floorplan fp;
  fp.id = std::move(id);
  try {
    fp.cell_size_m = std::stod(header.substr(12));
  } catch (const std::exception&) {
    fail(ErrorCode::kIo, "ascii map: bad cell size '" + header + "'");
  }
  std::vector<std::string> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!rows.empty() && line.size() != rows.front().size())
      fail(ErrorCode::kIo, "ascii map: ragged row " + std::to_string(rows.size()));
    rows.push_back(line);
  }
  if (rows.empty()) fail(ErrorCode::kIo, "ascii map: no rows");
  fp.cells = Grid<std::uint8_t>(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < fp.rows(); ++r)
    for (int c = 0; c < fp.cols(); ++c) {
      const char ch = rows[r][c];
      if (ch != '#' && ch != '.') fail(ErrorCode::kIo, std::string("ascii map: unexpected character '") + ch + "'");
      fp.cells(r, c) = ch == '#' ? kOccupiedCell : kFreeCell;
    }
  validate_floorplan(fp);
  return fp;
}

void save_ascii(const std::string& path, const Floorplan& fp) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  write_ascii(out, fp);
}

Floorplan load_ascii(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  return read_ascii(in, path);
}

void save_pgm(const std::string& path, const Floorplan& fp) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  out << "P2\n" << fp.cols() << ' ' << fp.rows() << "\n255\n";
  for (int r = 0; r < fp.rows(); ++r) {
    for (int c = 0; c < fp.cols(); ++c) out << (c ? " " : "") << (fp.cells(r, c) == kOccupiedCell ? 0 : 255);
    out << '\n';
  }
}

// --- agent ---------------------------------------------------------------

const char* action_name(Action a) {
  switch (a) {
    case Action::kMoveForward: return "MOVE_FORWARD";
    case Action::kTurnLeft: return "TURN_LEFT";
    case Action::kTurnRight: return "TURN_RIGHT";
    case Action::kStop: return "STOP";
  }
  return "?";
}

double normalize_heading(double deg) {
  double h = std::fmod(deg, 360.0);
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  return h;
}

bool body_fits(const Floorplan& fp, double x, double z, double radius_cells) {
  const double s = fp.cell_size_m;
  const double radius = radius_cells * s;
  const double gx = (x - fp.origin_x) / s;
  const double gz = (z - fp.origin_z) / s;
  const int c0 = static_cast<int>(std::floor(gx - radius_cells));
  const int c1 = static_cast<int>(std::floor(gx + radius_cells));
  const int r0 = static_cast<int>(std::floor(gz - radius_cells));
  const int r1 = static_cast<int>(std::floor(gz + radius_cells));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      // Closest point of the cell square to (x, z).
      const double cx = std::clamp(x, fp.origin_x + c * s, fp.origin_x + (c + 1) * s);
      const double cz = std::clamp(z, fp.origin_z + r * s, fp.origin_z + (r + 1) * s);
      const double d2 = (cx - x) * (cx - x) + (cz - z) * (cz - z);
      if (d2 < radius * radius && !fp.is_free({r, c})) return false;
    }
  return fp.is_free(fp.cell_at(x, z));
}

StepResult step(const Floorplan& fp, const AgentPose& pose, Action action) {
  StepResult out{pose, false};
  switch (action) {
    case Action::kStop: break;
    case Action::kTurnLeft: out.pose.heading_deg = normalize_heading(pose.heading_deg - kTurnStepDeg); break;
    case Action::kTurnRight: out.pose.heading_deg = normalize_heading(pose.heading_deg + kTurnStepDeg); break;
    case Action::kMoveForward: {
      const double th = deg2rad(pose.heading_deg);
      const double dx = kForwardStepM * std::cos(th);
      const double dz = kForwardStepM * std::sin(th);
      const int samples = static_cast<int>(std::ceil(kForwardStepM / (0.25 * fp.cell_size_m)));
      for (int i = 0; i <= samples; ++i) {
        const double t = static_cast<double>(i) / samples;
        if (!body_fits(fp, pose.x_m + t * dx, pose.z_m + t * dz)) {
          out.collided = true;
          return out;
        }
      }
      out.pose.x_m = pose.x_m + dx;
      out.pose.z_m = pose.z_m + dz;
      break;
    }
  }
  return out;
}

// --- sensing -------------------------------------------------------------

double cast_ray(const Floorplan& fp, double x, double z, double dir_deg, double max_range, bool* hit) {
  const double s = fp.cell_size_m;
  const double th = deg2rad(dir_deg);
  const double dx = std::cos(th), dz = std::sin(th);
  const double gx = (x - fp.origin_x) / s, gz = (z - fp.origin_z) / s;
  int col = static_cast<int>(std::floor(gx));
  int row = static_cast<int>(std::floor(gz));
  const int step_c = dx > 0 ? 1 : -1;
  const int step_r = dz > 0 ? 1 : -1;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double t_delta_c = std::abs(dx) < 1e-12 ? kInf : 1.0 / std::abs(dx);
  const double t_delta_r = std::abs(dz) < 1e-12 ? kInf : 1.0 / std::abs(dz);
  double t_max_c = std::abs(dx) < 1e-12 ? kInf : (dx > 0 ? (col + 1 - gx) : (gx - col)) * t_delta_c;
  double t_max_r = std::abs(dz) < 1e-12 ? kInf : (dz > 0 ? (row + 1 - gz) : (gz - row)) * t_delta_r;
  const double max_cells = max_range / s;
  *hit = false;
  while (true) {
    double t;
    if (t_max_c < t_max_r) {
      t = t_max_c;
      col += step_c;
      t_max_c += t_delta_c;
    } else {
      t = t_max_r;
      row += step_r;
      t_max_r += t_delta_r;
    }
    if (t > max_cells) return max_range;
    if (!fp.is_free({row, col})) {
      *hit = true;
      return std::max(t * s, 1e-9);
    }
  }
}

RangeScan sense(const Floorplan& fp, const AgentPose& pose, const SensorConfig& cfg) {
  require(cfg.n_rays >= 2, "sensor needs at least two rays");
  require(cfg.fov_deg > 0.0 && cfg.fov_deg <= 360.0, "sensor fov must be in (0, 360]");
  require(cfg.max_range_m > 0.0, "sensor max range must be positive");
  if (!fp.is_free(fp.cell_at(pose.x_m, pose.z_m))) fail(ErrorCode::kInvalidArgument, "sense: pose inside an occupied cell");
  RangeScan scan;
  scan.fov_deg = cfg.fov_deg;
  scan.max_range_m = cfg.max_range_m;
  scan.rays.reserve(static_cast<std::size_t>(cfg.n_rays));
  const bool full_circle = cfg.fov_deg >= 360.0;
  const double spacing = full_circle ? cfg.fov_deg / cfg.n_rays : cfg.fov_deg / (cfg.n_rays - 1);
  for (int i = 0; i < cfg.n_rays; ++i) {
    RangeRay ray;
    ray.bearing_deg = -cfg.fov_deg / 2.0 + i * spacing;
    ray.range_m = cast_ray(fp, pose.x_m, pose.z_m, pose.heading_deg + ray.bearing_deg, cfg.max_range_m, &ray.hit);
    scan.rays.push_back(ray);
  }
  return scan;
}

// --- geodesics -------------------------------------------------------------

Grid<double> geodesic_field(const Floorplan& fp, Cell source) {
  Grid<double> dist(fp.rows(), fp.cols(), kUnreachable);
  if (!fp.is_free(source)) return dist;
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[source] = 0.0;
  open.push({0.0, source.row * fp.cols() + source.col});
  constexpr int dr[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dc[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  while (!open.empty()) {
    const auto [d, idx] = open.top();
    open.pop();
    const Cell c{idx / fp.cols(), idx % fp.cols()};
    if (d > dist[c]) continue;
    for (int k = 0; k < 8; ++k) {
      const Cell n{c.row + dr[k], c.col + dc[k]};
      if (!fp.is_free(n)) continue;
      if (k >= 4 && (!fp.is_free({c.row + dr[k], c.col}) || !fp.is_free({c.row, c.col + dc[k]}))) continue;
      const double nd = d + (k >= 4 ? kSqrt2 : 1.0);
      if (nd < dist[n]) {
        dist[n] = nd;
        open.push({nd, n.row * fp.cols() + n.col});
      }
    }
  }
  return dist;
}

double geodesic_distance(const Floorplan& fp, double ax, double az, double bx, double bz) {
  const Cell a = fp.cell_at(ax, az);
  const Cell b = fp.cell_at(bx, bz);
  require(fp.is_free(a), "geodesic_distance: start point is not in a free cell");
  require(fp.is_free(b), "geodesic_distance: end point is not in a free cell");
  const double cells = geodesic_field(fp, a)[b];
  return cells == kUnreachable ? kUnreachable : cells * fp.cell_size_m;
}

std::vector<Cell> navigable_cells(const Floorplan& fp, Cell start) {
  std::vector<Cell> out;
  const Grid<double> field = geodesic_field(fp, start);
  for (int r = 0; r < fp.rows(); ++r)
    for (int c = 0; c < fp.cols(); ++c)
      if (field(r, c) != kUnreachable && body_fits(fp, fp.center_x(c), fp.center_z(r))) out.push_back({r, c});
  return out;
}

Episode sample_episode(const Floorplan& fp, std::uint64_t seed, double min_geodesic_m, double min_gedr,
                       int budget_steps, int max_attempts) {
  require(min_gedr >= 1.0, "min_gedr must be >= 1");
  require(budget_steps >= 1, "episode budget must be >= 1");
  std::vector<Cell> clear;
  for (int r = 0; r < fp.rows(); ++r)
    for (int c = 0; c < fp.cols(); ++c)
      if (fp.is_free({r, c}) && body_fits(fp, fp.center_x(c), fp.center_z(r))) clear.push_back({r, c});
  if (clear.empty()) fail(ErrorCode::kNoEpisode, "floorplan has no cell the agent fits in");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, clear.size() - 1);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const Cell start = clear[pick(rng)];
    const Grid<double> field = geodesic_field(fp, start);
    std::vector<std::pair<Cell, double>> goals;
    for (const Cell& g : clear) {
      const double gd_cells = field[g];
      if (gd_cells == kUnreachable || g == start) continue;
      const double gd = gd_cells * fp.cell_size_m;
      const double eu = std::hypot(fp.center_x(g.col) - fp.center_x(start.col), fp.center_z(g.row) - fp.center_z(start.row));
      if (gd >= min_geodesic_m && gd / eu >= min_gedr) goals.push_back({g, gd});
    }
    if (goals.empty()) continue;
    const auto& [goal, gd] = goals[std::uniform_int_distribution<std::size_t>(0, goals.size() - 1)(rng)];
    Episode ep;
    ep.floorplan_id = fp.id;
    ep.start = {fp.center_x(start.col), fp.center_z(start.row),
                kTurnStepDeg * std::uniform_int_distribution<int>(0, 35)(rng)};
    ep.goal_x = fp.center_x(goal.col);
    ep.goal_z = fp.center_z(goal.row);
    ep.geodesic_m = gd;
    ep.euclidean_m = std::hypot(ep.goal_x - ep.start.x_m, ep.goal_z - ep.start.z_m);
    ep.gedr = ep.geodesic_m / ep.euclidean_m;
    ep.budget_steps = budget_steps;
    return ep;
  }
  fail(ErrorCode::kNoEpisode, "no start/goal pair satisfies geodesic >= " + std::to_string(min_geodesic_m) +
                                  " m and GEDR >= " + std::to_string(min_gedr) + " on " + fp.id);
}

}  // namespace upen
