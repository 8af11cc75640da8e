#include "upen/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace upen {

namespace {

constexpr double kIndexEps = 1e-9;

int floor_index(double v) { return static_cast<int>(std::floor(v + kIndexEps)); }

// Nearest local index for an egocentric coordinate; local cell k is anchored at (k - center) * r.
int nearest_index(double v) { return static_cast<int>(std::floor(v + 0.5)); }

inline ClassDist bayes_product(const ClassDist& prior, const ClassDist& likelihood) {
  ClassDist post;
  double z = 0.0;
  for (int i = 0; i < kNumClasses; ++i) {
    post[i] = prior[i] * std::clamp(likelihood[i], kProbEpsilon, 1.0 - kProbEpsilon);
    z += post[i];
  }
  for (double& p : post) p /= z;
  // Pin entries below eps at eps and rescale the rest to keep the sum at 1. Rescaling can push
  // another entry under eps, so repeat; at most kNumClasses - 1 rounds.
  std::array<bool, kNumClasses> pinned{};
  for (int round = 0; round < kNumClasses; ++round) {
    int n_pinned = 0;
    double free_mass = 0.0;
    bool changed = false;
    for (int i = 0; i < kNumClasses; ++i) {
      if (!pinned[i] && post[i] < kProbEpsilon) pinned[i] = changed = true;
      if (pinned[i]) ++n_pinned;
      else free_mass += post[i];
    }
    if (!changed) break;
    const double scale = (1.0 - n_pinned * kProbEpsilon) / free_mass;
    for (int i = 0; i < kNumClasses; ++i) post[i] = pinned[i] ? kProbEpsilon : post[i] * scale;
  }
  return post;
}

}  // namespace

ClassDist one_hot(CellClass c, double eps) {
  ClassDist d{eps / 2.0, eps / 2.0, eps / 2.0};
  d[static_cast<int>(c)] = 1.0 - eps;
  return d;
}

CellClass argmax_class(const ClassDist& d) {
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (d[i] > d[best]) best = i;
  return static_cast<CellClass>(best);
}

Cell GlobalMap::cell_at(double x, double z) const {
  return {static_cast<int>(std::floor((z - origin_z) / cell_size_m)),
          static_cast<int>(std::floor((x - origin_x) / cell_size_m))};
}

bool GlobalMap::same_frame(const GlobalMap& o) const {
  return rows() == o.rows() && cols() == o.cols() && cell_size_m == o.cell_size_m && origin_x == o.origin_x &&
         origin_z == o.origin_z;
}

std::optional<Cell> project_point(double x_fwd, double z_right, double cell_size, int h, int w) {
  const int col = floor_index(x_fwd / cell_size) + (w - 1) / 2;
  const int row = floor_index(z_right / cell_size) + (h - 1) / 2;
  if (row < 0 || col < 0 || row >= h || col >= w) return std::nullopt;
  return Cell{row, col};
}

LocalGrid ground_project(const RangeScan& scan, double cell_size, int h, int w) {
  require(cell_size > 0.0, "ground_project: cell size must be positive");
  require(h > 0 && w > 0, "ground_project: grid dimensions must be positive");
  LocalGrid out(h, w, cell_size);
  // 0 untouched, 1 free, 2 occupied; occupied wins.
  Grid<std::uint8_t> mark(h, w, 0);
  const double stride = cell_size / 4.0;
  // project_point's cell k spans [k, k+1) cells from the frame origin. Putting the origin half a cell
  // behind and left of the agent centres the agent in its cell, which is what registration and
  // cropping assume.
  const double half = cell_size / 2.0;
  for (const RangeRay& ray : scan.rays) {
    const double th = ray.bearing_deg * std::numbers::pi / 180.0;
    const double ux = std::cos(th), uz = std::sin(th);
    // Walls start at the hit distance; the half-cell push lands the endpoint inside the wall.
    const double free_until = ray.hit ? ray.range_m - stride : ray.range_m;
    for (double t = 0.0; t <= free_until; t += stride) {
      if (auto c = project_point(t * ux + half, t * uz + half, cell_size, h, w)) {
        if (mark[*c] == 0) mark[*c] = 1;
      } else {
        break;
      }
    }
    if (ray.hit) {
      const double t = ray.range_m + cell_size / 2.0;
      if (auto c = project_point(t * ux + half, t * uz + half, cell_size, h, w)) mark[*c] = 2;
    }
  }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      if (mark(r, c) == 1) out.probs(r, c) = one_hot(CellClass::kFree);
      if (mark(r, c) == 2) out.probs(r, c) = one_hot(CellClass::kOccupied);
    }
  return out;
}

ClassDist bayes_update(const ClassDist& prior, const ClassDist& likelihood) { return bayes_product(prior, likelihood); }

WindowMapping map_window(const GlobalMap& global, int h, int w, const AgentPose& pose) {
  require(h > 0 && w > 0, "map_window: grid dimensions must be positive");
  WindowMapping m;
  m.h = h;
  m.w = w;
  m.global_rows = global.rows();
  m.global_cols = global.cols();
  const double r = global.cell_size_m;
  const double th = pose.heading_deg * std::numbers::pi / 180.0;
  const double ch = std::cos(th), sh = std::sin(th);
  const Cell center{(h - 1) / 2, (w - 1) / 2};

  // Global bounding box of the rotated window.
  const double reach = std::hypot(std::max(center.row + 1, h - center.row), std::max(center.col + 1, w - center.col)) + 1.0;
  const Cell agent = global.cell_at(pose.x_m, pose.z_m);
  const int reach_cells = static_cast<int>(std::ceil(reach));
  const int r0 = agent.row - reach_cells, r1 = agent.row + reach_cells;
  const int c0 = agent.col - reach_cells, c1 = agent.col + reach_cells;

  for (int gr = std::max(r0, 0); gr <= std::min(r1, global.rows() - 1); ++gr) {
    const double dz = global.origin_z + (gr + 0.5) * r - pose.z_m;
    for (int gc = std::max(c0, 0); gc <= std::min(c1, global.cols() - 1); ++gc) {
      const double dx = global.origin_x + (gc + 0.5) * r - pose.x_m;
      const int lc = nearest_index((dx * ch + dz * sh) / r) + center.col;
      const int lr = nearest_index((-dx * sh + dz * ch) / r) + center.row;
      if (lr < 0 || lc < 0 || lr >= h || lc >= w) continue;
      m.global_index.push_back(gr * global.cols() + gc);
      m.local_index.push_back(lr * w + lc);
    }
  }

  if (r0 < 0 || c0 < 0 || r1 >= global.rows() || c1 >= global.cols()) {
    for (int lr = 0; lr < h; ++lr) {
      const double ez = (lr - center.row) * r;
      for (int lc = 0; lc < w; ++lc) {
        const double ex = (lc - center.col) * r;
        const Cell g = global.cell_at(pose.x_m + ex * ch - ez * sh, pose.z_m + ex * sh + ez * ch);
        if (!global.probs.contains(g)) m.outside.push_back(lr * w + lc);
      }
    }
  }
  return m;
}

RegisterStats register_bayes(GlobalMap& global, const LocalGrid& local, const WindowMapping& m) {
  require(std::abs(local.cell_size_m - global.cell_size_m) < 1e-12,
          "register_bayes: local and global cell sizes differ");
  require(local.h() == m.h && local.w() == m.w && global.rows() == m.global_rows && global.cols() == m.global_cols,
          "register_bayes: window mapping does not match the grids");
  RegisterStats stats;
  const ClassDist* lp = local.probs.data().data();
  ClassDist* gp = global.probs.data().data();
  for (std::size_t i = 0; i < m.global_index.size(); ++i) {
    const ClassDist& lik = lp[m.local_index[i]];
    if (is_uniform(lik)) continue;
    ClassDist& cell = gp[m.global_index[i]];
    cell = bayes_product(cell, lik);
    ++stats.updated_cells;
  }
  for (int li : m.outside)
    if (!is_uniform(lp[li])) ++stats.dropped_cells;
  return stats;
}

RegisterStats register_bayes(GlobalMap& global, const LocalGrid& local, const AgentPose& pose) {
  return register_bayes(global, local, map_window(global, local.h(), local.w(), pose));
}

Cell local_to_global(const GlobalMap& global, const AgentPose& pose, Cell local_cell, Cell local_center) {
  const double r = global.cell_size_m;
  const double th = pose.heading_deg * std::numbers::pi / 180.0;
  const double ex = (local_cell.col - local_center.col) * r;
  const double ez = (local_cell.row - local_center.row) * r;
  const double wx = pose.x_m + ex * std::cos(th) - ez * std::sin(th);
  const double wz = pose.z_m + ex * std::sin(th) + ez * std::cos(th);
  return global.cell_at(wx, wz);
}

LocalGrid egocentric_crop(const GlobalMap& global, const AgentPose& pose, int h, int w) {
  require(h > 0 && w > 0, "egocentric_crop: grid dimensions must be positive");
  LocalGrid out(h, w, global.cell_size_m);
  const Cell center = out.center();
  const double r = global.cell_size_m;
  const double th = pose.heading_deg * std::numbers::pi / 180.0;
  const double ch = std::cos(th), sh = std::sin(th);
  for (int lr = 0; lr < h; ++lr) {
    const double ez = (lr - center.row) * r;
    for (int lc = 0; lc < w; ++lc) {
      const double ex = (lc - center.col) * r;
      const double wx = pose.x_m + ex * ch - ez * sh;
      const double wz = pose.z_m + ex * sh + ez * ch;
      const int gr = static_cast<int>(std::floor((wz - global.origin_z) / r));
      const int gc = static_cast<int>(std::floor((wx - global.origin_x) / r));
      if (global.probs.contains(gr, gc)) out.probs(lr, lc) = global.probs(gr, gc);
    }
  }
  return out;
}

void save_map(const std::string& path, const GlobalMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  const std::int32_t rows = map.rows(), cols = map.cols();
  out.write("UPENMAP1", 8);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  for (double v : {map.cell_size_m, map.origin_x, map.origin_z}) out.write(reinterpret_cast<const char*>(&v), sizeof v);
  std::vector<float> buf;
  buf.reserve(map.probs.size() * kNumClasses);
  for (const ClassDist& d : map.probs.data())
    for (double p : d) buf.push_back(static_cast<float>(p));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

GlobalMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "UPENMAP1", 8) != 0) fail(ErrorCode::kIo, path + ": not a map file");
  std::int32_t rows = 0, cols = 0;
  double cs = 0, ox = 0, oz = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  in.read(reinterpret_cast<char*>(&cs), sizeof cs);
  in.read(reinterpret_cast<char*>(&ox), sizeof ox);
  in.read(reinterpret_cast<char*>(&oz), sizeof oz);
  if (!in || rows <= 0 || cols <= 0 || !(cs > 0)) fail(ErrorCode::kIo, path + ": bad map header");
  GlobalMap map(rows, cols, cs, ox, oz);
  std::vector<float> buf(map.probs.size() * kNumClasses);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) fail(ErrorCode::kIo, path + ": truncated map payload");
  for (std::size_t i = 0; i < map.probs.size(); ++i)
    for (int k = 0; k < kNumClasses; ++k) map.probs.data()[i][k] = buf[i * kNumClasses + k];
  return map;
}

void save_map_pgm(const std::string& path, const GlobalMap& map) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  out << "P2\n" << map.cols() << ' ' << map.rows() << "\n255\n";
  for (int r = 0; r < map.rows(); ++r) {
    for (int c = 0; c < map.cols(); ++c) {
      const ClassDist& d = map.probs(r, c);
      int v = 128;
      if (!is_uniform(d)) {
        const CellClass k = argmax_class(d);
        v = k == CellClass::kOccupied ? 0 : k == CellClass::kFree ? 255 : 128;
      }
      out << (c ? " " : "") << v;
    }
    out << '\n';
  }
}

void save_scalar_pgm(const std::string& path, const Grid<double>& values, double max_value) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  out << "P2\n" << values.cols() << ' ' << values.rows() << "\n255\n";
  const double scale = max_value > 0 ? 255.0 / max_value : 0.0;
  for (int r = 0; r < values.rows(); ++r) {
    for (int c = 0; c < values.cols(); ++c)
      out << (c ? " " : "") << static_cast<int>(std::clamp(values(r, c) * scale, 0.0, 255.0));
    out << '\n';
  }
}

}  // namespace upen
