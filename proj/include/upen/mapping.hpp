#pragma once

#include <algorithm>
#include <array>
#include <string>

#include "upen/grid.hpp"
#include "upen/world.hpp"

namespace upen {

/// Map classes, in channel order.
enum class CellClass : int { kUnknown = 0, kOccupied = 1, kFree = 2 };
inline constexpr int kNumClasses = 3;

using ClassDist = std::array<double, kNumClasses>;

inline constexpr double kProbEpsilon = 0.01;
inline constexpr ClassDist kUniform{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

inline double occupancy(const ClassDist& d) { return d[static_cast<int>(CellClass::kOccupied)]; }

/// Distribution with 1 - eps on `c` and eps / 2 on each other class.
ClassDist one_hot(CellClass c, double eps = kProbEpsilon);

CellClass argmax_class(const ClassDist& d);

/// True when the distribution is (numerically) the uniform prior.
inline bool is_uniform(const ClassDist& d) {
  const double lo = std::min({d[0], d[1], d[2]}), hi = std::max({d[0], d[1], d[2]});
  return hi - lo < 1e-12;
}

/// Egocentric h x w grid. The agent sits at cell (floor((h-1)/2), floor((w-1)/2));
/// columns grow along the agent heading, rows grow to the agent's right.
struct LocalGrid {
  Grid<ClassDist> probs;
  double cell_size_m = 0.05;

  LocalGrid() = default;
  LocalGrid(int h, int w, double cell_size) : probs(h, w, kUniform), cell_size_m(cell_size) {}

  int h() const { return probs.rows(); }
  int w() const { return probs.cols(); }
  Cell center() const { return {(h() - 1) / 2, (w() - 1) / 2}; }
};

/// World-aligned probabilistic map, cell (r, c) spans the same world square as the floorplan
/// cell with the same index when origin and cell size agree.
struct GlobalMap {
  Grid<ClassDist> probs;
  double cell_size_m = 0.05;
  double origin_x = 0.0;
  double origin_z = 0.0;

  GlobalMap() = default;
  GlobalMap(int rows, int cols, double cell_size, double ox = 0.0, double oz = 0.0)
      : probs(rows, cols, kUniform), cell_size_m(cell_size), origin_x(ox), origin_z(oz) {}

  int rows() const { return probs.rows(); }
  int cols() const { return probs.cols(); }
  Cell cell_at(double x, double z) const;
  bool same_frame(const GlobalMap& o) const;
};

/// Egocentric grid coordinates of a point: x' = floor(x/r) + floor((w-1)/2), z' = floor(z/r) + floor((h-1)/2).
/// Returns {row = z', col = x'}; std::nullopt outside the window.
std::optional<Cell> project_point(double x_fwd, double z_right, double cell_size, int h, int w);

/// Rays: hit endpoints OCCUPIED, traversed cells FREE, everything else uniform. Points are
/// projected relative to the near corner of the agent's cell, so the agent sits at the centre
/// of LocalGrid::center().
LocalGrid ground_project(const RangeScan& scan, double cell_size, int h, int w);

struct RegisterStats {
  int updated_cells = 0;
  int dropped_cells = 0;  // informative local cells that fell outside the global extent
};

/// Per-cell Bayes product, prior * clamp(likelihood, eps, 1 - eps), renormalised and floored at eps.
ClassDist bayes_update(const ClassDist& prior, const ClassDist& likelihood);

/// Registers an egocentric grid taken at `pose` into `global` (nearest-cell). Uniform local
/// cells carry no evidence and leave the map untouched.
RegisterStats register_bayes(GlobalMap& global, const LocalGrid& local, const AgentPose& pose);

/// Global/local cell correspondence of an h x w egocentric window at one pose. Lets several
/// maps sharing a frame be updated from the same pose without recomputing the geometry.
struct WindowMapping {
  int h = 0, w = 0;
  int global_rows = 0, global_cols = 0;
  std::vector<int> global_index;  // row * cols + col
  std::vector<int> local_index;   // row * w + col, paired with global_index
  std::vector<int> outside;       // local cells whose forward image leaves the global extent
};

WindowMapping map_window(const GlobalMap& global, int h, int w, const AgentPose& pose);

RegisterStats register_bayes(GlobalMap& global, const LocalGrid& local, const WindowMapping& mapping);

/// Egocentric h x w view of `global` at `pose`; out-of-extent cells are uniform.
LocalGrid egocentric_crop(const GlobalMap& global, const AgentPose& pose, int h, int w);

/// Global cell that local cell `local_cell` maps to under `pose` (the crop mapping).
Cell local_to_global(const GlobalMap& global, const AgentPose& pose, Cell local_cell, Cell local_center);

/// Binary layout: "UPENMAP1", int32 rows, int32 cols, float64 cell_size, origin_x, origin_z,
/// then rows*cols*3 float32 (unknown, occupied, free) row-major, little endian.
void save_map(const std::string& path, const GlobalMap& map);
GlobalMap load_map(const std::string& path);

/// Argmax view: unknown 128, occupied 0, free 255.
void save_map_pgm(const std::string& path, const GlobalMap& map);
/// Scalar view scaled so `max_value` maps to 255.
void save_scalar_pgm(const std::string& path, const Grid<double>& values, double max_value);

}  // namespace upen
