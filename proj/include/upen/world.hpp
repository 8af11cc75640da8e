#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "upen/grid.hpp"

namespace upen {

inline constexpr std::uint8_t kFreeCell = 0;
inline constexpr std::uint8_t kOccupiedCell = 1;

/// Ground-truth 2D world. Cell (r, c) spans world x in [origin_x + c*s, origin_x + (c+1)*s)
/// and world z in [origin_z + r*s, origin_z + (r+1)*s).
struct Floorplan {
  std::string id;
  Grid<std::uint8_t> cells;
  double cell_size_m = 0.05;
  double origin_x = 0.0;
  double origin_z = 0.0;

  int rows() const { return cells.rows(); }
  int cols() const { return cells.cols(); }
  bool in_bounds(Cell c) const { return cells.contains(c); }
  bool is_free(Cell c) const { return cells.contains(c) && cells[c] == kFreeCell; }

  Cell cell_at(double x, double z) const;
  double center_x(int col) const { return origin_x + (col + 0.5) * cell_size_m; }
  double center_z(int row) const { return origin_z + (row + 0.5) * cell_size_m; }
  std::size_t free_cell_count() const;

  friend bool operator==(const Floorplan&, const Floorplan&) = default;
};

struct FloorplanParams {
  int rows = 240;
  int cols = 240;
  double cell_size_m = 0.05;
  int room_slots_rows = 3;
  int room_slots_cols = 3;
  int min_room_cells = 58;
  int max_room_cells = 76;
  int corridor_width = 14;
  double extra_connection_prob = 0.2;
  int max_obstacles_per_room = 2;
  int min_obstacle_cells = 4;
  int max_obstacle_cells = 10;
  int max_retries = 32;
};

/// Seeded floorplan of rooms on a slot grid joined by straight corridors.
/// Throws Error(kGenerationFailed) when the parameters admit no layout.
Floorplan generate_floorplan(std::uint64_t seed, const FloorplanParams& params = {});

/// Validates the structural invariants: free cell present, occupied boundary ring, cell size > 0.
void validate_floorplan(const Floorplan& fp);

/// True when every FREE cell belongs to one 4-connected component.
bool is_connected(const Floorplan& fp);

void write_ascii(std::ostream& out, const Floorplan& fp);
Floorplan read_ascii(std::istream& in, std::string id = "ascii");
void save_ascii(const std::string& path, const Floorplan& fp);
Floorplan load_ascii(const std::string& path);
void save_pgm(const std::string& path, const Floorplan& fp);

// --- agent ---------------------------------------------------------------

/// Heading is degrees clockwise from +x (towards +z); TURN_LEFT decreases it.
struct AgentPose {
  double x_m = 0.0;
  double z_m = 0.0;
  double heading_deg = 0.0;

  friend bool operator==(const AgentPose&, const AgentPose&) = default;
};

enum class Action { kMoveForward, kTurnLeft, kTurnRight, kStop };

inline constexpr double kForwardStepM = 0.25;
inline constexpr double kTurnStepDeg = 10.0;
inline constexpr double kAgentRadiusCells = 1.0;

const char* action_name(Action a);
double normalize_heading(double deg);

struct StepResult {
  AgentPose pose;
  bool collided = false;
};

/// Agent body clearance test at a world point (disk of radius_cells * cell size).
bool body_fits(const Floorplan& fp, double x, double z, double radius_cells = kAgentRadiusCells);

StepResult step(const Floorplan& fp, const AgentPose& pose, Action action);

// --- range sensing ---------------------------------------------------------

struct SensorConfig {
  double fov_deg = 90.0;
  int n_rays = 128;
  double max_range_m = 5.0;
};

struct RangeRay {
  double bearing_deg = 0.0;  // relative to heading, clockwise positive
  double range_m = 0.0;
  bool hit = false;
};

struct RangeScan {
  std::vector<RangeRay> rays;
  double fov_deg = 0.0;
  double max_range_m = 0.0;
};

/// Exact grid raycast from the pose to the first OCCUPIED cell boundary.
RangeScan sense(const Floorplan& fp, const AgentPose& pose, const SensorConfig& cfg = {});

/// Distance along a world-frame ray to the first OCCUPIED cell (or cells outside the grid);
/// returns max_range when nothing is hit within it.
double cast_ray(const Floorplan& fp, double x, double z, double dir_deg, double max_range, bool* hit);

// --- geodesics -------------------------------------------------------------

inline constexpr double kUnreachable = std::numeric_limits<double>::infinity();

/// 8-connected shortest-path distances in cells (diagonal cost sqrt(2), no corner cutting)
/// from `source` to every cell; kUnreachable where disconnected or occupied.
Grid<double> geodesic_field(const Floorplan& fp, Cell source);

/// Geodesic metres between two world points; kUnreachable when disconnected.
double geodesic_distance(const Floorplan& fp, double ax, double az, double bx, double bz);

/// Cells reachable from `start` whose agent body fits at the cell centre.
std::vector<Cell> navigable_cells(const Floorplan& fp, Cell start);

struct Episode {
  std::string floorplan_id;
  AgentPose start;
  double goal_x = 0.0;
  double goal_z = 0.0;
  double geodesic_m = 0.0;
  double euclidean_m = 0.0;
  double gedr = 1.0;
  int budget_steps = 500;
};

/// Rejection-samples a start/goal pair with geodesic >= min_geodesic_m and GEDR >= min_gedr.
Episode sample_episode(const Floorplan& fp, std::uint64_t seed, double min_geodesic_m, double min_gedr,
                       int budget_steps, int max_attempts = 200);

}  // namespace upen
