#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "upen/mapping.hpp"

namespace upen {

inline constexpr double kDecidedMargin = 0.05;

struct MetricsRecord {
  double map_acc_m2 = 0.0;
  double iou_pct = 0.0;
  double cov_m2 = 0.0;
  double cov_pct = 0.0;
  bool success = false;
  double spl = 0.0;
  int steps_taken = 0;
  double gd_m = 0.0;
  double gedr = 0.0;
  double path_m = 0.0;
  double mean_step_ms = 0.0;
};

/// A predicted cell counts when its argmax is not UNKNOWN and its max probability exceeds 1/3 + margin.
bool is_decided(const ClassDist& d, double margin = kDecidedMargin);

/// Area of decided cells whose argmax matches the floorplan, over the floorplan extent.
double map_accuracy(const GlobalMap& pred, const Floorplan& truth, double margin = kDecidedMargin);

/// Mean IoU over {FREE, OCCUPIED} in percent; classes with an empty union are skipped
/// and counted in `skipped`.
double iou(const GlobalMap& pred, const Floorplan& truth, int* skipped = nullptr, double margin = kDecidedMargin);

/// FREE cells reachable from `start` (8-connected, no corner cutting).
Grid<std::uint8_t> reachable_free_mask(const Floorplan& truth, Cell start);

struct Coverage {
  double m2 = 0.0;
  double pct = 0.0;
};

/// Observed (non-uniform) cells of the observation-only map that lie in the navigable mask,
/// as area and as percent of the mask area.
Coverage coverage(const GlobalMap& obs_map, const Floorplan& truth, const Grid<std::uint8_t>& navigable);

/// Success weighted by path length: success ? l / max(p, l) : 0.
double spl(bool success, double shortest_m, double taken_m);

/// Fixed CSV header matching metrics_csv_row(). Wall-clock timing is kept out of it so suite
/// outputs stay byte-identical across runs.
std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& episode_id, const std::string& policy, const MetricsRecord& m);

}  // namespace upen
