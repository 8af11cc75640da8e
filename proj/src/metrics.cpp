#include "upen/metrics.hpp"

#include <cstdio>

namespace upen {

namespace {

void require_aligned(const GlobalMap& pred, const Floorplan& truth) {
  if (pred.cell_size_m != truth.cell_size_m || pred.origin_x != truth.origin_x || pred.origin_z != truth.origin_z ||
      pred.rows() < truth.rows() || pred.cols() < truth.cols())
    fail(ErrorCode::kInvalidArgument, "map and floorplan extents are not aligned");
}

CellClass truth_class(const Floorplan& truth, int r, int c) {
  return truth.cells(r, c) == kOccupiedCell ? CellClass::kOccupied : CellClass::kFree;
}

}  // namespace

bool is_decided(const ClassDist& d, double margin) {
  const CellClass k = argmax_class(d);
  return k != CellClass::kUnknown && d[static_cast<int>(k)] > 1.0 / 3.0 + margin;
}

double map_accuracy(const GlobalMap& pred, const Floorplan& truth, double margin) {
  require_aligned(pred, truth);
  std::size_t correct = 0;
  for (int r = 0; r < truth.rows(); ++r)
    for (int c = 0; c < truth.cols(); ++c) {
      const ClassDist& d = pred.probs(r, c);
      if (is_decided(d, margin) && argmax_class(d) == truth_class(truth, r, c)) ++correct;
    }
  return static_cast<double>(correct) * truth.cell_size_m * truth.cell_size_m;
}

double iou(const GlobalMap& pred, const Floorplan& truth, int* skipped, double margin) {
  require_aligned(pred, truth);
  double sum = 0.0;
  int classes = 0;
  if (skipped) *skipped = 0;
  for (CellClass k : {CellClass::kFree, CellClass::kOccupied}) {
    std::size_t inter = 0, uni = 0;
    for (int r = 0; r < truth.rows(); ++r)
      for (int c = 0; c < truth.cols(); ++c) {
        const ClassDist& d = pred.probs(r, c);
        const bool p = is_decided(d, margin) && argmax_class(d) == k;
        const bool t = truth_class(truth, r, c) == k;
        inter += p && t;
        uni += p || t;
      }
    if (uni == 0) {
      if (skipped) ++*skipped;
      continue;
    }
    sum += static_cast<double>(inter) / static_cast<double>(uni);
    ++classes;
  }
  return classes ? 100.0 * sum / classes : 0.0;
}

Grid<std::uint8_t> reachable_free_mask(const Floorplan& truth, Cell start) {
  const Grid<double> field = geodesic_field(truth, start);
  Grid<std::uint8_t> mask(truth.rows(), truth.cols(), 0);
  for (std::size_t i = 0; i < field.size(); ++i) mask.data()[i] = field.data()[i] != kUnreachable;
  return mask;
}

Coverage coverage(const GlobalMap& obs_map, const Floorplan& truth, const Grid<std::uint8_t>& navigable) {
  require_aligned(obs_map, truth);
  require(navigable.rows() == truth.rows() && navigable.cols() == truth.cols(), "coverage: mask does not match floorplan");
  std::size_t seen = 0, total = 0;
  for (int r = 0; r < truth.rows(); ++r)
    for (int c = 0; c < truth.cols(); ++c) {
      if (!navigable(r, c)) continue;
      ++total;
      if (!is_uniform(obs_map.probs(r, c))) ++seen;
    }
  const double area = truth.cell_size_m * truth.cell_size_m;
  Coverage out;
  out.m2 = static_cast<double>(seen) * area;
  out.pct = total ? 100.0 * static_cast<double>(seen) / static_cast<double>(total) : 0.0;
  return out;
}

double spl(bool success, double shortest_m, double taken_m) {
  require(shortest_m > 0.0, "spl: shortest path length must be positive");
  require(taken_m >= 0.0, "spl: taken path length must be non-negative");
  return success ? shortest_m / std::max(taken_m, shortest_m) : 0.0;
}

std::string metrics_csv_header() {
  return "episode,policy,map_acc_m2,iou_pct,cov_m2,cov_pct,success,spl,steps_taken,gd_m,gedr,path_m";
}

std::string metrics_csv_row(const std::string& episode_id, const std::string& policy, const MetricsRecord& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%s,%.6f,%.6f,%.6f,%.6f,%d,%.6f,%d,%.6f,%.6f,%.6f", episode_id.c_str(),
                policy.c_str(), m.map_acc_m2, m.iou_pct, m.cov_m2, m.cov_pct, m.success ? 1 : 0, m.spl, m.steps_taken,
                m.gd_m, m.gedr, m.path_m);
  return buf;
}

}  // namespace upen
