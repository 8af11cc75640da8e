#include "upen/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace upen {

namespace {

std::size_t at(int r, int c, int w) { return static_cast<std::size_t>(r) * w + c; }

// Summed-area table with a zero border: S(r, c) = sum of v over rows < r, cols < c.
std::vector<int> integral(const std::vector<std::uint8_t>& v, int h, int w) {
  std::vector<int> s(static_cast<std::size_t>(h + 1) * (w + 1), 0);
  for (int r = 0; r < h; ++r) {
    int row_sum = 0;
    for (int c = 0; c < w; ++c) {
      row_sum += v[at(r, c, w)];
      s[at(r + 1, c + 1, w + 1)] = s[at(r, c + 1, w + 1)] + row_sum;
    }
  }
  return s;
}

int box_sum(const std::vector<int>& s, int h, int w, int r, int c, int radius) {
  const int r0 = std::max(r - radius, 0), r1 = std::min(r + radius + 1, h);
  const int c0 = std::max(c - radius, 0), c1 = std::min(c + radius + 1, w);
  if (r0 >= r1 || c0 >= c1) return 0;
  return s[at(r1, c1, w + 1)] - s[at(r0, c1, w + 1)] - s[at(r1, c0, w + 1)] + s[at(r0, c0, w + 1)];
}

// Two-pass chamfer distance (1, sqrt 2) to the nearest observed cell.
std::vector<double> distance_to_observed(const std::vector<std::uint8_t>& observed, int h, int w) {
  constexpr double kBig = 1e9;
  constexpr double kDiag = std::numbers::sqrt2;
  std::vector<double> d(observed.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = observed[i] ? 0.0 : kBig;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double& v = d[at(r, c, w)];
      if (c > 0) v = std::min(v, d[at(r, c - 1, w)] + 1.0);
      if (r > 0) {
        v = std::min(v, d[at(r - 1, c, w)] + 1.0);
        if (c > 0) v = std::min(v, d[at(r - 1, c - 1, w)] + kDiag);
        if (c + 1 < w) v = std::min(v, d[at(r - 1, c + 1, w)] + kDiag);
      }
    }
  for (int r = h - 1; r >= 0; --r)
    for (int c = w - 1; c >= 0; --c) {
      double& v = d[at(r, c, w)];
      if (c + 1 < w) v = std::min(v, d[at(r, c + 1, w)] + 1.0);
      if (r + 1 < h) {
        v = std::min(v, d[at(r + 1, c, w)] + 1.0);
        if (c + 1 < w) v = std::min(v, d[at(r + 1, c + 1, w)] + kDiag);
        if (c > 0) v = std::min(v, d[at(r + 1, c - 1, w)] + kDiag);
      }
    }
  return d;
}

ClassDist softmax(const std::array<double, kNumClasses>& scores) {
  const double m = std::max({scores[0], scores[1], scores[2]});
  ClassDist p;
  double z = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    p[k] = std::exp(scores[k] - m);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

double dot(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (int i = 0; i < kFeatureDim; ++i) s += a[i] * b[i];
  return s;
}

void write_label_grid(const std::string& path, const Grid<std::uint8_t>& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  const std::int32_t rows = g.rows(), cols = g.cols();
  out.write("UPENLBL1", 8);
  out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
  out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
  out.write(reinterpret_cast<const char*>(g.data().data()), static_cast<std::streamsize>(g.size()));
}

Grid<std::uint8_t> read_label_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  char magic[8];
  std::int32_t rows = 0, cols = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&rows), sizeof rows);
  in.read(reinterpret_cast<char*>(&cols), sizeof cols);
  if (!in || std::memcmp(magic, "UPENLBL1", 8) != 0 || rows <= 0 || cols <= 0)
    fail(ErrorCode::kIo, path + ": bad label grid");
  Grid<std::uint8_t> g(rows, cols);
  in.read(reinterpret_cast<char*>(g.data().data()), static_cast<std::streamsize>(g.size()));
  if (!in) fail(ErrorCode::kIo, path + ": truncated label grid");
  return g;
}

const std::vector<ClassDist>& member_probs(const Grid<ClassDist>* g) { return g->data(); }
const std::vector<ClassDist>& member_probs(const GlobalMap& m) { return m.probs.data(); }

// Means are taken as offsets from the first member so identical members reproduce it exactly.
template <typename Members>
ClassDist mean_of(const Members& members, std::size_t i, double n) {
  const ClassDist& ref = member_probs(members[0])[i];
  ClassDist dev{0, 0, 0};
  for (const auto& m : members)
    for (int k = 0; k < kNumClasses; ++k) dev[k] += member_probs(m)[i][k] - ref[k];
  ClassDist out;
  for (int k = 0; k < kNumClasses; ++k) out[k] = ref[k] + dev[k] / n;
  return out;
}

template <typename Members>
double occupancy_variance(const Members& members, std::size_t i, double n) {
  constexpr int kOcc = static_cast<int>(CellClass::kOccupied);
  const double ref = member_probs(members[0])[i][kOcc];
  double dev = 0.0;
  for (const auto& m : members) dev += member_probs(m)[i][kOcc] - ref;
  const double mean = ref + dev / n;
  double var = 0.0;
  for (const auto& m : members) {
    const double d = member_probs(m)[i][kOcc] - mean;
    var += d * d;
  }
  return var / n;
}

}  // namespace

FeatureMap compute_features(const LocalGrid& input) {
  const int h = input.h(), w = input.w();
  FeatureMap fm;
  fm.h = h;
  fm.w = w;
  fm.cells.resize(static_cast<std::size_t>(h) * w);
  fm.observed.assign(fm.cells.size(), 0);
  std::vector<std::uint8_t> is_free(fm.cells.size(), 0), is_occ(fm.cells.size(), 0);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const ClassDist& d = input.probs(r, c);
      if (is_uniform(d)) continue;
      fm.observed[at(r, c, w)] = 1;
      const CellClass k = argmax_class(d);
      if (k == CellClass::kFree) is_free[at(r, c, w)] = 1;
      if (k == CellClass::kOccupied) is_occ[at(r, c, w)] = 1;
    }
  const std::vector<int> s_free = integral(is_free, h, w);
  const std::vector<int> s_occ = integral(is_occ, h, w);
  const std::vector<double> dist = distance_to_observed(fm.observed, h, w);
  constexpr std::size_t kRings = kRingRadii.size();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      FeatureVector& f = fm.cells[at(r, c, w)];
      if (fm.observed[at(r, c, w)]) continue;  // observed cells are copied, never predicted
      f[2 * kRings] = std::min(dist[at(r, c, w)], kDistanceCapCells) / kDistanceCapCells;
      f[2 * kRings + 1] = 1.0;
      // Nothing observed inside the outermost ring: every ring fraction is zero.
      const int outer = kRingRadii.back();
      if (box_sum(s_free, h, w, r, c, outer) == 0 && box_sum(s_occ, h, w, r, c, outer) == 0) continue;
      int prev_free = box_sum(s_free, h, w, r, c, 0);
      int prev_occ = box_sum(s_occ, h, w, r, c, 0);
      int prev_side = 1;
      for (std::size_t i = 0; i < kRings; ++i) {
        const int radius = kRingRadii[i];
        const int side = 2 * radius + 1;
        const double area = static_cast<double>(side * side - prev_side * prev_side);
        const int bf = box_sum(s_free, h, w, r, c, radius);
        const int bo = box_sum(s_occ, h, w, r, c, radius);
        f[i] = (bf - prev_free) / area;
        f[kRings + i] = (bo - prev_occ) / area;
        prev_free = bf;
        prev_occ = bo;
        prev_side = side;
      }
    }
  return fm;
}

PredictorParams PredictorParams::random_init(std::uint64_t seed, double stddev) {
  PredictorParams p;
  p.init_seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, stddev);
  for (auto& row : p.weights)
    for (double& v : row) v = n(rng);
  return p;
}

ClassDist class_probabilities(const PredictorParams& params, const FeatureVector& f) {
  return softmax({dot(params.weights[0], f), dot(params.weights[1], f), dot(params.weights[2], f)});
}

LocalGrid predict(const PredictorParams& member, const LocalGrid& input) {
  return predict(member, input, compute_features(input));
}

LocalGrid predict(const PredictorParams& member, const LocalGrid& input, const FeatureMap& features) {
  require(features.h == input.h() && features.w == input.w(), "predict: feature map does not match input");
  LocalGrid out = input;
  constexpr double kScale = 1.0 - kNumClasses * kPredictionFloor;
  // Neighbouring cells often share a feature vector (e.g. far from any observation); reuse the last result.
  const FeatureVector* last = nullptr;
  ClassDist p{};
  for (int r = 0; r < input.h(); ++r)
    for (int c = 0; c < input.w(); ++c) {
      if (features.observed[at(r, c, input.w())]) continue;
      const FeatureVector& f = features.at(r, c);
      if (!last || f != *last) {
        p = class_probabilities(member, f);
        for (double& v : p) v = kScale * v + kPredictionFloor;
        last = &f;
      }
      out.probs(r, c) = p;
    }
  return out;
}

Grid<ClassDist> ensemble_mean(std::span<const Grid<ClassDist>* const> members) {
  require(!members.empty(), "ensemble_mean: need at least one member");
  const Grid<ClassDist>& first = *members.front();
  for (const auto* m : members)
    require(m->rows() == first.rows() && m->cols() == first.cols(), "ensemble_mean: mismatched grid dimensions");
  Grid<ClassDist> out(first.rows(), first.cols());
  const double n = static_cast<double>(members.size());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = mean_of(members, i, n);
  return out;
}

Grid<double> ensemble_variance(std::span<const Grid<ClassDist>* const> members) {
  if (members.size() < 2) fail(ErrorCode::kInvalidArgument, "ensemble_variance: need at least two members");
  const Grid<ClassDist>& first = *members.front();
  for (const auto* m : members)
    require(m->rows() == first.rows() && m->cols() == first.cols(), "ensemble_variance: mismatched grid dimensions");
  Grid<double> out(first.rows(), first.cols(), 0.0);
  const double n = static_cast<double>(members.size());
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = occupancy_variance(members, i, n);
  return out;
}

LocalGrid ensemble_mean(std::span<const LocalGrid> predictions) {
  require(!predictions.empty(), "ensemble_mean: need at least one member");
  std::vector<const Grid<ClassDist>*> ptrs;
  for (const auto& p : predictions) ptrs.push_back(&p.probs);
  LocalGrid out;
  out.cell_size_m = predictions.front().cell_size_m;
  out.probs = ensemble_mean(std::span<const Grid<ClassDist>* const>(ptrs));
  return out;
}

Grid<double> ensemble_variance(std::span<const LocalGrid> predictions) {
  std::vector<const Grid<ClassDist>*> ptrs;
  for (const auto& p : predictions) ptrs.push_back(&p.probs);
  return ensemble_variance(std::span<const Grid<ClassDist>* const>(ptrs));
}

double cross_entropy(const Grid<ClassDist>& pred, const Grid<std::uint8_t>& labels) {
  require(pred.rows() == labels.rows() && pred.cols() == labels.cols(), "cross_entropy: mismatched dimensions");
  require(pred.size() > 0, "cross_entropy: empty grid");
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) sum -= std::log(pred.data()[k][labels.data()[k]]);
  return sum / static_cast<double>(pred.size());
}

double loss_and_gradient(const PredictorParams& params, std::span<const Sample> samples,
                         std::array<FeatureVector, kNumClasses>* grad) {
  require(!samples.empty(), "loss_and_gradient: no samples");
  if (grad) *grad = {};
  double loss = 0.0;
  for (const Sample& s : samples) {
    const ClassDist p = class_probabilities(params, s.features);
    loss -= std::log(p[s.label]);
    if (!grad) continue;
    for (int k = 0; k < kNumClasses; ++k) {
      const double err = p[k] - (k == s.label ? 1.0 : 0.0);
      for (int j = 0; j < kFeatureDim; ++j) (*grad)[k][j] += err * s.features[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  if (grad)
    for (auto& row : *grad)
      for (double& v : row) v *= inv;
  return loss * inv;
}

PredictorParams train(const PredictorParams& member, std::span<const Sample> samples, const TrainConfig& cfg,
                      TrainReport* report) {
  require(!samples.empty(), "train: empty dataset");
  require(cfg.epochs >= 0 && cfg.batch_size >= 1 && cfg.learning_rate > 0.0, "train: bad hyperparameters");
  PredictorParams params = member;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(samples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Sample> batch;
  batch.reserve(static_cast<std::size_t>(cfg.batch_size));
  const auto check = [](double loss, const std::string& where) {
    if (!std::isfinite(loss)) fail(ErrorCode::kTrainingDiverged, "training diverged: non-finite loss " + where);
  };

  const double initial = loss_and_gradient(params, samples, nullptr);
  check(initial, "at initialization");
  if (report) {
    report->initial_loss = initial;
    report->epoch_loss.clear();
  }
  double last = initial;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch.capacity()) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + batch.capacity()); ++i)
        batch.push_back(samples[order[i]]);
      std::array<FeatureVector, kNumClasses> grad;
      const double loss = loss_and_gradient(params, batch, &grad);
      check(loss, "in epoch " + std::to_string(epoch));
      for (int k = 0; k < kNumClasses; ++k)
        for (int j = 0; j < kFeatureDim; ++j) params.weights[k][j] -= cfg.learning_rate * grad[k][j];
    }
    last = loss_and_gradient(params, samples, nullptr);
    check(last, "after epoch " + std::to_string(epoch));
    if (report) report->epoch_loss.push_back(last);
  }
  if (report) report->final_loss = last;
  return params;
}

// --- datasets --------------------------------------------------------------

Grid<std::uint8_t> truth_crop(const Floorplan& fp, const AgentPose& pose, int h, int w) {
  GlobalMap frame(fp.rows(), fp.cols(), fp.cell_size_m, fp.origin_x, fp.origin_z);
  Grid<std::uint8_t> labels(h, w, static_cast<std::uint8_t>(CellClass::kUnknown));
  const Cell center{(h - 1) / 2, (w - 1) / 2};
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const Cell g = local_to_global(frame, pose, {r, c}, center);
      if (!fp.in_bounds(g)) continue;
      labels(r, c) = static_cast<std::uint8_t>(fp.cells[g] == kOccupiedCell ? CellClass::kOccupied : CellClass::kFree);
    }
  return labels;
}

std::vector<Cell> shortest_path_cells(const Floorplan& fp, Cell start, Cell goal) {
  const Grid<double> field = geodesic_field(fp, goal);
  if (!fp.in_bounds(start) || field[start] == kUnreachable) return {};
  std::vector<Cell> path{start};
  constexpr int dr[8] = {1, -1, 0, 0, 1, 1, -1, -1};
  constexpr int dc[8] = {0, 0, 1, -1, 1, -1, 1, -1};
  Cell cur = start;
  while (!(cur == goal)) {
    Cell best = cur;
    double best_d = field[cur];
    for (int k = 0; k < 8; ++k) {
      const Cell n{cur.row + dr[k], cur.col + dc[k]};
      if (!fp.is_free(n)) continue;
      if (k >= 4 && (!fp.is_free({cur.row + dr[k], cur.col}) || !fp.is_free({cur.row, cur.col + dc[k]}))) continue;
      if (field[n] < best_d) {
        best_d = field[n];
        best = n;
      }
    }
    if (best == cur) break;
    cur = best;
    path.push_back(cur);
  }
  return path;
}

std::vector<TrainingPair> build_dataset(std::span<const Floorplan> floorplans, int episodes_per_plan,
                                        std::uint64_t seed, const DatasetConfig& cfg) {
  require(episodes_per_plan >= 0 && cfg.waypoints_per_episode >= 1, "build_dataset: bad counts");
  std::vector<TrainingPair> pairs;
  std::mt19937_64 rng(seed);
  for (const Floorplan& fp : floorplans) {
    for (int e = 0; e < episodes_per_plan; ++e) {
      const Episode ep = sample_episode(fp, rng(), cfg.min_path_m, 1.0, 1);
      const std::vector<Cell> cells =
          shortest_path_cells(fp, fp.cell_at(ep.start.x_m, ep.start.z_m), fp.cell_at(ep.goal_x, ep.goal_z));
      if (cells.size() < 2) continue;
      // Poses every waypoint_spacing_m along the path, facing the direction of travel.
      std::vector<std::size_t> stops{0};
      double run = 0.0;
      for (std::size_t i = 1; i < cells.size(); ++i) {
        run += std::hypot(cells[i].row - cells[i - 1].row, cells[i].col - cells[i - 1].col) * fp.cell_size_m;
        if (run >= cfg.waypoint_spacing_m - 1e-9) {
          stops.push_back(i);
          run = 0.0;
        }
      }
      std::vector<AgentPose> poses;
      for (std::size_t s = 0; s < stops.size(); ++s) {
        const Cell c = cells[stops[s]];
        const Cell next = s + 1 < stops.size() ? cells[stops[s + 1]] : cells.back();
        const Cell prev = s > 0 ? cells[stops[s - 1]] : c;
        const Cell dir_from = next == c ? prev : c;
        const Cell dir_to = next == c ? c : next;
        const double heading =
            normalize_heading(std::atan2(dir_to.row - dir_from.row, dir_to.col - dir_from.col) * 180.0 / std::numbers::pi);
        poses.push_back({fp.center_x(c.col), fp.center_z(c.row), heading});
      }
      std::vector<std::size_t> idx(poses.size());
      for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(cfg.waypoints_per_episode)));
      std::sort(idx.begin(), idx.end());

      GlobalMap obs(fp.rows(), fp.cols(), fp.cell_size_m, fp.origin_x, fp.origin_z);
      std::size_t next_wp = 0;
      for (std::size_t i = 0; i < poses.size() && next_wp < idx.size(); ++i) {
        register_bayes(obs, ground_project(sense(fp, poses[i], cfg.sensor), fp.cell_size_m, cfg.h, cfg.w), poses[i]);
        if (i != idx[next_wp]) continue;
        ++next_wp;
        TrainingPair pair;
        pair.input = egocentric_crop(obs, poses[i], cfg.h, cfg.w);
        pair.target = truth_crop(fp, poses[i], cfg.h, cfg.w);
        pair.scans = static_cast<int>(i + 1);
        pairs.push_back(std::move(pair));
      }
    }
  }
  return pairs;
}

std::vector<Sample> make_samples(std::span<const TrainingPair> pairs, int per_pair, std::uint64_t seed) {
  std::vector<Sample> out;
  std::mt19937_64 rng(seed);
  for (const TrainingPair& pair : pairs) {
    const FeatureMap fm = compute_features(pair.input);
    std::vector<std::size_t> unobserved;
    for (std::size_t i = 0; i < fm.observed.size(); ++i)
      if (!fm.observed[i]) unobserved.push_back(i);
    std::shuffle(unobserved.begin(), unobserved.end(), rng);
    if (per_pair >= 0 && unobserved.size() > static_cast<std::size_t>(per_pair)) unobserved.resize(per_pair);
    std::sort(unobserved.begin(), unobserved.end());
    for (std::size_t i : unobserved) out.push_back({fm.cells[i], pair.target.data()[i]});
  }
  return out;
}

void save_dataset(const std::string& dir, std::span<const TrainingPair> pairs) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) fail(ErrorCode::kIo, "cannot write manifest in " + dir);
  manifest << "upen-dataset v1\n";
  manifest << "pairs " << pairs.size() << '\n';
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    std::ostringstream stem;
    stem << "pair_" << std::setw(5) << std::setfill('0') << i;
    const TrainingPair& p = pairs[i];
    GlobalMap as_map;
    as_map.probs = p.input.probs;
    as_map.cell_size_m = p.input.cell_size_m;
    save_map((fs::path(dir) / (stem.str() + "_input.map")).string(), as_map);
    write_label_grid((fs::path(dir) / (stem.str() + "_target.lbl")).string(), p.target);
    manifest << stem.str() << "_input.map " << stem.str() << "_target.lbl " << p.scans << '\n';
  }
}

std::vector<TrainingPair> load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream manifest(fs::path(dir) / "manifest.txt");
  if (!manifest) fail(ErrorCode::kIo, "no manifest.txt in " + dir);
  std::string magic, version, key;
  std::size_t n = 0;
  manifest >> magic >> version >> key >> n;
  if (magic != "upen-dataset" || version != "v1" || key != "pairs") fail(ErrorCode::kIo, dir + ": bad manifest");
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string input, target;
    int scans = 0;
    if (!(manifest >> input >> target >> scans)) fail(ErrorCode::kIo, dir + ": truncated manifest");
    TrainingPair p;
    const GlobalMap m = load_map((fs::path(dir) / input).string());
    p.input.probs = m.probs;
    p.input.cell_size_m = m.cell_size_m;
    p.target = read_label_grid((fs::path(dir) / target).string());
    p.scans = scans;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

// --- weights io ------------------------------------------------------------

void save_weights(const std::string& path, const PredictorParams& params) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path);
  out << "upen-weights v1\n";
  out << "classes " << kNumClasses << " features " << kFeatureDim << " patch " << kPatchSize << '\n';
  out << "init_seed " << params.init_seed << '\n';
  out << std::setprecision(17);
  for (const auto& row : params.weights) {
    for (int j = 0; j < kFeatureDim; ++j) out << (j ? " " : "") << row[j];
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed: " + path);
}

PredictorParams load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  std::string magic, version, k1, k2, k3, k4;
  int classes = 0, features = 0, patch = 0;
  PredictorParams p;
  in >> magic >> version >> k1 >> classes >> k2 >> features >> k3 >> patch >> k4 >> p.init_seed;
  if (!in || magic != "upen-weights" || version != "v1") fail(ErrorCode::kIo, path + ": not a v1 weights file");
  if (classes != kNumClasses || features != kFeatureDim || patch != kPatchSize)
    fail(ErrorCode::kIo, path + ": weights shape does not match this build");
  for (auto& row : p.weights)
    for (double& v : row)
      if (!(in >> v) || !std::isfinite(v)) fail(ErrorCode::kIo, path + ": bad weight value");
  return p;
}

std::string member_weights_path(const std::string& dir, int index) {
  return (std::filesystem::path(dir) / ("member_" + std::to_string(index) + ".weights")).string();
}

std::vector<PredictorParams> load_ensemble(const std::string& dir) {
  std::vector<PredictorParams> members;
  for (int i = 0; std::filesystem::exists(member_weights_path(dir, i)); ++i)
    members.push_back(load_weights(member_weights_path(dir, i)));
  if (members.empty()) fail(ErrorCode::kIo, "no member_<i>.weights files in " + dir);
  return members;
}

// --- ensemble state --------------------------------------------------------

EnsembleState::EnsembleState(std::vector<PredictorParams> m, const GlobalMap& blank, int lh, int lw)
    : members(std::move(m)),
      member_maps(members.size(), blank),
      obs_map(blank),
      mean_map(blank),
      uncertainty(blank.rows(), blank.cols(), 0.0),
      local_h(lh),
      local_w(lw) {
  require(!members.empty(), "ensemble needs at least one member");
}

void update_ensemble_maps(EnsembleState& state, const RangeScan& scan, const AgentPose& pose) {
  const double r = state.obs_map.cell_size_m;
  const WindowMapping window = map_window(state.obs_map, state.local_h, state.local_w, pose);
  register_bayes(state.obs_map, ground_project(scan, r, state.local_h, state.local_w), window);
  const LocalGrid input = egocentric_crop(state.obs_map, pose, state.local_h, state.local_w);
  const FeatureMap features = compute_features(input);
  for (std::size_t i = 0; i < state.members.size(); ++i)
    register_bayes(state.member_maps[i], predict(state.members[i], input, features), window);

  // Only cells inside the window can have changed.
  const double n = static_cast<double>(state.members.size());
  for (const int g : window.global_index) {
    const auto i = static_cast<std::size_t>(g);
    state.mean_map.probs.data()[i] = mean_of(state.member_maps, i, n);
    state.uncertainty.data()[i] = state.members.size() >= 2 ? occupancy_variance(state.member_maps, i, n) : 0.0;
  }
}

}  // namespace upen
