#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "upen/mapping.hpp"

namespace upen {

// --- features --------------------------------------------------------------

/// Neighbourhood size of the predictor patch (k x k).
inline constexpr int kPatchSize = 15;
/// Outer Chebyshev radii of the four rings that partition the patch.
inline constexpr std::array<int, 4> kRingRadii{1, 3, 5, 7};
inline constexpr double kDistanceCapCells = 16.0;
/// Observed-FREE and observed-OCCUPIED fractions per ring, distance to nearest observed, bias.
inline constexpr int kFeatureDim = 2 * static_cast<int>(kRingRadii.size()) + 2;

using FeatureVector = std::array<double, kFeatureDim>;

/// Per-cell features of an input grid, row-major h*w. Only unobserved cells get features;
/// observed cells keep a zero vector.
struct FeatureMap {
  int h = 0;
  int w = 0;
  std::vector<FeatureVector> cells;
  std::vector<std::uint8_t> observed;  // 1 where the input cell carries evidence

  const FeatureVector& at(int r, int c) const { return cells[static_cast<std::size_t>(r) * w + c]; }
};

FeatureMap compute_features(const LocalGrid& input);

// --- model -----------------------------------------------------------------

/// Multinomial logistic model: class scores = weights[c] . features.
struct PredictorParams {
  std::array<FeatureVector, kNumClasses> weights{};
  std::uint64_t init_seed = 0;

  static PredictorParams zeros() { return {}; }
  static PredictorParams random_init(std::uint64_t seed, double stddev = 0.1);

  friend bool operator==(const PredictorParams&, const PredictorParams&) = default;
};

/// Floor applied to predicted probabilities: p = (1 - 3 eps') softmax + eps'.
inline constexpr double kPredictionFloor = 1e-6;

/// Raw softmax of the class scores for one feature vector.
ClassDist class_probabilities(const PredictorParams& params, const FeatureVector& f);

LocalGrid predict(const PredictorParams& member, const LocalGrid& input);
/// Same as predict() with features computed once and shared across members.
LocalGrid predict(const PredictorParams& member, const LocalGrid& input, const FeatureMap& features);

// --- ensemble reductions ---------------------------------------------------

/// Per-cell arithmetic mean of aligned class-distribution grids (N >= 1).
Grid<ClassDist> ensemble_mean(std::span<const Grid<ClassDist>* const> members);
/// Per-cell population variance of the OCCUPIED probability (N >= 2).
Grid<double> ensemble_variance(std::span<const Grid<ClassDist>* const> members);

LocalGrid ensemble_mean(std::span<const LocalGrid> predictions);
Grid<double> ensemble_variance(std::span<const LocalGrid> predictions);

// --- loss and training -----------------------------------------------------

/// Pixel-wise cross entropy -(1/K) sum_k log p_k[label_k] over all cells of `pred`.
double cross_entropy(const Grid<ClassDist>& pred, const Grid<std::uint8_t>& labels);

/// One training cell: features and ground-truth class.
struct Sample {
  FeatureVector features{};
  std::uint8_t label = 0;
};

/// Mean cross entropy over samples under raw softmax, with its gradient w.r.t. the weights.
double loss_and_gradient(const PredictorParams& params, std::span<const Sample> samples,
                         std::array<FeatureVector, kNumClasses>* grad);

struct TrainConfig {
  int epochs = 15;
  double learning_rate = 0.5;
  int batch_size = 256;
  std::uint64_t seed = 1;
};

struct TrainReport {
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> epoch_loss;  // training loss after each epoch
};

/// Minibatch SGD on the cross entropy. Throws Error(kTrainingDiverged) on a non-finite loss.
PredictorParams train(const PredictorParams& member, std::span<const Sample> samples, const TrainConfig& cfg,
                      TrainReport* report = nullptr);

// --- datasets --------------------------------------------------------------

struct TrainingPair {
  LocalGrid input;                 // accumulated ground-projected observations
  Grid<std::uint8_t> target;       // CellClass per cell from the floorplan
  int scans = 0;                   // number of scans accumulated into input
};

struct DatasetConfig {
  int h = 160;
  int w = 160;
  int waypoints_per_episode = 5;
  double waypoint_spacing_m = kForwardStepM;
  double min_path_m = 2.0;
  SensorConfig sensor{};
};

/// Ground-truth labels of the egocentric window at `pose` (UNKNOWN outside the floorplan).
Grid<std::uint8_t> truth_crop(const Floorplan& fp, const AgentPose& pose, int h, int w);

/// Cell path from start to goal descending the geodesic field towards the goal.
std::vector<Cell> shortest_path_cells(const Floorplan& fp, Cell start, Cell goal);

/// Pairs sampled along shortest paths between random locations; scans accumulate along each path.
std::vector<TrainingPair> build_dataset(std::span<const Floorplan> floorplans, int episodes_per_plan,
                                        std::uint64_t seed, const DatasetConfig& cfg = {});

/// Unobserved cells of each pair, subsampled to at most `per_pair` cells.
std::vector<Sample> make_samples(std::span<const TrainingPair> pairs, int per_pair, std::uint64_t seed);

void save_dataset(const std::string& dir, std::span<const TrainingPair> pairs);
std::vector<TrainingPair> load_dataset(const std::string& dir);

// --- weights io ------------------------------------------------------------

void save_weights(const std::string& path, const PredictorParams& params);
PredictorParams load_weights(const std::string& path);
std::string member_weights_path(const std::string& dir, int index);
std::vector<PredictorParams> load_ensemble(const std::string& dir);

// --- ensemble state --------------------------------------------------------

struct EnsembleState {
  std::vector<PredictorParams> members;
  std::vector<GlobalMap> member_maps;
  GlobalMap obs_map;
  GlobalMap mean_map;
  Grid<double> uncertainty;
  int local_h = 160;
  int local_w = 160;

  EnsembleState(std::vector<PredictorParams> members, const GlobalMap& blank, int local_h = 160, int local_w = 160);

  std::size_t size() const { return members.size(); }
};

/// Projects the scan into obs_map, predicts per member from the accumulated observations,
/// registers each prediction into its member map and refreshes mean and uncertainty.
void update_ensemble_maps(EnsembleState& state, const RangeScan& scan, const AgentPose& pose);

}  // namespace upen
