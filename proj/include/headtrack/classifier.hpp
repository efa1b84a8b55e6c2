#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "headtrack/core.hpp"
#include "headtrack/heatmap.hpp"

namespace headtrack {

using FeatureVector = Eigen::VectorXd;

// Splits the frame into a grid x grid set of rectangles (the last row and
// column absorb the remainder) and returns log(1 + region sum), row-major.
FeatureVector pool_heatmap(const Heatmap& heatmap, int grid = 64);

// Region sums before the log transform.
std::vector<std::uint64_t> pooled_sums(const Heatmap& heatmap, int grid);

struct TrainParams {
  double learning_rate = 0.1;
  int iterations = 500;
  double l2 = 1e-4;
  std::array<double, 3> split{60.0, 20.0, 20.0};  // train / validation / test

  void validate() const;
};

struct SoftmaxModel {
  int grid = 0;
  Eigen::VectorXd feature_mean;
  Eigen::VectorXd feature_std;
  // kNumClasses x (dim + 1); the last column is the bias.
  Eigen::MatrixXd weights;
  TrainParams params{};

  Eigen::Index dim() const noexcept { return feature_mean.size(); }
  static SoftmaxModel zero(int grid);
};

struct Prediction {
  ClassLabel label;
  std::array<double, kNumClasses> probabilities;
};

// Throws DimensionMismatch when the feature size differs from the model.
Prediction predict(const SoftmaxModel& model, const FeatureVector& feature);

struct LabeledSet {
  std::vector<FeatureVector> features;
  std::vector<ClassLabel> labels;
};

struct SplitIndices {
  std::vector<std::size_t> train, validation, test;
};

// Stratified split: within each class, a seeded shuffle followed by
// floor-proportional validation and test shares; the rest trains.
SplitIndices stratified_split(std::span<const ClassLabel> labels, const std::array<double, 3>& ratios,
                              std::uint64_t seed);

struct TrainResult {
  SoftmaxModel model;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t n_train = 0, n_validation = 0, n_test = 0;
  std::vector<double> loss_history;  // objective before each iteration, then final
};

// Full-batch gradient descent on mean softmax cross-entropy plus
// (l2 / 2) * ||W||^2 over non-bias weights, from zero weights, on features
// standardized with training statistics. Throws DegenerateData when fewer
// than 10 samples or 2 labels are present, or a split comes out empty.
TrainResult train(const LabeledSet& data, int grid, std::uint64_t split_seed, const TrainParams& params = {});

double accuracy(const SoftmaxModel& model, const LabeledSet& data, std::span<const std::size_t> indices);

// Objective and gradient over already standardized features (rows are
// samples, last column is 1).
struct LossGradient {
  double loss;
  Eigen::MatrixXd gradient;
};
LossGradient softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                          std::span<const ClassLabel> labels, double l2);

// Largest elementwise relative error between the analytic gradient and
// central differences with the given step.
double gradient_check(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                      std::span<const ClassLabel> labels, double l2, double step = 1e-5);

// Standardizes features and appends the bias column.
Eigen::MatrixXd design_matrix(const SoftmaxModel& model, std::span<const FeatureVector> features);

// Model text file: "softmax G=<G> classes=3", means, stds, one line per
// class weights (bias last), then a hyperparameter line; %.9g reals.
std::string format_model(const SoftmaxModel& model);
SoftmaxModel parse_model(const std::string& text);

// "track_id,f0,...,f{n-1}" CSV of feature vectors, written at round-trip
// precision.
std::string format_features(std::span<const TrackId> ids, std::span<const FeatureVector> features);
void parse_features(const std::string& text, std::vector<TrackId>& ids, std::vector<FeatureVector>& features);

}  // namespace headtrack
