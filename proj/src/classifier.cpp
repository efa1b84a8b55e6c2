#include "headtrack/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "headtrack/errors.hpp"
#include "headtrack/io.hpp"

namespace headtrack {
namespace {

std::vector<int> region_edges(int extent, int grid) {
  std::vector<int> edges(static_cast<std::size_t>(grid) + 1);
  const int base = extent / grid;
  for (int k = 0; k <= grid; ++k) {
    edges[static_cast<std::size_t>(k)] =
        base > 0 ? std::min(k * base, extent)
                 : static_cast<int>(static_cast<std::int64_t>(k) * extent / grid);
  }
  edges.back() = extent;
  return edges;
}

std::string format_g(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string format_g9(double v) { return format_g(v, 9); }

void append_row(std::string& out, const Eigen::Ref<const Eigen::VectorXd>& values, int digits = 9) {
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_g(values(i), digits);
  }
  out += '\n';
}

Eigen::VectorXd parse_row(const std::string& line, std::size_t line_no) {
  const auto fields = io::split_fields(line);
  Eigen::VectorXd v(static_cast<Eigen::Index>(fields.size()));
  for (std::size_t i = 0; i < fields.size(); ++i) {
    try {
      std::size_t used = 0;
      v(static_cast<Eigen::Index>(i)) = std::stod(fields[i], &used);
      if (used != fields[i].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw FormatError("not a number: '" + fields[i] + "'", line_no);
    }
  }
  return v;
}

Eigen::MatrixXd one_hot(std::span<const ClassLabel> labels) {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), kNumClasses);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Eigen::Index>(i), static_cast<int>(labels[i])) = 1.0;
  return y;
}

}  // namespace

std::vector<std::uint64_t> pooled_sums(const Heatmap& heatmap, int grid) {
  if (grid < 1) throw InvariantError("pooling grid must be >= 1");
  const auto xs = region_edges(heatmap.width(), grid);
  const auto ys = region_edges(heatmap.height(), grid);
  std::vector<std::uint64_t> sums(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid), 0);
  for (int gy = 0; gy < grid; ++gy) {
    for (int y = ys[static_cast<std::size_t>(gy)]; y < ys[static_cast<std::size_t>(gy) + 1]; ++y) {
      for (int gx = 0; gx < grid; ++gx) {
        std::uint64_t s = 0;
        for (int x = xs[static_cast<std::size_t>(gx)]; x < xs[static_cast<std::size_t>(gx) + 1]; ++x) s += heatmap.at(x, y);
        sums[static_cast<std::size_t>(gy) * static_cast<std::size_t>(grid) + static_cast<std::size_t>(gx)] += s;
      }
    }
  }
  return sums;
}

FeatureVector pool_heatmap(const Heatmap& heatmap, int grid) {
  const auto sums = pooled_sums(heatmap, grid);
  FeatureVector f(static_cast<Eigen::Index>(sums.size()));
  for (std::size_t i = 0; i < sums.size(); ++i) f(static_cast<Eigen::Index>(i)) = std::log1p(static_cast<double>(sums[i]));
  return f;
}

void TrainParams::validate() const {
  if (!(learning_rate > 0.0)) throw InvariantError("learning rate must be positive");
  if (iterations < 0) throw InvariantError("iterations must be >= 0");
  if (!(l2 >= 0.0)) throw InvariantError("l2 must be >= 0");
  for (double r : split)
    if (!(r >= 0.0)) throw InvariantError("split ratios must be >= 0");
  if (!(split[0] > 0.0)) throw InvariantError("training share must be positive");
}

SoftmaxModel SoftmaxModel::zero(int grid) {
  SoftmaxModel m;
  m.grid = grid;
  const Eigen::Index d = static_cast<Eigen::Index>(grid) * grid;
  m.feature_mean = Eigen::VectorXd::Zero(d);
  m.feature_std = Eigen::VectorXd::Ones(d);
  m.weights = Eigen::MatrixXd::Zero(kNumClasses, d + 1);
  return m;
}

Eigen::MatrixXd design_matrix(const SoftmaxModel& model, std::span<const FeatureVector> features) {
  const Eigen::Index d = model.dim();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), d + 1);
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != d) {
      throw DimensionMismatch("feature has " + std::to_string(features[i].size()) + " values, model expects " +
                              std::to_string(d));
    }
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r).head(d) = ((features[i] - model.feature_mean).array() / model.feature_std.array()).matrix().transpose();
    x(r, d) = 1.0;
  }
  return x;
}

Prediction predict(const SoftmaxModel& model, const FeatureVector& feature) {
  const Eigen::MatrixXd x = design_matrix(model, std::span<const FeatureVector>(&feature, 1));
  const Eigen::VectorXd logits = model.weights * x.row(0).transpose();
  const double top = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - top).exp().matrix();
  e /= e.sum();
  Prediction p{ClassLabel::customer, {}};
  int best = 0;
  for (int k = 0; k < kNumClasses; ++k) {
    p.probabilities[static_cast<std::size_t>(k)] = e(k);
    if (logits(k) > logits(best)) best = k;
  }
  p.label = static_cast<ClassLabel>(best);
  return p;
}

LossGradient softmax_loss(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                          std::span<const ClassLabel> labels, double l2) {
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols() - 1;
  Eigen::MatrixXd logits = design * weights.transpose();  // n x k
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double top = logits.row(i).maxCoeff();
    const double own = logits(i, static_cast<int>(labels[static_cast<std::size_t>(i)]));
    logits.row(i) = (logits.row(i).array() - top).exp().matrix();
    const double z = logits.row(i).sum();
    logits.row(i) /= z;
    loss += std::log(z) - (own - top);
  }
  const Eigen::MatrixXd residual = logits - one_hot(labels);
  LossGradient out;
  out.gradient = residual.transpose() * design / static_cast<double>(n);
  out.gradient.leftCols(d) += l2 * weights.leftCols(d);
  out.loss = loss / static_cast<double>(n) + 0.5 * l2 * weights.leftCols(d).squaredNorm();
  return out;
}

double gradient_check(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& design,
                      std::span<const ClassLabel> labels, double l2, double step) {
  const Eigen::MatrixXd analytic = softmax_loss(weights, design, labels, l2).gradient;
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols() - 1;
  const Eigen::MatrixXd logits = design * weights.transpose();

  // Per-sample losses with weight (k, j) moved by +step and -step; only
  // logit column k changes. Differences are taken per sample and per penalty
  // term so that the large shared part of the objective cancels exactly.
  Eigen::MatrixXd up = logits, down = logits;
  auto sample_loss = [&](const Eigen::MatrixXd& z, Eigen::Index i) {
    const double top = z.row(i).maxCoeff();
    const double sum = (z.row(i).array() - top).exp().sum();
    return std::log(sum) - (z(i, static_cast<int>(labels[static_cast<std::size_t>(i)])) - top);
  };

  double worst = 0.0;
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      up.col(k) = logits.col(k) + step * design.col(j);
      down.col(k) = logits.col(k) - step * design.col(j);
      double diff = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) diff += sample_loss(up, i) - sample_loss(down, i);
      diff /= static_cast<double>(n);
      if (j < d) {
        const double w = weights(k, j);
        diff += 0.5 * l2 * ((2.0 * w * step + step * step) - (-2.0 * w * step + step * step));
      }
      up.col(k) = logits.col(k);
      down.col(k) = logits.col(k);
      const double numeric = diff / (2.0 * step);
      const double a = analytic(k, j);
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (std::isnan(err)) return err;
      worst = std::max(worst, err);
    }
  }
  return worst;
}

SplitIndices stratified_split(std::span<const ClassLabel> labels, const std::array<double, 3>& ratios,
                              std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  SplitIndices s;
  for (int k = 0; k < kNumClasses; ++k) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (static_cast<int>(labels[i]) == k) idx.push_back(i);
    std::mt19937_64 rng(seed * 31 + static_cast<std::uint64_t>(k));
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_val = static_cast<std::size_t>(std::floor(n * ratios[1] / total));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios[2] / total));
    s.validation.insert(s.validation.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val),
                  idx.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
    s.train.insert(s.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), idx.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

double accuracy(const SoftmaxModel& model, const LabeledSet& data, std::span<const std::size_t> indices) {
  if (indices.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto i : indices)
    if (predict(model, data.features[i]).label == data.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

TrainResult train(const LabeledSet& data, int grid, std::uint64_t split_seed, const TrainParams& params) {
  params.validate();
  if (data.features.size() != data.labels.size()) throw InvariantError("features and labels differ in length");
  if (data.features.size() < 10) throw DegenerateData("need at least 10 samples");
  const std::set<ClassLabel> distinct(data.labels.begin(), data.labels.end());
  if (distinct.size() < 2) throw DegenerateData("need at least 2 distinct labels");
  const Eigen::Index d = data.features.front().size();
  if (d != static_cast<Eigen::Index>(grid) * grid) {
    throw DimensionMismatch("features have " + std::to_string(d) + " values, grid " + std::to_string(grid) +
                            " needs " + std::to_string(grid * grid));
  }
  for (const auto& f : data.features)
    if (f.size() != d) throw DimensionMismatch("feature vectors differ in length");

  const auto split = stratified_split(data.labels, params.split, split_seed);
  if (split.train.empty() || (params.split[1] > 0 && split.validation.empty()) ||
      (params.split[2] > 0 && split.test.empty())) {
    throw DegenerateData("a split is empty");
  }
  std::set<ClassLabel> train_labels;
  for (const auto i : split.train) train_labels.insert(data.labels[i]);
  if (train_labels.size() < 2) throw DegenerateData("training split holds a single label");

  TrainResult result;
  SoftmaxModel& model = result.model;
  model = SoftmaxModel::zero(grid);
  model.params = params;

  const auto n_train = static_cast<double>(split.train.size());
  model.feature_mean.setZero();
  for (const auto i : split.train) model.feature_mean += data.features[i];
  model.feature_mean /= n_train;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto i : split.train) var += (data.features[i] - model.feature_mean).array().square().matrix();
  model.feature_std = (var / n_train).array().sqrt().max(1e-8).matrix();

  std::vector<FeatureVector> train_features;
  std::vector<ClassLabel> train_labels_vec;
  for (const auto i : split.train) {
    train_features.push_back(data.features[i]);
    train_labels_vec.push_back(data.labels[i]);
  }
  const Eigen::MatrixXd x = design_matrix(model, train_features);
  for (int it = 0; it < params.iterations; ++it) {
    const auto lg = softmax_loss(model.weights, x, train_labels_vec, params.l2);
    result.loss_history.push_back(lg.loss);
    model.weights -= params.learning_rate * lg.gradient;
  }
  result.loss_history.push_back(softmax_loss(model.weights, x, train_labels_vec, params.l2).loss);

  result.train_accuracy = accuracy(model, data, split.train);
  result.validation_accuracy = accuracy(model, data, split.validation);
  result.test_accuracy = accuracy(model, data, split.test);
  result.n_train = split.train.size();
  result.n_validation = split.validation.size();
  result.n_test = split.test.size();
  return result;
}

std::string format_model(const SoftmaxModel& model) {
  std::string out = "softmax G=" + std::to_string(model.grid) + " classes=" + std::to_string(kNumClasses) + "\n";
  append_row(out, model.feature_mean);
  append_row(out, model.feature_std);
  for (Eigen::Index k = 0; k < model.weights.rows(); ++k) append_row(out, model.weights.row(k).transpose());
  const auto& p = model.params;
  out += "hyper lr=" + format_g9(p.learning_rate) + " iters=" + std::to_string(p.iterations) +
         " l2=" + format_g9(p.l2) + " split=" + format_g9(p.split[0]) + "," + format_g9(p.split[1]) + "," +
         format_g9(p.split[2]) + "\n";
  return out;
}

SoftmaxModel parse_model(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string {
    if (!std::getline(in, line)) throw FormatError("model file truncated", line_no + 1);
    ++line_no;
    return line;
  };
  SoftmaxModel m;
  int classes = 0;
  if (std::sscanf(next_line().c_str(), "softmax G=%d classes=%d", &m.grid, &classes) != 2 || m.grid < 1 ||
      classes != kNumClasses) {
    throw FormatError("expected header 'softmax G=<G> classes=3'", 1);
  }
  const Eigen::Index d = static_cast<Eigen::Index>(m.grid) * m.grid;
  m.feature_mean = parse_row(next_line(), line_no);
  m.feature_std = parse_row(next_line(), line_no);
  if (m.feature_mean.size() != d || m.feature_std.size() != d) throw FormatError("standardization row has wrong length");
  if ((m.feature_std.array() <= 0.0).any()) throw FormatError("standard deviations must be positive");
  m.weights.resize(kNumClasses, d + 1);
  for (int k = 0; k < kNumClasses; ++k) {
    const auto row = parse_row(next_line(), line_no);
    if (row.size() != d + 1) throw FormatError("weight row has wrong length", line_no);
    m.weights.row(k) = row.transpose();
  }
  if (std::getline(in, line) && !line.empty()) {
    double s0 = 0, s1 = 0, s2 = 0;
    if (std::sscanf(line.c_str(), "hyper lr=%lf iters=%d l2=%lf split=%lf,%lf,%lf", &m.params.learning_rate,
                    &m.params.iterations, &m.params.l2, &s0, &s1, &s2) == 6) {
      m.params.split = {s0, s1, s2};
    }
  }
  return m;
}

std::string format_features(std::span<const TrackId> ids, std::span<const FeatureVector> features) {
  if (ids.size() != features.size()) throw InvariantError("ids and features differ in length");
  std::string out = "track_id";
  const Eigen::Index d = features.empty() ? 0 : features.front().size();
  for (Eigen::Index j = 0; j < d; ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (features[i].size() != d) throw DimensionMismatch("feature vectors differ in length");
    out += std::to_string(ids[i]) + ",";
    append_row(out, features[i], 17);
  }
  return out;
}

void parse_features(const std::string& text, std::vector<TrackId>& ids, std::vector<FeatureVector>& features) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index d = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (d < 0) {
      if (line.rfind("track_id", 0) != 0) throw FormatError("expected header 'track_id,f0,...'", line_no);
      d = static_cast<Eigen::Index>(io::split_fields(line).size()) - 1;
      continue;
    }
    const auto row = parse_row(line, line_no);
    if (row.size() != d + 1) throw FormatError("expected " + std::to_string(d + 1) + " fields", line_no);
    const double id = row(0);
    if (id < 1 || id != std::floor(id)) throw FormatError("bad track id", line_no);
    ids.push_back(static_cast<TrackId>(id));
    features.push_back(row.tail(d));
  }
  if (d < 0) throw FormatError("missing header 'track_id,f0,...'");
}

}  // namespace headtrack
