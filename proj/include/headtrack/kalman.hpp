#pragma once

#include <Eigen/Dense>

#include "headtrack/core.hpp"

namespace headtrack {

using StateVector = Eigen::Matrix<double, 7, 1>;
using StateMatrix = Eigen::Matrix<double, 7, 7>;
using Measurement = Eigen::Matrix<double, 4, 1>;

// Box center (u, v), area s and aspect ratio r = w / h.
Measurement bbox_to_measurement(const BoundingBox& box);
// Throws InvariantError when s <= 0 or r <= 0.
BoundingBox measurement_to_bbox(const Measurement& z);

// [u, v, s, r, du, dv, ds] with covariance.
struct KalmanTrackState {
  StateVector mean = StateVector::Zero();
  StateMatrix covariance = StateMatrix::Identity();
};

struct KalmanNoise {
  double process_scale = 1.0;
  double measurement_scale = 1.0;
};

// Constant-velocity model on (u, v, s); r is modeled constant.
class KalmanModel {
 public:
  // Floor applied to s (and r) whenever they would become non-positive.
  static constexpr double kPositiveFloor = 1e-3;

  explicit KalmanModel(KalmanNoise noise = {});

  KalmanTrackState initiate(const Measurement& z) const;
  KalmanTrackState predict(const KalmanTrackState& state) const;
  // Throws NumericError if the innovation covariance cannot be factored.
  KalmanTrackState update(const KalmanTrackState& state, const Measurement& z) const;

  // z - H * mean
  Measurement innovation(const KalmanTrackState& state, const Measurement& z) const;

  const StateMatrix& transition() const noexcept { return transition_; }
  const StateMatrix& process_noise() const noexcept { return process_noise_; }
  const Eigen::Matrix4d& measurement_noise() const noexcept { return measurement_noise_; }

 private:
  StateMatrix transition_;
  Eigen::Matrix<double, 4, 7> observation_;
  StateMatrix process_noise_;
  Eigen::Matrix4d measurement_noise_;
};

BoundingBox state_to_bbox(const KalmanTrackState& state);

}  // namespace headtrack
