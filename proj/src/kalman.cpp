#include "headtrack/kalman.hpp"

#include <cmath>

#include "headtrack/errors.hpp"

namespace headtrack {

Measurement bbox_to_measurement(const BoundingBox& box) {
  const Point c = center(box);
  return {c.x, c.y, box.width() * box.height(), box.width() / box.height()};
}

BoundingBox measurement_to_bbox(const Measurement& z) {
  const double s = z(2);
  const double r = z(3);
  if (!(s > 0.0) || !(r > 0.0)) throw InvariantError("measurement has non-positive area or aspect ratio");
  const double w = std::sqrt(s * r);
  const double h = s / w;
  return BoundingBox(z(0) - w / 2.0, z(1) - h / 2.0, w, h);
}

KalmanModel::KalmanModel(KalmanNoise noise) {
  if (!(noise.process_scale > 0.0) || !(noise.measurement_scale > 0.0)) {
    throw InvariantError("noise scales must be positive");
  }
  transition_.setIdentity();
  transition_(0, 4) = transition_(1, 5) = transition_(2, 6) = 1.0;
  observation_.setZero();
  observation_.leftCols<4>().setIdentity();
  StateVector q;
  q << 1.0, 1.0, 1.0, 1e-4, 1e-2, 1e-2, 1e-4;
  process_noise_ = (q * noise.process_scale).asDiagonal();
  measurement_noise_ = Eigen::Vector4d(1.0, 1.0, 10.0, 1e-2).asDiagonal();
  measurement_noise_ *= noise.measurement_scale;
}

KalmanTrackState KalmanModel::initiate(const Measurement& z) const {
  KalmanTrackState st;
  st.mean.head<4>() = z;
  st.mean.tail<3>().setZero();
  st.covariance.setZero();
  st.covariance.topLeftCorner<4, 4>() = measurement_noise_;
  st.covariance(4, 4) = 1e4;
  st.covariance(5, 5) = 1e4;
  st.covariance(6, 6) = 1e-2;
  return st;
}

KalmanTrackState KalmanModel::predict(const KalmanTrackState& state) const {
  KalmanTrackState out;
  out.mean = transition_ * state.mean;
  if (out.mean(2) <= 0.0) {
    out.mean(2) = kPositiveFloor;
    out.mean(6) = 0.0;
  }
  out.covariance = transition_ * state.covariance * transition_.transpose() + process_noise_;
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  return out;
}

Measurement KalmanModel::innovation(const KalmanTrackState& state, const Measurement& z) const {
  return z - observation_ * state.mean;
}

KalmanTrackState KalmanModel::update(const KalmanTrackState& state, const Measurement& z) const {
  const Eigen::Matrix<double, 7, 4> pht = state.covariance * observation_.transpose();
  const Eigen::Matrix4d s = observation_ * pht + measurement_noise_;
  const Eigen::LLT<Eigen::Matrix4d> llt(s);
  if (llt.info() != Eigen::Success || !s.allFinite()) {
    throw NumericError("innovation covariance is not positive definite");
  }
  const Eigen::Matrix<double, 7, 4> gain = llt.solve(pht.transpose()).transpose();
  KalmanTrackState out;
  out.mean = state.mean + gain * innovation(state, z);
  // Joseph form keeps the covariance symmetric positive definite.
  const StateMatrix ikh = StateMatrix::Identity() - gain * observation_;
  out.covariance = ikh * state.covariance * ikh.transpose() + gain * measurement_noise_ * gain.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  if (out.mean(2) <= 0.0) out.mean(2) = kPositiveFloor;
  if (out.mean(3) <= 0.0) out.mean(3) = kPositiveFloor;
  if (!out.mean.allFinite() || !out.covariance.allFinite()) throw NumericError("Kalman update produced non-finite state");
  return out;
}

BoundingBox state_to_bbox(const KalmanTrackState& state) { return measurement_to_bbox(state.mean.head<4>()); }

}  // namespace headtrack
