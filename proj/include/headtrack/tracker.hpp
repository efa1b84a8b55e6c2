#pragma once

#include <map>
#include <span>
#include <vector>

#include "headtrack/assignment.hpp"
#include "headtrack/core.hpp"
#include "headtrack/kalman.hpp"

namespace headtrack {

struct TrackerParams {
  double iou_gate = 0.3;
  int max_age = 3;
  int min_hits = 3;
  KalmanNoise noise{};
  // Predict once per missing frame instead of once per step call.
  bool predict_per_gap = false;

  void validate() const;
};

struct ActiveTrack {
  TrackId track_id;
  KalmanTrackState state;
  int hits = 0;
  int age = 0;
  int time_since_update = 0;
};

struct AssociationResult {
  // (track index, detection index)
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<std::size_t> unmatched_detections;
  std::vector<std::size_t> unmatched_tracks;
};

// Hungarian matching on 1 - IOU; pairs below iou_gate are dissolved.
AssociationResult associate(std::span<const BoundingBox> tracks, std::span<const BoundingBox> detections,
                            double iou_gate);

// Online IOU tracker: constant-velocity Kalman prediction, one global
// Hungarian pass per frame, no appearance features.
class Tracker {
 public:
  explicit Tracker(TrackerParams params = {});

  // Throws OutOfOrderFrame unless frame is greater than the previous one.
  std::vector<TrackedBox> step(FrameIndex frame, std::span<const Detection> detections);

  std::span<const ActiveTrack> active() const noexcept { return active_; }
  const TrackerParams& params() const noexcept { return params_; }

 private:
  TrackerParams params_;
  KalmanModel model_;
  std::vector<ActiveTrack> active_;
  TrackId next_id_ = 1;
  long frames_seen_ = 0;
  FrameIndex last_frame_ = -1;
};

using FrameDetections = std::map<FrameIndex, std::vector<Detection>>;

FrameDetections group_by_frame(std::span<const Detection> detections);

// Steps a fresh tracker through the frames in order (each key of the map is
// one step, including frames with no detections).
std::vector<Track> run_tracker(const FrameDetections& frames, const TrackerParams& params = {});

}  // namespace headtrack
