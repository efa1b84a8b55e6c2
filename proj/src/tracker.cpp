#include "headtrack/tracker.hpp"

#include <algorithm>

#include "headtrack/errors.hpp"

namespace headtrack {

void TrackerParams::validate() const {
  if (!(iou_gate > 0.0 && iou_gate <= 1.0)) throw InvariantError("iou_gate must be in (0,1]");
  if (max_age < 1) throw InvariantError("max_age must be >= 1");
  if (min_hits < 1) throw InvariantError("min_hits must be >= 1");
}

AssociationResult associate(std::span<const BoundingBox> tracks, std::span<const BoundingBox> detections,
                            double iou_gate) {
  AssociationResult result;
  if (tracks.empty() || detections.empty()) {
    for (std::size_t i = 0; i < tracks.size(); ++i) result.unmatched_tracks.push_back(i);
    for (std::size_t j = 0; j < detections.size(); ++j) result.unmatched_detections.push_back(j);
    return result;
  }
  Eigen::MatrixXd overlap(static_cast<Eigen::Index>(tracks.size()), static_cast<Eigen::Index>(detections.size()));
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (std::size_t j = 0; j < detections.size(); ++j) {
      overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(tracks[i], detections[j]);
    }
  }
  const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(overlap.rows(), overlap.cols()) - overlap;
  std::vector<char> track_matched(tracks.size(), 0), det_matched(detections.size(), 0);
  for (const auto& [i, j] : solve_assignment(cost)) {
    if (overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) < iou_gate) continue;
    result.matches.emplace_back(i, j);
    track_matched[i] = det_matched[j] = 1;
  }
  for (std::size_t i = 0; i < tracks.size(); ++i)
    if (!track_matched[i]) result.unmatched_tracks.push_back(i);
  for (std::size_t j = 0; j < detections.size(); ++j)
    if (!det_matched[j]) result.unmatched_detections.push_back(j);
  return result;
}

Tracker::Tracker(TrackerParams params) : params_(params), model_(params.noise) { params_.validate(); }

std::vector<TrackedBox> Tracker::step(FrameIndex frame, std::span<const Detection> detections) {
  if (frame <= last_frame_) {
    throw OutOfOrderFrame("frame " + std::to_string(frame) + " does not follow frame " + std::to_string(last_frame_));
  }
  const FrameIndex advance = (params_.predict_per_gap && last_frame_ >= 0) ? frame - last_frame_ : 1;
  last_frame_ = frame;
  ++frames_seen_;

  std::vector<BoundingBox> predicted;
  predicted.reserve(active_.size());
  for (auto& t : active_) {
    for (FrameIndex k = 0; k < advance; ++k) t.state = model_.predict(t.state);
    ++t.age;
    ++t.time_since_update;
    predicted.push_back(state_to_bbox(t.state));
  }

  std::vector<BoundingBox> boxes;
  boxes.reserve(detections.size());
  for (const auto& d : detections) boxes.push_back(d.bbox);

  const auto assoc = associate(predicted, boxes, params_.iou_gate);
  for (const auto& [ti, di] : assoc.matches) {
    auto& t = active_[ti];
    t.state = model_.update(t.state, bbox_to_measurement(boxes[di]));
    t.time_since_update = 0;
    ++t.hits;
  }
  for (const auto di : assoc.unmatched_detections) {
    active_.push_back({next_id_++, model_.initiate(bbox_to_measurement(boxes[di])), 1, 0, 0});
  }

  std::vector<TrackedBox> emitted;
  const bool warmup = frames_seen_ <= params_.min_hits;
  for (const auto& t : active_) {
    if (t.time_since_update == 0 && (t.hits >= params_.min_hits || warmup)) {
      emitted.emplace_back(frame, t.track_id, state_to_bbox(t.state));
    }
  }
  std::erase_if(active_, [&](const ActiveTrack& t) { return t.time_since_update > params_.max_age; });
  return emitted;
}

FrameDetections group_by_frame(std::span<const Detection> detections) {
  FrameDetections frames;
  for (const auto& d : detections) frames[d.frame_index].push_back(d);
  return frames;
}

std::vector<Track> run_tracker(const FrameDetections& frames, const TrackerParams& params) {
  Tracker tracker(params);
  std::vector<TrackedBox> all;
  for (const auto& [frame, dets] : frames) {
    auto out = tracker.step(frame, dets);
    all.insert(all.end(), out.begin(), out.end());
  }
  return group_into_tracks(std::move(all));
}

}  // namespace headtrack
