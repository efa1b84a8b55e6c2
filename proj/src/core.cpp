#include "headtrack/core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "headtrack/errors.hpp"

namespace headtrack {

BoundingBox::BoundingBox(double left, double top, double width, double height)
    : left_(left), top_(top), width_(width), height_(height) {
  if (!std::isfinite(left) || !std::isfinite(top) || !std::isfinite(width) ||
      !std::isfinite(height)) {
    throw InvariantError("bounding box has a non-finite field");
  }
  if (!(width > 0.0) || !(height > 0.0)) {
    throw InvariantError("bounding box has non-positive size (" + std::to_string(width) + " x " +
                         std::to_string(height) + ")");
  }
}

BoundingBox BoundingBox::from_corners(double x_min, double y_min, double x_max, double y_max) {
  return BoundingBox(x_min, y_min, x_max - x_min, y_max - y_min);
}

Detection::Detection(FrameIndex frame, BoundingBox box, double conf)
    : frame_index(frame), bbox(box), confidence(conf) {
  if (frame < 0) throw InvariantError("negative frame index");
  if (!(conf >= 0.0 && conf <= 1.0)) throw InvariantError("confidence outside [0,1]");
}

TrackedBox::TrackedBox(FrameIndex frame, TrackId id, BoundingBox box)
    : frame_index(frame), track_id(id), bbox(box) {
  if (frame < 0) throw InvariantError("negative frame index");
  if (id < 1) throw InvariantError("track id must be >= 1, got " + std::to_string(id));
}

Track::Track(TrackId id, std::vector<TrackedBox> points) : id_(id), points_(std::move(points)) {
  if (id < 1) throw InvariantError("track id must be >= 1");
  if (points_.empty()) throw InvariantError("track " + std::to_string(id) + " has no points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].track_id != id) {
      throw InvariantError("track " + std::to_string(id) + " contains a point with id " +
                           std::to_string(points_[i].track_id));
    }
    if (i > 0 && points_[i].frame_index <= points_[i - 1].frame_index) {
      throw InvariantError("track " + std::to_string(id) + " frames not strictly increasing at frame " +
                           std::to_string(points_[i].frame_index));
    }
  }
}

void SequenceInfo::validate() const {
  if (frame_width <= 0 || frame_height <= 0 || frame_count <= 0 || !(frame_rate > 0.0)) {
    throw InvariantError("sequence info fields must be positive");
  }
}

ClassLabel to_label(int value) {
  if (value < 0 || value >= kNumClasses) {
    throw InvariantError("class label must be 0, 1 or 2, got " + std::to_string(value));
  }
  return static_cast<ClassLabel>(value);
}

const char* label_name(ClassLabel label) noexcept {
  switch (label) {
    case ClassLabel::customer: return "customer";
    case ClassLabel::staff: return "staff";
    case ClassLabel::error: return "error";
  }
  return "?";
}

double iou(const BoundingBox& a, const BoundingBox& b) noexcept {
  const double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
  const double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  if (a == b) return 1.0;
  return inter / (a.area() + b.area() - inter);
}

Point center(const BoundingBox& b) noexcept {
  return {b.left() + b.width() / 2.0, b.top() + b.height() / 2.0};
}

double path_length(const Track& track) noexcept {
  double total = 0.0;
  const auto pts = track.points();
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const Point p = center(pts[i - 1].bbox);
    const Point q = center(pts[i].bbox);
    total += std::hypot(q.x - p.x, q.y - p.y);
  }
  return total;
}

std::vector<Track> group_into_tracks(std::vector<TrackedBox> boxes) {
  std::map<TrackId, std::vector<TrackedBox>> by_id;
  for (auto& b : boxes) by_id[b.track_id].push_back(b);
  std::vector<Track> tracks;
  tracks.reserve(by_id.size());
  for (auto& [id, pts] : by_id) {
    std::stable_sort(pts.begin(), pts.end(),
                     [](const TrackedBox& x, const TrackedBox& y) { return x.frame_index < y.frame_index; });
    for (std::size_t i = 1; i < pts.size(); ++i) {
      if (pts[i].frame_index == pts[i - 1].frame_index) {
        throw InvariantError("duplicate box for track " + std::to_string(id) + " at frame " +
                             std::to_string(pts[i].frame_index));
      }
    }
    tracks.emplace_back(id, std::move(pts));
  }
  return tracks;
}

std::vector<TrackedBox> flatten(std::span<const Track> tracks) {
  std::vector<TrackedBox> out;
  out.reserve(total_boxes(tracks));
  for (const auto& t : tracks) out.insert(out.end(), t.points().begin(), t.points().end());
  std::stable_sort(out.begin(), out.end(), [](const TrackedBox& a, const TrackedBox& b) {
    return a.frame_index != b.frame_index ? a.frame_index < b.frame_index : a.track_id < b.track_id;
  });
  return out;
}

std::size_t total_boxes(std::span<const Track> tracks) noexcept {
  std::size_t n = 0;
  for (const auto& t : tracks) n += t.size();
  return n;
}

}  // namespace headtrack
