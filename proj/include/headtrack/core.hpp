#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace headtrack {

using FrameIndex = std::int64_t;
using TrackId = std::int64_t;

// Axis-aligned box in continuous pixel coordinates, stored as
// (left, top, width, height). The region is treated as half-open.
class BoundingBox {
 public:
  // Throws InvariantError on non-finite fields or non-positive size.
  BoundingBox(double left, double top, double width, double height);

  static BoundingBox from_corners(double x_min, double y_min, double x_max, double y_max);

  double left() const noexcept { return left_; }
  double top() const noexcept { return top_; }
  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }
  double right() const noexcept { return left_ + width_; }
  double bottom() const noexcept { return top_ + height_; }
  double area() const noexcept { return width_ * height_; }

  bool operator==(const BoundingBox&) const = default;

 private:
  double left_;
  double top_;
  double width_;
  double height_;
};

struct Point {
  double x;
  double y;
  bool operator==(const Point&) const = default;
};

struct Detection {
  FrameIndex frame_index;
  BoundingBox bbox;
  double confidence = 1.0;

  // Throws InvariantError on a negative frame or confidence outside [0,1].
  Detection(FrameIndex frame, BoundingBox box, double conf = 1.0);
  bool operator==(const Detection&) const = default;
};

struct TrackedBox {
  FrameIndex frame_index;
  TrackId track_id;
  BoundingBox bbox;

  TrackedBox(FrameIndex frame, TrackId id, BoundingBox box);
  bool operator==(const TrackedBox&) const = default;
};

// One identity's boxes ordered by strictly increasing frame.
class Track {
 public:
  // Throws InvariantError if points is empty, frames are not strictly
  // increasing, or any point carries a different id.
  Track(TrackId id, std::vector<TrackedBox> points);

  TrackId id() const noexcept { return id_; }
  std::span<const TrackedBox> points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  FrameIndex first_frame() const noexcept { return points_.front().frame_index; }
  FrameIndex last_frame() const noexcept { return points_.back().frame_index; }

  bool operator==(const Track&) const = default;

 private:
  TrackId id_;
  std::vector<TrackedBox> points_;
};

struct SequenceInfo {
  int frame_width = 1280;
  int frame_height = 720;
  FrameIndex frame_count = 1;
  double frame_rate = 25.0;

  void validate() const;
};

enum class ClassLabel : int { customer = 0, staff = 1, error = 2 };

inline constexpr int kNumClasses = 3;

// Throws InvariantError unless value is 0, 1 or 2.
ClassLabel to_label(int value);
const char* label_name(ClassLabel label) noexcept;

double iou(const BoundingBox& a, const BoundingBox& b) noexcept;
Point center(const BoundingBox& b) noexcept;
double path_length(const Track& track) noexcept;

// Groups boxes by track id into Tracks ordered by id; each track's points
// are sorted by frame. Throws InvariantError on duplicate (frame, id).
std::vector<Track> group_into_tracks(std::vector<TrackedBox> boxes);

// Flattens tracks into boxes ordered by (frame, id).
std::vector<TrackedBox> flatten(std::span<const Track> tracks);

std::size_t total_boxes(std::span<const Track> tracks) noexcept;

}  // namespace headtrack
