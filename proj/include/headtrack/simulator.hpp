#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "headtrack/core.hpp"
#include "headtrack/io.hpp"

namespace headtrack {

struct Rect {
  double x, y, w, h;

  bool contains(Point p) const noexcept { return p.x >= x && p.x < x + w && p.y >= y && p.y < y + h; }
  Point middle() const noexcept { return {x + w / 2.0, y + h / 2.0}; }
  bool operator==(const Rect&) const = default;
};

struct StoreLayout {
  SequenceInfo info;
  Rect cashier;
  std::vector<Rect> aisles;
  Point entrance;

  // Throws InvariantError when a region leaves the frame.
  void validate() const;
};

// 1280x720 at 25 fps; a top-centered cashier region covering one sixth of
// the frame and four vertical aisle strips below it.
StoreLayout default_layout();

// "key = value" lines: width, height, frame_rate, frame_count,
// entrance = x,y, cashier = x,y,w,h and repeated aisle = x,y,w,h. Keys not
// given keep their defaults; any aisle line replaces the default aisles.
StoreLayout parse_layout(const std::string& text);
std::string format_layout(const StoreLayout& layout);

struct BehaviorProfile {
  ClassLabel label = ClassLabel::customer;
  double speed = 3.0;             // pixels per frame while walking
  double dwell_mean = 200.0;      // frames per stop
  double head_size_mean = 40.0;   // pixels
  double head_size_std = 4.0;
  double size_jitter = 0.02;      // per-frame log-scale std of box sides
  double position_noise = 1.0;    // per-frame center noise std, pixels
  double min_cashier_fraction = 0.7;             // staff only
  std::array<double, 2> lifetime{0.1, 0.6};      // error only, fraction of duration

  void validate() const;
};

BehaviorProfile default_profile(ClassLabel label);

// One agent's track over frames start_frame, start_frame + 1, ...
// customer: browses randomly ordered aisles with dwells, checks out in front
//           of the cashier, then leaves through the entrance;
// staff:    stays in the cashier region for at least min_cashier_fraction of
//           the duration with short excursions into the aisles;
// error:    a fixed point with sub-pixel jitter for part of the duration.
Track simulate_track(const BehaviorProfile& profile, const StoreLayout& layout, FrameIndex duration,
                     std::uint64_t seed, TrackId id = 1, FrameIndex start_frame = 1);

struct Population {
  std::vector<Track> tracks;
  std::vector<io::LabelRow> labels;
};

// counts = {customers, staff, errors}; ids are assigned in that order from 1.
Population simulate_population(const std::array<std::size_t, 3>& counts, const StoreLayout& layout,
                               FrameIndex duration, std::uint64_t seed);

struct SequenceParams {
  int n_agents = 5;
  FrameIndex duration = 1000;
  // Confine each agent to its own horizontal band so boxes never overlap.
  bool separate_lanes = false;
  double speed = 3.0;
  double head_size = 40.0;
  double position_noise = 1.0;

  void validate() const;
};

// Ground-truth tracks sharing one timeline: agents enter during the first
// third and leave during the last third, walking between random waypoints.
std::vector<Track> simulate_sequence(const SequenceParams& params, const StoreLayout& layout, std::uint64_t seed);

}  // namespace headtrack
