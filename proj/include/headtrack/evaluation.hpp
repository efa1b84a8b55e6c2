#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "headtrack/core.hpp"

namespace headtrack {

struct MotCounts {
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t idsw = 0;
  std::uint64_t gt = 0;

  bool operator==(const MotCounts&) const = default;
};

struct MotaReport {
  MotCounts counts;
  double mota = 1.0;
};

// 1 - (fn + fp + idsw) / gt. Throws EmptyGroundTruth when gt == 0.
double mota(const MotCounts& counts);

// CLEAR-MOT counting. Per frame: correspondences from earlier frames are
// kept while their IOU stays >= match_iou; the rest are matched by a
// Hungarian pass that maximizes the number of gated pairs, then total IOU.
// An identity switch is counted when a ground-truth object is matched to a
// hypothesis other than the last one it was ever matched to.
MotaReport evaluate(std::span<const Track> gt, std::span<const Track> hyp, double match_iou = 0.5);

struct SweepPoint {
  double p;
  MotaReport report;
};

// Evaluates each (p, hypothesis) pair and returns the points ordered by p.
std::vector<SweepPoint> evaluate_sweep_points(std::span<const Track> gt,
                                              const std::vector<std::pair<double, std::vector<Track>>>& hyps,
                                              double match_iou = 0.5);

// "p,fp,fn,idsw,gt,mota" header plus one row per point.
std::string format_sweep_points(std::span<const SweepPoint> points);

}  // namespace headtrack
