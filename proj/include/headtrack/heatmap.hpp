#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "headtrack/core.hpp"

namespace headtrack {

// Per-pixel exposure counts in frames, row-major, sized to the video frame.
class Heatmap {
 public:
  using Cell = std::uint32_t;

  Heatmap(int width, int height);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  Cell at(int x, int y) const noexcept { return cells_[index(x, y)]; }
  Cell& at(int x, int y) noexcept { return cells_[index(x, y)]; }
  std::span<const Cell> cells() const noexcept { return cells_; }

  std::uint64_t mass() const noexcept;
  Cell max_cell() const noexcept;
  std::size_t nonzero_count() const noexcept;
  void clear() noexcept;

  // Throws InvariantError on a size mismatch.
  Heatmap& operator+=(const Heatmap& other);
  bool operator==(const Heatmap&) const = default;

 private:
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<Cell> cells_;
};

enum class RadiusRule {
  mean_half_extent,  // (w + h) / 4
  inscribed,         // min(w, h) / 2
  circumscribed,     // sqrt(w^2 + h^2) / 2
};

RadiusRule parse_radius_rule(const std::string& name);
const char* radius_rule_name(RadiusRule rule) noexcept;
double head_radius(const BoundingBox& box, RadiusRule rule) noexcept;

// Adds +1 to every pixel (integer coordinates) inside the closed disk of
// radius r around (cx, cy), clipped to the grid. Returns the pixels touched.
std::uint64_t stamp_disk(Heatmap& heatmap, Point c, double r);

// Accumulates the track into an existing heatmap of the frame size.
void accumulate_track(Heatmap& heatmap, const Track& track,
                      RadiusRule rule = RadiusRule::mean_half_extent);
Heatmap rasterize_track(const Track& track, const SequenceInfo& info,
                        RadiusRule rule = RadiusRule::mean_half_extent);

struct RasterizedTracks {
  std::map<TrackId, Heatmap> per_track;
  Heatmap aggregate;
};

RasterizedTracks rasterize_all(std::span<const Track> tracks, const SequenceInfo& info,
                               RadiusRule rule = RadiusRule::mean_half_extent);

struct FilterParams {
  std::size_t min_frames = 2000;
  double min_distance_factor = 2.0;

  void validate() const;
};

// Keeps a track only when it is long in frames AND in distance covered
// (path length >= factor * frame width).
std::vector<Track> filter_tracks(std::span<const Track> tracks, const FilterParams& params,
                                 const SequenceInfo& info);

enum class HistogramMode { boxes, track_starts };

// Count per hour for hours 0..last nonempty bucket (empty input gives no rows).
std::vector<std::pair<std::int64_t, std::uint64_t>> hourly_histogram(std::span<const FrameIndex> frames,
                                                                     double frame_rate);
std::vector<std::pair<std::int64_t, std::uint64_t>> hourly_histogram(std::span<const Track> tracks,
                                                                     HistogramMode mode,
                                                                     double frame_rate);
std::string format_histogram_csv(const std::vector<std::pair<std::int64_t, std::uint64_t>>& rows);

}  // namespace headtrack
