#include "headtrack/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "headtrack/errors.hpp"

namespace headtrack {

Heatmap::Heatmap(int width, int height) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw InvariantError("heatmap dimensions must be positive");
  cells_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);
}

std::uint64_t Heatmap::mass() const noexcept {
  return std::accumulate(cells_.begin(), cells_.end(), std::uint64_t{0});
}

Heatmap::Cell Heatmap::max_cell() const noexcept { return *std::max_element(cells_.begin(), cells_.end()); }

std::size_t Heatmap::nonzero_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](Cell c) { return c != 0; }));
}

void Heatmap::clear() noexcept { std::fill(cells_.begin(), cells_.end(), Cell{0}); }

Heatmap& Heatmap::operator+=(const Heatmap& other) {
  if (other.width_ != width_ || other.height_ != height_) throw InvariantError("heatmap size mismatch");
  for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
  return *this;
}

RadiusRule parse_radius_rule(const std::string& name) {
  if (name == "mean-half-extent") return RadiusRule::mean_half_extent;
  if (name == "inscribed") return RadiusRule::inscribed;
  if (name == "circumscribed") return RadiusRule::circumscribed;
  throw InvariantError("unknown radius rule '" + name + "'");
}

const char* radius_rule_name(RadiusRule rule) noexcept {
  switch (rule) {
    case RadiusRule::mean_half_extent: return "mean-half-extent";
    case RadiusRule::inscribed: return "inscribed";
    case RadiusRule::circumscribed: return "circumscribed";
  }
  return "?";
}

double head_radius(const BoundingBox& box, RadiusRule rule) noexcept {
  switch (rule) {
    case RadiusRule::mean_half_extent: return (box.width() + box.height()) / 4.0;
    case RadiusRule::inscribed: return std::min(box.width(), box.height()) / 2.0;
    case RadiusRule::circumscribed: return std::hypot(box.width(), box.height()) / 2.0;
  }
  return 0.0;
}

std::uint64_t stamp_disk(Heatmap& heatmap, Point c, double r) {
  const double r2 = r * r;
  const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - r)));
  const int y1 = std::min(heatmap.height() - 1, static_cast<int>(std::floor(c.y + r)));
  std::uint64_t touched = 0;
  for (int y = y0; y <= y1; ++y) {
    const double dy = y - c.y;
    const double rem = r2 - dy * dy;
    if (rem < 0.0) continue;
    const double half = std::sqrt(rem);
    int x0 = std::max(0, static_cast<int>(std::ceil(c.x - half)));
    int x1 = std::min(heatmap.width() - 1, static_cast<int>(std::floor(c.x + half)));
    // sqrt rounding can misplace the span ends by one; settle them on the
    // exact predicate.
    auto inside = [&](int x) { const double dx = x - c.x; return dx * dx + dy * dy <= r2; };
    while (x0 > 0 && inside(x0 - 1)) --x0;
    while (x0 <= x1 && !inside(x0)) ++x0;
    while (x1 < heatmap.width() - 1 && inside(x1 + 1)) ++x1;
    while (x1 >= x0 && !inside(x1)) --x1;
    for (int x = x0; x <= x1; ++x) ++heatmap.at(x, y);
    if (x1 >= x0) touched += static_cast<std::uint64_t>(x1 - x0 + 1);
  }
  return touched;
}

void accumulate_track(Heatmap& heatmap, const Track& track, RadiusRule rule) {
  for (const auto& p : track.points()) stamp_disk(heatmap, center(p.bbox), head_radius(p.bbox, rule));
}

Heatmap rasterize_track(const Track& track, const SequenceInfo& info, RadiusRule rule) {
  Heatmap h(info.frame_width, info.frame_height);
  accumulate_track(h, track, rule);
  return h;
}

RasterizedTracks rasterize_all(std::span<const Track> tracks, const SequenceInfo& info, RadiusRule rule) {
  RasterizedTracks out{{}, Heatmap(info.frame_width, info.frame_height)};
  for (const auto& t : tracks) {
    auto h = rasterize_track(t, info, rule);
    out.aggregate += h;
    out.per_track.insert_or_assign(t.id(), std::move(h));
  }
  return out;
}

void FilterParams::validate() const {
  if (min_frames < 1) throw InvariantError("min_frames must be >= 1");
  if (!(min_distance_factor > 0.0)) throw InvariantError("min_distance_factor must be > 0");
}

std::vector<Track> filter_tracks(std::span<const Track> tracks, const FilterParams& params, const SequenceInfo& info) {
  params.validate();
  const double min_distance = params.min_distance_factor * info.frame_width;
  std::vector<Track> kept;
  for (const auto& t : tracks) {
    if (t.size() >= params.min_frames && path_length(t) >= min_distance) kept.push_back(t);
  }
  return kept;
}

std::vector<std::pair<std::int64_t, std::uint64_t>> hourly_histogram(std::span<const FrameIndex> frames,
                                                                     double frame_rate) {
  if (!(frame_rate > 0.0)) throw InvariantError("frame rate must be positive");
  const double per_hour = frame_rate * 3600.0;
  std::vector<std::pair<std::int64_t, std::uint64_t>> rows;
  for (const auto f : frames) {
    const auto hour = static_cast<std::int64_t>(std::floor(static_cast<double>(f) / per_hour));
    if (hour < 0) throw InvariantError("negative frame index");
    while (static_cast<std::int64_t>(rows.size()) <= hour) rows.emplace_back(static_cast<std::int64_t>(rows.size()), 0);
    ++rows[static_cast<std::size_t>(hour)].second;
  }
  return rows;
}

std::vector<std::pair<std::int64_t, std::uint64_t>> hourly_histogram(std::span<const Track> tracks, HistogramMode mode,
                                                                     double frame_rate) {
  std::vector<FrameIndex> frames;
  for (const auto& t : tracks) {
    if (mode == HistogramMode::track_starts) {
      frames.push_back(t.first_frame());
    } else {
      for (const auto& p : t.points()) frames.push_back(p.frame_index);
    }
  }
  return hourly_histogram(frames, frame_rate);
}

std::string format_histogram_csv(const std::vector<std::pair<std::int64_t, std::uint64_t>>& rows) {
  std::string out = "hour,count\n";
  for (const auto& [hour, count] : rows) out += std::to_string(hour) + "," + std::to_string(count) + "\n";
  return out;
}

}  // namespace headtrack
