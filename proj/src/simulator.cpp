#include "headtrack/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "headtrack/errors.hpp"
#include "headtrack/experiments.hpp"

namespace headtrack {
namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

Point random_point(Rng& rng, const Rect& r, double margin = 0.0) {
  const double m = std::min({margin, r.w / 2.0, r.h / 2.0});
  return {uniform(rng, r.x + m, r.x + r.w - m), uniform(rng, r.y + m, r.y + r.h - m)};
}

double distance(Point a, Point b) { return std::hypot(b.x - a.x, b.y - a.y); }

// Agent positions, one per frame.
class Path {
 public:
  explicit Path(Point start) : pos_(start) {}

  Point position() const noexcept { return pos_; }
  std::size_t frames() const noexcept { return points_.size(); }
  const std::vector<Point>& points() const noexcept { return points_; }

  // Moves at constant speed, one position per frame, ending on target.
  void walk_to(Point target, double speed) {
    const double d = distance(pos_, target);
    const auto steps = static_cast<std::size_t>(std::ceil(d / speed));
    const Point from = pos_;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(steps);
      points_.push_back({from.x + t * (target.x - from.x), from.y + t * (target.y - from.y)});
    }
    pos_ = target;
  }

  void stay(std::size_t n) { points_.insert(points_.end(), n, pos_); }

 private:
  Point pos_;
  std::vector<Point> points_;
};

std::size_t walk_frames(Point a, Point b, double speed) {
  return static_cast<std::size_t>(std::ceil(distance(a, b) / speed));
}

std::size_t dwell_frames(Rng& rng, double mean) {
  std::exponential_distribution<double> e(1.0 / mean);
  return static_cast<std::size_t>(std::clamp(e(rng), mean / 4.0, mean * 3.0));
}

std::vector<Point> customer_path(const BehaviorProfile& p, const StoreLayout& layout, std::size_t duration, Rng& rng) {
  Path path(layout.entrance);
  const Rect& c = layout.cashier;
  const Rect checkout_area{c.x, c.y + c.h + 5.0, c.w, 30.0};
  const std::size_t checkout_dwell = static_cast<std::size_t>(p.dwell_mean / 2.0);
  auto checkout_cost = [&](Point from, Point checkout) {
    return walk_frames(from, checkout, p.speed) + checkout_dwell + walk_frames(checkout, layout.entrance, p.speed);
  };

  std::vector<std::size_t> order(layout.aisles.size());
  std::size_t next = order.size();
  while (!order.empty()) {
    if (next == order.size()) {
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::shuffle(order.begin(), order.end(), rng);
      next = 0;
    }
    const Point stop = random_point(rng, layout.aisles[order[next++]], 10.0);
    const std::size_t dwell = dwell_frames(rng, p.dwell_mean);
    const Point checkout = checkout_area.middle();
    const std::size_t needed = path.frames() + walk_frames(path.position(), stop, p.speed) + dwell +
                               checkout_cost(stop, checkout);
    if (path.frames() > 0 && needed > duration) break;
    path.walk_to(stop, p.speed);
    path.stay(dwell);
  }
  path.walk_to(random_point(rng, checkout_area), p.speed);
  path.stay(checkout_dwell);
  path.walk_to(layout.entrance, p.speed);
  return path.points();
}

std::vector<Point> staff_path(const BehaviorProfile& p, const StoreLayout& layout, std::size_t duration, Rng& rng) {
  const Rect& c = layout.cashier;
  Path path(random_point(rng, c, 25.0));
  const double outside_share = std::max(0.0, 1.0 - p.min_cashier_fraction - 0.1);
  auto budget = static_cast<std::size_t>(outside_share * static_cast<double>(duration));
  const double cashier_speed = p.speed / 2.0;
  while (path.frames() < duration) {
    if (!layout.aisles.empty() && std::bernoulli_distribution(0.25)(rng)) {
      const Point stop = random_point(rng, layout.aisles[std::uniform_int_distribution<std::size_t>(
                                                 0, layout.aisles.size() - 1)(rng)],
                                      10.0);
      const Point back = random_point(rng, c, 25.0);
      const std::size_t pause = 40;
      const std::size_t cost =
          walk_frames(path.position(), stop, p.speed) + pause + walk_frames(stop, back, p.speed) + 2;
      if (cost <= budget) {
        const std::size_t before = path.frames();
        path.walk_to(stop, p.speed);
        path.stay(pause);
        path.walk_to(back, p.speed);
        std::size_t outside = 0;
        for (std::size_t k = before; k < path.frames(); ++k)
          if (!c.contains(path.points()[k])) ++outside;
        budget -= std::min(budget, outside);
        continue;
      }
    }
    path.walk_to(random_point(rng, c, 25.0), cashier_speed);
    path.stay(dwell_frames(rng, p.dwell_mean / 2.0));
  }
  return path.points();
}

std::vector<Point> error_path(const BehaviorProfile& p, const StoreLayout& layout, std::size_t duration, Rng& rng) {
  const auto& info = layout.info;
  const Rect frame{0, 0, static_cast<double>(info.frame_width), static_cast<double>(info.frame_height)};
  const Point spot = random_point(rng, frame, p.head_size_mean);
  const double frac = uniform(rng, p.lifetime[0], p.lifetime[1]);
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(frac * static_cast<double>(duration))));
  return std::vector<Point>(n, spot);
}

// Samples head boxes around the agent positions, kept inside the frame.
std::vector<TrackedBox> to_boxes(const std::vector<Point>& positions, double head_size, double size_jitter,
                                 double noise, const SequenceInfo& info, TrackId id, FrameIndex start, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  std::vector<TrackedBox> boxes;
  boxes.reserve(positions.size());
  const double fw = info.frame_width, fh = info.frame_height;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    double w = head_size, h = head_size;
    if (size_jitter > 0.0) {
      w *= std::exp(size_jitter * unit(rng));
      h *= std::exp(size_jitter * unit(rng));
    }
    w = std::min(w, fw);
    h = std::min(h, fh);
    double cx = positions[k].x, cy = positions[k].y;
    if (noise > 0.0) {
      cx += noise * unit(rng);
      cy += noise * unit(rng);
    }
    cx = std::clamp(cx, w / 2.0, fw - w / 2.0);
    cy = std::clamp(cy, h / 2.0, fh - h / 2.0);
    boxes.emplace_back(start + static_cast<FrameIndex>(k), id, BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h));
  }
  return boxes;
}

Rect parse_rect(const std::string& value, std::size_t line) {
  const auto f = io::split_fields(value);
  if (f.size() != 4) throw FormatError("expected x,y,w,h", line);
  try {
    return {std::stod(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
  } catch (const std::exception&) {
    throw FormatError("bad rectangle '" + value + "'", line);
  }
}

bool inside_frame(const Rect& r, const SequenceInfo& info) {
  return r.w > 0 && r.h > 0 && r.x >= 0 && r.y >= 0 && r.x + r.w <= info.frame_width &&
         r.y + r.h <= info.frame_height;
}

}  // namespace

void StoreLayout::validate() const {
  info.validate();
  if (!inside_frame(cashier, info)) throw InvariantError("cashier region outside the frame");
  for (const auto& a : aisles)
    if (!inside_frame(a, info)) throw InvariantError("aisle region outside the frame");
  if (!(entrance.x >= 0 && entrance.y >= 0 && entrance.x <= info.frame_width && entrance.y <= info.frame_height)) {
    throw InvariantError("entrance outside the frame");
  }
}

StoreLayout default_layout() {
  StoreLayout l;
  l.info = SequenceInfo{1280, 720, 3000, 25.0};
  l.cashier = {320, 0, 640, 240};
  l.aisles = {{100, 300, 100, 400}, {420, 300, 100, 400}, {760, 300, 100, 400}, {1080, 300, 100, 400}};
  l.entrance = {60, 680};
  return l;
}

StoreLayout parse_layout(const std::string& text) {
  StoreLayout l = default_layout();
  bool aisles_given = false;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const auto eq = raw.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    if (trim(raw).empty()) continue;
    if (eq == std::string::npos) throw FormatError("expected 'key = value'", line);
    const std::string key = trim(raw.substr(0, eq));
    const std::string value = trim(raw.substr(eq + 1));
    try {
      if (key == "width") {
        l.info.frame_width = std::stoi(value);
      } else if (key == "height") {
        l.info.frame_height = std::stoi(value);
      } else if (key == "frame_rate") {
        l.info.frame_rate = std::stod(value);
      } else if (key == "frame_count") {
        l.info.frame_count = std::stoll(value);
      } else if (key == "entrance") {
        const auto f = io::split_fields(value);
        if (f.size() != 2) throw FormatError("expected x,y", line);
        l.entrance = {std::stod(f[0]), std::stod(f[1])};
      } else if (key == "cashier") {
        l.cashier = parse_rect(value, line);
      } else if (key == "aisle") {
        if (!aisles_given) l.aisles.clear();
        aisles_given = true;
        l.aisles.push_back(parse_rect(value, line));
      } else {
        throw FormatError("unknown key '" + key + "'", line);
      }
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError("bad value for '" + key + "'", line);
    }
  }
  l.validate();
  return l;
}

std::string format_layout(const StoreLayout& l) {
  auto rect = [](const Rect& r) {
    return io::format_g6(r.x) + "," + io::format_g6(r.y) + "," + io::format_g6(r.w) + "," + io::format_g6(r.h);
  };
  std::string out = "width = " + std::to_string(l.info.frame_width) + "\nheight = " +
                    std::to_string(l.info.frame_height) + "\nframe_rate = " + io::format_g6(l.info.frame_rate) +
                    "\nframe_count = " + std::to_string(l.info.frame_count) + "\nentrance = " +
                    io::format_g6(l.entrance.x) + "," + io::format_g6(l.entrance.y) + "\ncashier = " +
                    rect(l.cashier) + "\n";
  for (const auto& a : l.aisles) out += "aisle = " + rect(a) + "\n";
  return out;
}

void BehaviorProfile::validate() const {
  if (!(speed > 0.0)) throw InvariantError("speed must be positive");
  if (!(dwell_mean > 0.0)) throw InvariantError("dwell mean must be positive");
  if (!(head_size_mean > 0.0) || !(head_size_std >= 0.0)) throw InvariantError("head size must be positive");
  if (!(size_jitter >= 0.0) || !(position_noise >= 0.0)) throw InvariantError("noise must be >= 0");
  if (!(min_cashier_fraction >= 0.0 && min_cashier_fraction <= 1.0)) throw InvariantError("bad cashier fraction");
  if (!(lifetime[0] > 0.0 && lifetime[0] <= lifetime[1] && lifetime[1] <= 1.0)) throw InvariantError("bad lifetime");
}

BehaviorProfile default_profile(ClassLabel label) {
  BehaviorProfile p;
  p.label = label;
  switch (label) {
    case ClassLabel::customer:
      break;
    case ClassLabel::staff:
      p.dwell_mean = 200.0;
      break;
    case ClassLabel::error:
      p.speed = 1.0;
      p.size_jitter = 0.0;
      p.position_noise = 0.002;
      break;
  }
  return p;
}

Track simulate_track(const BehaviorProfile& profile, const StoreLayout& layout, FrameIndex duration,
                     std::uint64_t seed, TrackId id, FrameIndex start_frame) {
  profile.validate();
  layout.validate();
  if (duration < 1) throw InvariantError("duration must be >= 1");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(duration);
  std::vector<Point> positions;
  switch (profile.label) {
    case ClassLabel::customer: positions = customer_path(profile, layout, n, rng); break;
    case ClassLabel::staff: positions = staff_path(profile, layout, n, rng); break;
    case ClassLabel::error: positions = error_path(profile, layout, n, rng); break;
  }
  if (positions.size() > n) positions.resize(n);
  if (positions.empty()) positions.push_back(layout.entrance);
  const double head =
      std::max(8.0, std::normal_distribution<double>(profile.head_size_mean, profile.head_size_std)(rng));
  return Track(id, to_boxes(positions, head, profile.size_jitter, profile.position_noise, layout.info, id,
                            start_frame, rng));
}

Population simulate_population(const std::array<std::size_t, 3>& counts, const StoreLayout& layout,
                               FrameIndex duration, std::uint64_t seed) {
  Population pop;
  TrackId id = 1;
  for (int k = 0; k < kNumClasses; ++k) {
    const auto label = static_cast<ClassLabel>(k);
    const auto profile = default_profile(label);
    for (std::size_t i = 0; i < counts[static_cast<std::size_t>(k)]; ++i, ++id) {
      pop.tracks.push_back(simulate_track(profile, layout, duration, mix_seed(seed, static_cast<std::uint64_t>(id)), id));
      pop.labels.push_back({id, label});
    }
  }
  return pop;
}

void SequenceParams::validate() const {
  if (n_agents < 1) throw InvariantError("need at least one agent");
  if (duration < 1) throw InvariantError("duration must be >= 1");
  if (!(speed > 0.0) || !(head_size > 0.0) || !(position_noise >= 0.0)) throw InvariantError("bad motion parameters");
}

std::vector<Track> simulate_sequence(const SequenceParams& params, const StoreLayout& layout, std::uint64_t seed) {
  params.validate();
  layout.validate();
  const auto& info = layout.info;
  const double fw = info.frame_width, fh = info.frame_height;
  std::vector<Track> tracks;
  for (int a = 0; a < params.n_agents; ++a) {
    const TrackId id = a + 1;
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(id)));
    Rect region{0, 0, fw, fh};
    if (params.separate_lanes) {
      const double lane = fh / params.n_agents;
      region = {0, a * lane, fw, lane};
    }
    const double margin = params.head_size / 2.0 + 3.0 * params.position_noise + 1.0;
    FrameIndex enter = 1, leave = params.duration;
    if (params.n_agents > 1 && params.duration >= 3) {
      enter = std::uniform_int_distribution<FrameIndex>(1, std::max<FrameIndex>(1, params.duration / 3))(rng);
      leave = std::uniform_int_distribution<FrameIndex>(2 * params.duration / 3 + 1, params.duration)(rng);
    }
    const auto n = static_cast<std::size_t>(leave - enter + 1);
    Path path(random_point(rng, region, margin));
    while (path.frames() < n) {
      path.walk_to(random_point(rng, region, margin), params.speed);
      if (std::bernoulli_distribution(0.3)(rng)) path.stay(dwell_frames(rng, 20.0));
    }
    auto positions = path.points();
    positions.resize(n);
    tracks.emplace_back(id, to_boxes(positions, params.head_size, 0.0, params.position_noise, info, id, enter, rng));
  }
  return tracks;
}

}  // namespace headtrack
