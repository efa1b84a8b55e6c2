#include "headtrack/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "headtrack/assignment.hpp"
#include "headtrack/errors.hpp"
#include "headtrack/io.hpp"

namespace headtrack {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  // splitmix64 finalizer over a combination of both inputs
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ExperimentMode parse_mode(const std::string& name) {
  if (name == "detection") return ExperimentMode::detection_errors;
  if (name == "tracking") return ExperimentMode::tracking_errors;
  if (name == "compound") return ExperimentMode::compound;
  throw InvariantError("unknown experiment mode '" + name + "'");
}

const char* mode_name(ExperimentMode mode) noexcept {
  switch (mode) {
    case ExperimentMode::detection_errors: return "detection";
    case ExperimentMode::tracking_errors: return "tracking";
    case ExperimentMode::compound: return "compound";
  }
  return "?";
}

void PerturbParams::validate() const {
  if (!(center_jitter_std >= 0.0) || !(size_jitter_std >= 0.0)) throw InvariantError("jitter stds must be >= 0");
  if (!(miss_prob >= 0.0 && miss_prob <= 1.0)) throw InvariantError("miss_prob must be in [0,1]");
  if (!(fp_per_frame >= 0.0) || !std::isfinite(fp_per_frame)) throw InvariantError("fp_per_frame must be >= 0");
}

std::vector<FrameIndex> skip_frames(std::span<const FrameIndex> frames, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvariantError("skip probability must be in [0,1]");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FrameIndex> kept;
  kept.reserve(frames.size());
  for (const auto f : frames) {
    if (!(unit(rng) < p)) kept.push_back(f);
  }
  return kept;
}

std::vector<Track> restrict_to_frames(std::span<const Track> tracks, std::span<const FrameIndex> frames) {
  const std::set<FrameIndex> keep(frames.begin(), frames.end());
  std::vector<Track> out;
  for (const auto& t : tracks) {
    std::vector<TrackedBox> pts;
    for (const auto& p : t.points())
      if (keep.count(p.frame_index)) pts.push_back(p);
    if (!pts.empty()) out.emplace_back(t.id(), std::move(pts));
  }
  return out;
}

FrameDetections strip_ids(std::span<const Track> tracks, std::span<const FrameIndex> frames) {
  FrameDetections out;
  for (const auto f : frames) out[f];
  for (const auto& b : flatten(tracks)) {
    const auto it = out.find(b.frame_index);
    if (it != out.end()) it->second.emplace_back(b.frame_index, b.bbox, 1.0);
  }
  return out;
}

FrameDetections perturb_detections(const FrameDetections& gt, const PerturbParams& params, const SequenceInfo& info) {
  params.validate();
  info.validate();
  std::vector<std::pair<double, double>> sizes;
  for (const auto& [_, dets] : gt)
    for (const auto& d : dets) sizes.emplace_back(d.bbox.width(), d.bbox.height());

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FrameDetections out;
  for (const auto& [frame, dets] : gt) {
    auto& dst = out[frame];
    for (const auto& d : dets) {
      if (params.miss_prob > 0.0 && unit(rng) < params.miss_prob) continue;
      const Point c = center(d.bbox);
      double cx = c.x, cy = c.y, w = d.bbox.width(), h = d.bbox.height();
      if (params.center_jitter_std > 0.0) {
        std::normal_distribution<double> jitter(0.0, params.center_jitter_std);
        cx += jitter(rng);
        cy += jitter(rng);
      }
      if (params.size_jitter_std > 0.0) {
        std::normal_distribution<double> log_scale(0.0, params.size_jitter_std);
        w *= std::exp(log_scale(rng));
        h *= std::exp(log_scale(rng));
      }
      if (params.center_jitter_std > 0.0 || params.size_jitter_std > 0.0) {
        dst.emplace_back(frame, BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h), d.confidence);
      } else {
        dst.push_back(d);
      }
    }
    if (params.fp_per_frame > 0.0) {
      std::poisson_distribution<int> spurious(params.fp_per_frame);
      const int k = spurious(rng);
      for (int i = 0; i < k; ++i) {
        double w = info.frame_width / 20.0, h = info.frame_height / 20.0;
        if (!sizes.empty()) {
          std::uniform_int_distribution<std::size_t> pick(0, sizes.size() - 1);
          std::tie(w, h) = sizes[pick(rng)];
        }
        w = std::min(w, static_cast<double>(info.frame_width));
        h = std::min(h, static_cast<double>(info.frame_height));
        const double left = unit(rng) * (info.frame_width - w);
        const double top = unit(rng) * (info.frame_height - h);
        dst.emplace_back(frame, BoundingBox(left, top, w, h), 1.0);
      }
    }
  }
  return out;
}

std::vector<Track> assign_gt_ids(const FrameDetections& system, std::span<const Track> gt, double iou_gate) {
  if (!(iou_gate > 0.0 && iou_gate <= 1.0)) throw InvariantError("iou_gate must be in (0,1]");
  std::map<FrameIndex, std::vector<TrackedBox>> gt_frames;
  TrackId next_id = 1;
  for (const auto& b : flatten(gt)) {
    gt_frames[b.frame_index].push_back(b);
    next_id = std::max(next_id, b.track_id + 1);
  }
  std::vector<TrackedBox> out;
  for (const auto& [frame, dets] : system) {
    std::vector<char> assigned(dets.size(), 0);
    const auto git = gt_frames.find(frame);
    if (git != gt_frames.end() && !dets.empty()) {
      const auto& g = git->second;
      Eigen::MatrixXd overlap(static_cast<Eigen::Index>(dets.size()), static_cast<Eigen::Index>(g.size()));
      for (std::size_t i = 0; i < dets.size(); ++i)
        for (std::size_t j = 0; j < g.size(); ++j)
          overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = iou(dets[i].bbox, g[j].bbox);
      const Eigen::MatrixXd cost = Eigen::MatrixXd::Ones(overlap.rows(), overlap.cols()) - overlap;
      for (const auto& [i, j] : solve_assignment(cost)) {
        if (overlap(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) < iou_gate) continue;
        out.emplace_back(frame, g[j].track_id, dets[i].bbox);
        assigned[i] = 1;
      }
    }
    for (std::size_t i = 0; i < dets.size(); ++i)
      if (!assigned[i]) out.emplace_back(frame, next_id++, dets[i].bbox);
  }
  return group_into_tracks(std::move(out));
}

MotaReport run_mode(ExperimentMode mode, std::span<const Track> gt, const SequenceInfo& info, double p,
                    std::uint64_t seed, const ExperimentConfig& config) {
  info.validate();
  std::vector<FrameIndex> domain;
  domain.reserve(static_cast<std::size_t>(info.frame_count));
  for (FrameIndex f = 1; f <= info.frame_count; ++f) domain.push_back(f);
  const auto surviving = skip_frames(domain, p, seed);
  const auto gt_kept = restrict_to_frames(gt, surviving);
  const auto gt_boxes = strip_ids(gt_kept, surviving);

  auto perturbed = [&] {
    PerturbParams pp = config.perturb;
    pp.seed = mix_seed(seed, config.perturb.seed);
    return perturb_detections(gt_boxes, pp, info);
  };

  std::vector<Track> hyp;
  switch (mode) {
    case ExperimentMode::detection_errors:
      hyp = assign_gt_ids(perturbed(), gt_kept, config.assign_iou);
      break;
    case ExperimentMode::tracking_errors:
      hyp = run_tracker(gt_boxes, config.tracker);
      break;
    case ExperimentMode::compound:
      hyp = run_tracker(perturbed(), config.tracker);
      break;
  }
  return evaluate(gt_kept, hyp, config.match_iou);
}

std::vector<double> default_p_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 9; ++i) grid.push_back(i / 10.0);
  return grid;
}

SweepResult sweep(std::span<const ExperimentMode> modes, std::span<const Track> gt, const SequenceInfo& info,
                  std::span<const double> p_grid, int n_seeds, std::uint64_t base_seed, const ExperimentConfig& config,
                  int jobs) {
  if (n_seeds < 1) throw InvariantError("need at least one seed");
  for (const double p : p_grid)
    if (!(p >= 0.0 && p <= 1.0)) throw InvariantError("p values must be in [0,1]");
  std::vector<double> grid(p_grid.begin(), p_grid.end());
  std::sort(grid.begin(), grid.end());

  SweepResult result;
  for (const auto mode : modes)
    for (const double p : grid)
      for (int k = 0; k < n_seeds; ++k)
        result.rows.push_back({mode, p, base_seed + static_cast<std::uint64_t>(k), {}, 0.0});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < result.rows.size(); i = next++) {
      auto& row = result.rows[i];
      try {
        const auto report = run_mode(row.mode, gt, info, row.p, row.seed, config);
        row.counts = report.counts;
        row.mota = report.mota;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::max(1, jobs);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < result.rows.size(); i += static_cast<std::size_t>(n_seeds)) {
    SweepMean m{result.rows[i].mode, result.rows[i].p, 0, 0, 0, 0, 0};
    for (int k = 0; k < n_seeds; ++k) {
      const auto& r = result.rows[i + static_cast<std::size_t>(k)];
      m.fp += static_cast<double>(r.counts.fp);
      m.fn += static_cast<double>(r.counts.fn);
      m.idsw += static_cast<double>(r.counts.idsw);
      m.gt += static_cast<double>(r.counts.gt);
      m.mota += r.mota;
    }
    const double n = n_seeds;
    m.fp /= n;
    m.fn /= n;
    m.idsw /= n;
    m.gt /= n;
    m.mota /= n;
    result.means.push_back(m);
  }
  return result;
}

std::string format_sweep_csv(const SweepResult& result) {
  std::string out = "mode,p,seed,fp,fn,idsw,gt,mota\n";
  const std::size_t per = result.means.empty() ? 0 : result.rows.size() / result.means.size();
  for (std::size_t m = 0; m < result.means.size(); ++m) {
    for (std::size_t k = 0; k < per; ++k) {
      const auto& r = result.rows[m * per + k];
      out += std::string(mode_name(r.mode)) + "," + io::format_real(r.p) + "," + std::to_string(r.seed) + "," +
             std::to_string(r.counts.fp) + "," + std::to_string(r.counts.fn) + "," + std::to_string(r.counts.idsw) +
             "," + std::to_string(r.counts.gt) + "," + io::format_real(r.mota) + "\n";
    }
    const auto& mean = result.means[m];
    out += std::string(mode_name(mean.mode)) + "," + io::format_real(mean.p) + ",mean," + io::format_real(mean.fp) +
           "," + io::format_real(mean.fn) + "," + io::format_real(mean.idsw) + "," + io::format_real(mean.gt) + "," +
           io::format_real(mean.mota) + "\n";
  }
  return out;
}

std::vector<std::string> sweep_observations(const SweepResult& result) {
  std::vector<std::string> notes;
  for (const auto& c : result.means) {
    if (c.mode != ExperimentMode::compound) continue;
    for (const auto& d : result.means) {
      if (d.mode == ExperimentMode::detection_errors && d.p == c.p && c.mota > d.mota) {
        notes.push_back("compound mean MOTA " + io::format_real(c.mota) + " exceeds detection-only " +
                        io::format_real(d.mota) + " at p=" + io::format_real(c.p));
      }
    }
  }
  return notes;
}

}  // namespace headtrack
