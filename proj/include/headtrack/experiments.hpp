#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "headtrack/core.hpp"
#include "headtrack/evaluation.hpp"
#include "headtrack/tracker.hpp"

namespace headtrack {

// detection:  system boxes with ground-truth identities
// tracking:   ground-truth boxes through the tracker
// compound:   system boxes through the tracker
enum class ExperimentMode { detection_errors, tracking_errors, compound };

ExperimentMode parse_mode(const std::string& name);
const char* mode_name(ExperimentMode mode) noexcept;

struct PerturbParams {
  double center_jitter_std = 2.0;
  double size_jitter_std = 0.05;
  double miss_prob = 0.1;
  double fp_per_frame = 0.2;
  std::uint64_t seed = 42;

  void validate() const;
  bool is_identity() const noexcept {
    return center_jitter_std == 0.0 && size_jitter_std == 0.0 && miss_prob == 0.0 && fp_per_frame == 0.0;
  }
};

// Drops each frame independently with probability p. Survivors keep their
// original indices and order.
std::vector<FrameIndex> skip_frames(std::span<const FrameIndex> frames, double p, std::uint64_t seed);

// Restricts tracks to the given frames, dropping tracks left empty.
std::vector<Track> restrict_to_frames(std::span<const Track> tracks, std::span<const FrameIndex> frames);

// Ground-truth boxes stripped of identity, one entry per frame in `frames`
// (possibly empty), boxes ordered by track id.
FrameDetections strip_ids(std::span<const Track> tracks, std::span<const FrameIndex> frames);

// Detector stand-in: misses, Gaussian center jitter, log-normal size jitter
// and Poisson false positives drawn uniformly inside the frame with sizes
// resampled from the ground-truth boxes.
FrameDetections perturb_detections(const FrameDetections& gt, const PerturbParams& params, const SequenceInfo& info);

// Gives system boxes ground-truth identities by per-frame max-IOU matching
// gated at iou_gate; unmatched boxes become singleton tracks with fresh ids.
std::vector<Track> assign_gt_ids(const FrameDetections& system, std::span<const Track> gt, double iou_gate = 0.5);

struct ExperimentConfig {
  TrackerParams tracker{};
  PerturbParams perturb{};
  double match_iou = 0.5;
  double assign_iou = 0.5;
};

// Runs one evaluation combination. Skipping uses `seed`; the perturbation
// seed is derived from both `seed` and config.perturb.seed.
MotaReport run_mode(ExperimentMode mode, std::span<const Track> gt, const SequenceInfo& info, double p,
                    std::uint64_t seed, const ExperimentConfig& config);

struct SweepRow {
  ExperimentMode mode;
  double p;
  std::uint64_t seed;
  MotCounts counts;
  double mota;
};

struct SweepMean {
  ExperimentMode mode;
  double p;
  double fp, fn, idsw, gt;
  double mota;
};

struct SweepResult {
  std::vector<SweepRow> rows;    // ordered by (mode, p, seed)
  std::vector<SweepMean> means;  // one per (mode, p)
};

std::vector<double> default_p_grid();

// Seeds are base_seed, base_seed + 1, ...; `jobs` worker threads.
SweepResult sweep(std::span<const ExperimentMode> modes, std::span<const Track> gt, const SequenceInfo& info,
                  std::span<const double> p_grid, int n_seeds, std::uint64_t base_seed, const ExperimentConfig& config,
                  int jobs = 1);

// "mode,p,seed,fp,fn,idsw,gt,mota"; each p's per-seed rows are followed by
// its mean row (seed = "mean").
std::string format_sweep_csv(const SweepResult& result);

// Notes where compound mean MOTA exceeds detection-only mean MOTA.
std::vector<std::string> sweep_observations(const SweepResult& result);

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept;

}  // namespace headtrack
