#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "headtrack/classifier.hpp"
#include "headtrack/errors.hpp"
#include "headtrack/evaluation.hpp"
#include "headtrack/experiments.hpp"
#include "headtrack/heatmap.hpp"
#include "headtrack/io.hpp"
#include "headtrack/sampling.hpp"
#include "headtrack/simulator.hpp"
#include "headtrack/tracker.hpp"

namespace headtrack::cli {
namespace {

namespace fs = std::filesystem;

struct Common {
  std::uint64_t seed = 42;
  std::string out;
};

struct FrameFlags {
  int width = 1280;
  int height = 720;
};

struct FeatureSource {
  std::string features;
  std::string tracks;
  FrameFlags frame;
  std::string radius_rule = "mean-half-extent";
};

void add_common(CLI::App* cmd, Common& c, bool out_required) {
  cmd->add_option("--seed", c.seed, "Random seed");
  auto* o = cmd->add_option("--out", c.out, "Output path");
  if (out_required) o->required();
}

void add_frame(CLI::App* cmd, FrameFlags& f) {
  cmd->add_option("--width", f.width, "Frame width in pixels")->check(CLI::PositiveNumber);
  cmd->add_option("--height", f.height, "Frame height in pixels")->check(CLI::PositiveNumber);
}

void add_tracker(CLI::App* cmd, TrackerParams& p) {
  cmd->add_option("--iou-gate", p.iou_gate, "Minimum IOU for a track/detection match");
  cmd->add_option("--max-age", p.max_age, "Frames a track survives without a match");
  cmd->add_option("--min-hits", p.min_hits, "Matches before a track is reported");
  cmd->add_option("--process-noise", p.noise.process_scale, "Process noise scale");
  cmd->add_option("--measurement-noise", p.noise.measurement_scale, "Measurement noise scale");
  cmd->add_flag("--per-gap-predict", p.predict_per_gap, "Predict once per missing frame across gaps");
}

void add_perturb(CLI::App* cmd, PerturbParams& p) {
  cmd->add_option("--center-jitter", p.center_jitter_std, "Std of box center jitter (pixels)");
  cmd->add_option("--size-jitter", p.size_jitter_std, "Log-scale std of box size jitter");
  cmd->add_option("--miss-prob", p.miss_prob, "Probability a ground-truth box is missed");
  cmd->add_option("--fp-per-frame", p.fp_per_frame, "Expected spurious boxes per frame");
}

void add_feature_source(CLI::App* cmd, FeatureSource& s) {
  auto* f = cmd->add_option("--features", s.features, "Feature CSV (track_id,f0,...)");
  auto* t = cmd->add_option("--tracks", s.tracks, "MOT-CSV tracks to rasterize and pool");
  f->excludes(t);
  add_frame(cmd, s.frame);
  cmd->add_option("--radius-rule", s.radius_rule, "Head circle radius rule")
      ->check(CLI::IsMember({"mean-half-extent", "inscribed", "circumscribed"}));
}

SequenceInfo frame_info(const FrameFlags& f, FrameIndex frame_count = 1) {
  SequenceInfo info{f.width, f.height, frame_count, 25.0};
  info.validate();
  return info;
}

FrameIndex last_frame(const std::vector<Track>& tracks) {
  FrameIndex last = 1;
  for (const auto& t : tracks) last = std::max(last, t.last_frame());
  return last;
}

struct Features {
  std::vector<TrackId> ids;
  std::vector<FeatureVector> values;
};

Features load_features(const FeatureSource& s, int grid) {
  Features f;
  if (!s.features.empty()) {
    parse_features(io::read_text(s.features), f.ids, f.values);
    return f;
  }
  if (s.tracks.empty()) throw CLI::ValidationError("one of --features or --tracks is required");
  const auto tracks = io::read_tracks(s.tracks);
  const auto info = frame_info(s.frame);
  const auto rule = parse_radius_rule(s.radius_rule);
  Heatmap h(info.frame_width, info.frame_height);
  for (const auto& t : tracks) {
    h.clear();
    accumulate_track(h, t, rule);
    f.ids.push_back(t.id());
    f.values.push_back(pool_heatmap(h, grid));
  }
  return f;
}

int infer_grid(const Features& f, int fallback) {
  if (f.values.empty()) return fallback;
  const auto d = f.values.front().size();
  const auto g = static_cast<int>(std::lround(std::sqrt(static_cast<double>(d))));
  if (static_cast<Eigen::Index>(g) * g != d) throw DimensionMismatch("feature length is not a square grid");
  return g;
}

LabeledSet join_labels(const Features& f, const std::string& labels_path) {
  std::map<TrackId, ClassLabel> labels;
  for (const auto& r : io::read_labels(labels_path)) labels[r.track_id] = r.label;
  LabeledSet set;
  for (std::size_t i = 0; i < f.ids.size(); ++i) {
    const auto it = labels.find(f.ids[i]);
    if (it == labels.end()) throw InvariantError("no label for track " + std::to_string(f.ids[i]));
    set.features.push_back(f.values[i]);
    set.labels.push_back(it->second);
  }
  return set;
}

std::vector<double> parse_p_grid(const std::string& text) {
  std::vector<double> grid;
  try {
    if (text.find(':') != std::string::npos) {
      const auto parts = io::split_fields(text, ':');
      if (parts.size() != 3) throw CLI::ValidationError("--p-grid", "expected start:stop:step");
      const double start = std::stod(parts[0]), stop = std::stod(parts[1]), step = std::stod(parts[2]);
      if (!(step > 0.0)) throw CLI::ValidationError("--p-grid", "step must be positive");
      const auto n = static_cast<int>(std::floor((stop - start) / step + 1e-9));
      for (int i = 0; i <= n; ++i) grid.push_back(std::round((start + i * step) * 1e12) / 1e12);
    } else {
      for (const auto& f : io::split_fields(text)) grid.push_back(std::stod(f));
    }
  } catch (const std::invalid_argument&) {
    throw CLI::ValidationError("--p-grid", "not a number list: " + text);
  }
  return grid;
}

std::array<double, 3> parse_split(const std::string& text) {
  const auto f = io::split_fields(text);
  if (f.size() != 3) throw CLI::ValidationError("--split", "expected three comma-separated shares");
  try {
    return {std::stod(f[0]), std::stod(f[1]), std::stod(f[2])};
  } catch (const std::exception&) {
    throw CLI::ValidationError("--split", "not numbers: " + text);
  }
}

void ensure_dir(const fs::path& dir) { fs::create_directories(dir); }

}  // namespace

int dispatch(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Head tracking, CLEAR-MOT evaluation and track heatmap toolkit", "headtrack"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::map<CLI::App*, std::function<void()>> actions;

  // track -------------------------------------------------------------------
  struct {
    Common c;
    std::string det;
    TrackerParams tracker;
  } track;
  auto* track_cmd = app.add_subcommand("track", "Run the IOU tracker over MOT-CSV detections");
  track_cmd->add_option("--det", track.det, "Detections (MOT-CSV, id -1)")->required();
  add_tracker(track_cmd, track.tracker);
  add_common(track_cmd, track.c, true);
  actions[track_cmd] = [&] {
    const auto dets = io::read_detections(track.det);
    const auto tracks = run_tracker(group_by_frame(dets), track.tracker);
    io::write_mot_csv(tracks, track.c.out);
    out << "tracks=" << tracks.size() << " boxes=" << total_boxes(tracks) << "\n";
  };

  // eval --------------------------------------------------------------------
  struct {
    Common c;
    std::string gt, hyp;
    double match_iou = 0.5;
    double p = 0.0;
  } eval;
  auto* eval_cmd = app.add_subcommand("eval", "CLEAR-MOT counts and MOTA of hypothesis tracks");
  eval_cmd->add_option("--gt", eval.gt, "Ground-truth tracks (MOT-CSV)")->required();
  eval_cmd->add_option("--hyp", eval.hyp, "Hypothesis tracks (MOT-CSV)")->required();
  eval_cmd->add_option("--match-iou", eval.match_iou, "Minimum IOU for a ground-truth/hypothesis match");
  eval_cmd->add_option("--p", eval.p, "Skip probability recorded in the report row");
  add_common(eval_cmd, eval.c, false);
  actions[eval_cmd] = [&] {
    const auto report = evaluate(io::read_tracks(eval.gt), io::read_tracks(eval.hyp), eval.match_iou);
    if (!eval.c.out.empty()) {
      const SweepPoint pt{eval.p, report};
      io::write_text(eval.c.out, format_sweep_points(std::span(&pt, 1)));
    }
    const auto& k = report.counts;
    out << "mota=" << io::format_real(report.mota) << " fp=" << k.fp << " fn=" << k.fn << " idsw=" << k.idsw
        << " gt=" << k.gt << "\n";
  };

  // sweep -------------------------------------------------------------------
  struct {
    Common c;
    std::string gt, mode = "all", p_grid = "0:0.9:0.1";
    FrameFlags frame;
    FrameIndex frame_count = 0;
    int seeds = 5, jobs = 1;
    ExperimentConfig config;
  } sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Skip-frame sweep of the error-decomposition experiments");
  sweep_cmd->add_option("--gt", sw.gt, "Ground-truth tracks (MOT-CSV)")->required();
  sweep_cmd->add_option("--mode", sw.mode, "Experiment mode")
      ->check(CLI::IsMember({"detection", "tracking", "compound", "all"}));
  sweep_cmd->add_option("--p-grid", sw.p_grid, "Skip probabilities as start:stop:step or a comma list");
  sweep_cmd->add_option("--seeds", sw.seeds, "Seeds per skip probability")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--jobs", sw.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--frame-count", sw.frame_count, "Sequence length in frames (0: last ground-truth frame)");
  add_frame(sweep_cmd, sw.frame);
  add_perturb(sweep_cmd, sw.config.perturb);
  add_tracker(sweep_cmd, sw.config.tracker);
  sweep_cmd->add_option("--match-iou", sw.config.match_iou, "Evaluation match IOU");
  sweep_cmd->add_option("--assign-iou", sw.config.assign_iou, "IOU gate for inheriting ground-truth ids");
  add_common(sweep_cmd, sw.c, true);
  actions[sweep_cmd] = [&] {
    const auto gt = io::read_tracks(sw.gt);
    const auto info = frame_info(sw.frame, sw.frame_count > 0 ? sw.frame_count : last_frame(gt));
    std::vector<ExperimentMode> modes;
    if (sw.mode == "all") {
      modes = {ExperimentMode::detection_errors, ExperimentMode::tracking_errors, ExperimentMode::compound};
    } else {
      modes = {parse_mode(sw.mode)};
    }
    auto config = sw.config;
    config.perturb.seed = sw.c.seed;
    const auto grid = parse_p_grid(sw.p_grid);
    const auto result = sweep(modes, gt, info, grid, sw.seeds, sw.c.seed, config, sw.jobs);
    io::write_text(sw.c.out, format_sweep_csv(result));
    out << "rows=" << result.rows.size() + result.means.size();
    const auto notes = sweep_observations(result);
    if (!notes.empty()) {
      out << " observation: compound outperforms detection-only at p=";
      for (std::size_t i = 0; i < notes.size(); ++i) {
        const auto at = notes[i].rfind("p=");
        out << (i ? "," : "") << notes[i].substr(at + 2);
      }
    }
    out << "\n";
  };

  // perturb -----------------------------------------------------------------
  struct {
    Common c;
    std::string gt;
    FrameFlags frame;
    PerturbParams perturb;
  } pt;
  auto* perturb_cmd = app.add_subcommand("perturb", "Synthesize detector-like boxes from ground truth");
  perturb_cmd->add_option("--gt", pt.gt, "Ground-truth tracks (MOT-CSV)")->required();
  add_frame(perturb_cmd, pt.frame);
  add_perturb(perturb_cmd, pt.perturb);
  add_common(perturb_cmd, pt.c, true);
  actions[perturb_cmd] = [&] {
    const auto gt = io::read_tracks(pt.gt);
    const auto info = frame_info(pt.frame, last_frame(gt));
    std::vector<FrameIndex> frames;
    for (FrameIndex f = 1; f <= info.frame_count; ++f) frames.push_back(f);
    auto params = pt.perturb;
    params.seed = pt.c.seed;
    std::vector<Detection> dets;
    for (const auto& [_, fd] : perturb_detections(strip_ids(gt, frames), params, info))
      dets.insert(dets.end(), fd.begin(), fd.end());
    io::write_mot_csv(dets, pt.c.out);
    out << "detections=" << dets.size() << "\n";
  };

  // heatmap -----------------------------------------------------------------
  struct {
    Common c;
    std::string tracks, radius_rule = "mean-half-extent";
    FrameFlags frame;
    bool per_track = false, aggregate = false;
    int pool = 0;
  } hm;
  auto* heatmap_cmd = app.add_subcommand("heatmap", "Rasterize tracks into exposure heatmaps");
  heatmap_cmd->add_option("--tracks", hm.tracks, "Tracks (MOT-CSV)")->required();
  add_frame(heatmap_cmd, hm.frame);
  heatmap_cmd->add_option("--radius-rule", hm.radius_rule, "Head circle radius rule")
      ->check(CLI::IsMember({"mean-half-extent", "inscribed", "circumscribed"}));
  heatmap_cmd->add_flag("--per-track", hm.per_track, "Write track_<id>.pgm per track");
  heatmap_cmd->add_flag("--aggregate", hm.aggregate, "Write aggregate.pgm and aggregate.csv");
  heatmap_cmd->add_option("--pool", hm.pool, "Also write features.csv pooled on a GxG grid (0: off)")
      ->check(CLI::NonNegativeNumber);
  add_common(heatmap_cmd, hm.c, true);
  actions[heatmap_cmd] = [&] {
    const auto tracks = io::read_tracks(hm.tracks);
    const auto info = frame_info(hm.frame);
    const auto rule = parse_radius_rule(hm.radius_rule);
    const fs::path dir = hm.c.out;
    ensure_dir(dir);
    const bool aggregate = hm.aggregate || (!hm.per_track && hm.pool == 0);
    Heatmap total(info.frame_width, info.frame_height);
    Heatmap h(info.frame_width, info.frame_height);
    std::vector<TrackId> ids;
    std::vector<FeatureVector> features;
    for (const auto& t : tracks) {
      h.clear();
      accumulate_track(h, t, rule);
      total += h;
      if (hm.per_track) io::write_pgm16(h, dir / ("track_" + std::to_string(t.id()) + ".pgm"));
      if (hm.pool > 0) {
        ids.push_back(t.id());
        features.push_back(pool_heatmap(h, hm.pool));
      }
    }
    if (aggregate) {
      io::write_pgm16(total, dir / "aggregate.pgm");
      io::write_text(dir / "aggregate.csv", io::format_heatmap_csv(total));
    }
    if (hm.pool > 0) io::write_text(dir / "features.csv", format_features(ids, features));
    out << "tracks=" << tracks.size() << " mass=" << total.mass() << "\n";
  };

  // filter ------------------------------------------------------------------
  struct {
    Common c;
    std::string tracks;
    FrameFlags frame;
    FilterParams params;
  } fl;
  auto* filter_cmd = app.add_subcommand("filter", "Keep tracks long in both frames and distance covered");
  filter_cmd->add_option("--tracks", fl.tracks, "Tracks (MOT-CSV)")->required();
  add_frame(filter_cmd, fl.frame);
  filter_cmd->add_option("--min-frames", fl.params.min_frames, "Minimum number of boxes in a track");
  filter_cmd->add_option("--min-distance-factor", fl.params.min_distance_factor,
                         "Minimum path length as a multiple of the frame width");
  add_common(filter_cmd, fl.c, true);
  actions[filter_cmd] = [&] {
    const auto tracks = io::read_tracks(fl.tracks);
    const auto kept = filter_tracks(tracks, fl.params, frame_info(fl.frame));
    io::write_mot_csv(kept, fl.c.out);
    out << "kept=" << kept.size() << " of " << tracks.size() << "\n";
  };

  // sample-size -------------------------------------------------------------
  struct {
    Common c;
    SampleSpec spec;
  } ss;
  auto* ss_cmd = app.add_subcommand("sample-size", "Cochran sample size with finite-population correction");
  ss_cmd->add_option("--n", ss.spec.population, "Population size")->required();
  ss_cmd->add_option("--confidence", ss.spec.confidence, "Confidence level");
  ss_cmd->add_option("--margin", ss.spec.margin, "Margin of error");
  ss_cmd->add_option("--proportion", ss.spec.proportion, "Assumed proportion");
  add_common(ss_cmd, ss.c, false);
  actions[ss_cmd] = [&] {
    const auto n = sample_size(ss.spec);
    if (!ss.c.out.empty()) io::write_text(ss.c.out, std::to_string(n) + "\n");
    out << n << "\n";
  };

  // sample ------------------------------------------------------------------
  struct {
    Common c;
    std::string tracks;
    std::size_t n = 0;
    SampleSpec spec;
  } sm;
  auto* sample_cmd = app.add_subcommand("sample", "Uniform random sample of tracks");
  sample_cmd->add_option("--tracks", sm.tracks, "Tracks (MOT-CSV)")->required();
  sample_cmd->add_option("--n", sm.n, "Sample size (0: Cochran size for the population)");
  sample_cmd->add_option("--confidence", sm.spec.confidence, "Confidence level when --n is 0");
  sample_cmd->add_option("--margin", sm.spec.margin, "Margin of error when --n is 0");
  add_common(sample_cmd, sm.c, true);
  actions[sample_cmd] = [&] {
    const auto tracks = io::read_tracks(sm.tracks);
    std::size_t n = sm.n;
    if (n == 0 && !tracks.empty()) {
      auto spec = sm.spec;
      spec.population = tracks.size();
      n = sample_size(spec);
    }
    const auto picked = sample_tracks(tracks, n, sm.c.seed);
    io::write_mot_csv(picked, sm.c.out);
    out << "sampled=" << picked.size() << " of " << tracks.size() << "\n";
  };

  // histogram ---------------------------------------------------------------
  struct {
    Common c;
    std::string tracks, count = "boxes";
    double frame_rate = 25.0;
  } hi;
  auto* hist_cmd = app.add_subcommand("histogram", "Boxes or track starts per hour");
  hist_cmd->add_option("--tracks", hi.tracks, "Tracks (MOT-CSV)")->required();
  hist_cmd->add_option("--frame-rate", hi.frame_rate, "Frames per second")->check(CLI::PositiveNumber);
  hist_cmd->add_option("--count", hi.count, "What to count")->check(CLI::IsMember({"boxes", "track-starts"}));
  add_common(hist_cmd, hi.c, true);
  actions[hist_cmd] = [&] {
    const auto tracks = io::read_tracks(hi.tracks);
    const auto mode = hi.count == "boxes" ? HistogramMode::boxes : HistogramMode::track_starts;
    const auto rows = hourly_histogram(tracks, mode, hi.frame_rate);
    io::write_text(hi.c.out, format_histogram_csv(rows));
    out << "hours=" << rows.size() << "\n";
  };

  // simulate ----------------------------------------------------------------
  struct {
    Common c;
    std::string kind = "population", layout;
    std::size_t customers = 100, staff = 100, errors = 100;
    SequenceParams seq;
    FrameIndex duration = 3000;
  } si;
  auto* sim_cmd = app.add_subcommand("simulate", "Synthetic store tracks (labeled population or shared sequence)");
  sim_cmd->add_option("--kind", si.kind, "What to simulate")->check(CLI::IsMember({"population", "sequence"}));
  sim_cmd->add_option("--layout", si.layout, "Layout file (key = value lines)");
  sim_cmd->add_option("--duration", si.duration, "Frames per track (population) or sequence length")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--customers", si.customers, "Customer tracks (population)");
  sim_cmd->add_option("--staff", si.staff, "Staff tracks (population)");
  sim_cmd->add_option("--errors", si.errors, "Error tracks (population)");
  sim_cmd->add_option("--agents", si.seq.n_agents, "Agents (sequence)")->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--separate-lanes", si.seq.separate_lanes, "Keep agents in disjoint bands (sequence)");
  sim_cmd->add_option("--speed", si.seq.speed, "Walking speed in pixels per frame (sequence)");
  sim_cmd->add_option("--head-size", si.seq.head_size, "Head box side in pixels (sequence)");
  add_common(sim_cmd, si.c, true);
  actions[sim_cmd] = [&] {
    StoreLayout layout = si.layout.empty() ? default_layout() : parse_layout(io::read_text(si.layout));
    layout.info.frame_count = si.duration;
    const fs::path dir = si.c.out;
    ensure_dir(dir);
    io::write_text(dir / "layout.txt", format_layout(layout));
    if (si.kind == "population") {
      const auto pop = simulate_population({si.customers, si.staff, si.errors}, layout, si.duration, si.c.seed);
      io::write_mot_csv(pop.tracks, dir / "tracks.csv");
      io::write_labels(pop.labels, dir / "labels.csv");
      out << "tracks=" << pop.tracks.size() << " boxes=" << total_boxes(pop.tracks) << "\n";
    } else {
      auto params = si.seq;
      params.duration = si.duration;
      const auto tracks = simulate_sequence(params, layout, si.c.seed);
      io::write_mot_csv(tracks, dir / "gt.csv");
      out << "tracks=" << tracks.size() << " boxes=" << total_boxes(tracks) << "\n";
    }
  };

  // train -------------------------------------------------------------------
  struct {
    Common c;
    FeatureSource src;
    std::string labels, split = "60,20,20";
    int grid = 64;
    TrainParams params;
  } tr;
  auto* train_cmd = app.add_subcommand("train", "Train the softmax heatmap classifier");
  add_feature_source(train_cmd, tr.src);
  train_cmd->add_option("--labels", tr.labels, "Label CSV (track_id,label)")->required();
  train_cmd->add_option("--g", tr.grid, "Pooling grid size")->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", tr.params.learning_rate, "Learning rate");
  train_cmd->add_option("--iters", tr.params.iterations, "Gradient descent iterations");
  train_cmd->add_option("--l2", tr.params.l2, "L2 penalty on non-bias weights");
  train_cmd->add_option("--split", tr.split, "Train,validation,test shares");
  add_common(train_cmd, tr.c, true);
  actions[train_cmd] = [&] {
    const auto features = load_features(tr.src, tr.grid);
    const int grid = tr.src.features.empty() ? tr.grid : infer_grid(features, tr.grid);
    auto params = tr.params;
    params.split = parse_split(tr.split);
    const auto result = train(join_labels(features, tr.labels), grid, tr.c.seed, params);
    const fs::path dir = tr.c.out;
    ensure_dir(dir);
    io::write_text(dir / "model.txt", format_model(result.model));
    io::write_text(dir / "accuracy.csv", "split,accuracy,n\ntrain," + io::format_real(result.train_accuracy) + "," +
                                             std::to_string(result.n_train) + "\nvalidation," +
                                             io::format_real(result.validation_accuracy) + "," +
                                             std::to_string(result.n_validation) + "\ntest," +
                                             io::format_real(result.test_accuracy) + "," +
                                             std::to_string(result.n_test) + "\n");
    out << "train=" << io::format_real(result.train_accuracy)
        << " validation=" << io::format_real(result.validation_accuracy)
        << " test=" << io::format_real(result.test_accuracy) << "\n";
  };

  // predict -----------------------------------------------------------------
  struct {
    Common c;
    FeatureSource src;
    std::string model;
  } pr;
  auto* predict_cmd = app.add_subcommand("predict", "Classify tracks with a trained model");
  predict_cmd->add_option("--model", pr.model, "Model file from train")->required();
  add_feature_source(predict_cmd, pr.src);
  add_common(predict_cmd, pr.c, true);
  actions[predict_cmd] = [&] {
    const auto model = parse_model(io::read_text(pr.model));
    const auto features = load_features(pr.src, model.grid);
    std::string csv = "track_id,label,p0,p1,p2\n";
    std::array<std::size_t, 3> counts{};
    for (std::size_t i = 0; i < features.ids.size(); ++i) {
      const auto p = predict(model, features.values[i]);
      ++counts[static_cast<std::size_t>(p.label)];
      csv += std::to_string(features.ids[i]) + "," + std::to_string(static_cast<int>(p.label));
      for (const double q : p.probabilities) csv += "," + io::format_g6(q);
      csv += "\n";
    }
    io::write_text(pr.c.out, csv);
    out << "customer=" << counts[0] << " staff=" << counts[1] << " error=" << counts[2] << "\n";
  };

  // gradcheck ---------------------------------------------------------------
  struct {
    Common c;
    FeatureSource src;
    std::string labels;
    int grid = 8;
    double l2 = 1e-4, step = 1e-5;
    std::size_t max_samples = 50;
  } gc;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Compare the softmax gradient with central differences");
  add_feature_source(gc_cmd, gc.src);
  gc_cmd->add_option("--labels", gc.labels, "Label CSV (track_id,label)")->required();
  gc_cmd->add_option("--g", gc.grid, "Pooling grid size when rasterizing --tracks")->check(CLI::PositiveNumber);
  gc_cmd->add_option("--l2", gc.l2, "L2 penalty");
  gc_cmd->add_option("--step", gc.step, "Finite-difference step");
  gc_cmd->add_option("--max-samples", gc.max_samples, "Samples used (first N)")->check(CLI::PositiveNumber);
  add_common(gc_cmd, gc.c, false);
  actions[gc_cmd] = [&] {
    auto features = load_features(gc.src, gc.grid);
    const int grid = gc.src.features.empty() ? gc.grid : infer_grid(features, gc.grid);
    if (features.ids.size() > gc.max_samples) {
      features.ids.resize(gc.max_samples);
      features.values.resize(gc.max_samples);
    }
    const auto set = join_labels(features, gc.labels);
    if (set.features.empty()) throw DegenerateData("no samples");
    SoftmaxModel model = SoftmaxModel::zero(grid);
    const auto n = static_cast<double>(set.features.size());
    for (const auto& f : set.features) model.feature_mean += f;
    model.feature_mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(model.dim());
    for (const auto& f : set.features) var += (f - model.feature_mean).array().square().matrix();
    model.feature_std = (var / n).array().sqrt().max(1e-8).matrix();
    std::mt19937_64 rng(gc.c.seed);
    std::normal_distribution<double> w(0.0, 0.1);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) model.weights.data()[i] = w(rng);
    const double worst =
        gradient_check(model.weights, design_matrix(model, set.features), set.labels, gc.l2, gc.step);
    if (!gc.c.out.empty()) io::write_text(gc.c.out, "max_rel_err\n" + io::format_g6(worst) + "\n");
    out << "max_rel_err=" << io::format_g6(worst) << "\n";
  };

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (auto* sub : app.get_subcommands()) actions.at(sub)();
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kOk;
}

}  // namespace headtrack::cli
