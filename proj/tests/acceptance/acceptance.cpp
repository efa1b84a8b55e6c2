// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "headtrack/assignment.hpp"
#include "headtrack/classifier.hpp"
#include "headtrack/evaluation.hpp"
#include "headtrack/experiments.hpp"
#include "headtrack/heatmap.hpp"
#include "headtrack/io.hpp"
#include "headtrack/kalman.hpp"
#include "headtrack/sampling.hpp"
#include "headtrack/simulator.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace headtrack;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

Track single(TrackId id, std::vector<std::pair<FrameIndex, BoundingBox>> pts) {
  std::vector<TrackedBox> v;
  for (const auto& [f, b] : pts) v.emplace_back(f, id, b);
  return Track(id, v);
}

std::vector<Track> random_scene(std::mt19937_64& rng, int frames, TrackId id_base) {
  std::uniform_int_distribution<int> n_obj(1, 3);
  std::uniform_real_distribution<double> pos(0, 30), size(8, 16);
  std::bernoulli_distribution present(0.75);
  std::vector<Track> out;
  const int n = n_obj(rng);
  for (int k = 0; k < n; ++k) {
    std::vector<TrackedBox> pts;
    for (int f = 1; f <= frames; ++f)
      if (present(rng)) pts.emplace_back(f, id_base + k, BoundingBox(pos(rng), pos(rng), size(rng), size(rng)));
    if (!pts.empty()) out.emplace_back(id_base + k, pts);
  }
  return out;
}

Outcome mota_and_counting() {
  Outcome o;
  const BoundingBox b(10, 10, 20, 20);
  std::vector<std::pair<FrameIndex, BoundingBox>> ten;
  for (int f = 1; f <= 10; ++f) ten.push_back({f, b});
  const std::vector<Track> gt{single(1, ten)};
  o.require(evaluate(gt, gt).mota == 1.0, "perfect case");
  o.require(evaluate(gt, std::vector<Track>{}).mota == 0.0, "all-missed case");
  const std::vector<Track> one{single(1, {{1, b}, {2, b}})};
  const std::vector<Track> sw{single(4, {{1, b}}), single(5, {{2, b}})};
  o.require(evaluate(one, sw).mota == 0.5, "id switch case");

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> nf(1, 6);
  int agree = 0, trials = 0;
  while (trials < 100) {
    const int frames = nf(rng);
    const auto g = random_scene(rng, frames, 1);
    if (g.empty()) continue;
    const auto h = random_scene(rng, frames, 10);
    ++trials;
    const auto c = evaluate(g, h).counts;
    const auto r = oracle::clear_mot(g, h, 0.5);
    agree += (c == MotCounts{r.fp, r.fn, r.idsw, r.gt}) ? 1 : 0;
  }
  o.require(agree == 100, "oracle agreement");
  o.note("oracle agreement " + std::to_string(agree) + "/100");
  return o;
}

Outcome assignment_optimality() {
  Outcome o;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> cost(0.0, 10.0);
  int failures = 0;
  for (int t = 0; t < 500; ++t) {
    const int m = dim(rng), n = dim(rng);
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(n)));
    Eigen::MatrixXd mat(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) mat(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = cost(rng);
    const auto sol = solve_assignment(mat);
    const double best = oracle::brute_force_assignment(rows);
    if (sol.size() != static_cast<std::size_t>(std::min(m, n)) ||
        std::abs(assignment_cost(mat, sol) - best) > 1e-9 * (1.0 + std::abs(best)))
      ++failures;
  }
  o.require(failures == 0, "brute-force agreement");
  o.note(std::to_string(failures) + " failures in 500");
  return o;
}

Outcome kalman_numerics() {
  Outcome o;
  const KalmanModel model;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 2.0);
  auto st = model.initiate(Measurement(400, 300, 1600, 1.0));
  bool pd = true;
  double worst_asym = 0.0;
  for (int i = 0; i < 10000; ++i) {
    st = model.predict(st);
    const double t = static_cast<double>(i);
    st = model.update(st, Measurement(400 + 0.5 * t + noise(rng), 300 + noise(rng), 1600 + 10 * noise(rng), 1.0));
    worst_asym = std::max(worst_asym, (st.covariance - st.covariance.transpose()).cwiseAbs().maxCoeff());
    if (Eigen::LLT<StateMatrix>(st.covariance).info() != Eigen::Success) pd = false;
  }
  o.require(pd && worst_asym <= 1e-9, "symmetric PD over 10000 cycles");

  // Track started on the measurement it keeps receiving.
  const Measurement z(120, 20, 1400, 1.2);
  auto same = model.initiate(z);
  for (int i = 0; i < 50; ++i) same = model.update(model.predict(same), z);
  const double same_norm = model.innovation(model.predict(same), z).norm();
  o.require(same_norm < 1e-3, "innovation below 1e-3 (track started on the measurement)");

  // Track started elsewhere, then a constant measurement.
  auto c = model.initiate(Measurement(50, 60, 900, 0.8));
  int converged_at = -1;
  double at_50 = 0.0;
  for (int i = 1; i <= 5000 && converged_at < 0; ++i) {
    c = model.update(model.predict(c), z);
    const double n = model.innovation(model.predict(c), z).norm();
    if (i == 50) at_50 = n;
    if (n < 1e-3) converged_at = i;
  }
  o.require(converged_at > 0 && converged_at <= 50, "innovation below 1e-3 within 50 updates after a jump");
  o.note("max asymmetry " + fmt(worst_asym) + ", innovation " + fmt(same_norm) + " when started on z; after a jump " +
         fmt(at_50) + " at update 50, below 1e-3 at update " + std::to_string(converged_at));
  return o;
}

Outcome tracker_end_to_end() {
  Outcome o;
  auto layout = default_layout();
  SequenceParams sp;
  sp.n_agents = 2;
  sp.separate_lanes = true;
  sp.duration = 1000;
  layout.info.frame_count = sp.duration;
  const auto gt = simulate_sequence(sp, layout, 42);
  ExperimentConfig cfg;
  const auto t = run_mode(ExperimentMode::tracking_errors, gt, layout.info, 0.0, 1, cfg);
  o.require(t.mota >= 0.9, "MOTA >= 0.9");
  cfg.perturb.center_jitter_std = cfg.perturb.size_jitter_std = cfg.perturb.miss_prob = cfg.perturb.fp_per_frame = 0.0;
  const auto c = run_mode(ExperimentMode::compound, gt, layout.info, 0.0, 1, cfg);
  const auto t0 = run_mode(ExperimentMode::tracking_errors, gt, layout.info, 0.0, 1, cfg);
  o.require(c.counts == t0.counts && c.mota == t0.mota, "compound(zero) == tracking");
  o.note("MOTA " + fmt(t.mota, 6));
  return o;
}

Outcome skip_frame_trend() {
  Outcome o;
  auto layout = default_layout();
  SequenceParams sp;
  sp.n_agents = 5;
  sp.duration = 1000;
  layout.info.frame_count = sp.duration;
  const auto gt = simulate_sequence(sp, layout, 42);
  const auto grid = default_p_grid();
  const std::vector<ExperimentMode> modes{ExperimentMode::tracking_errors};
  const auto r = sweep(modes, gt, layout.info, grid, 5, 42, ExperimentConfig{}, 1);
  std::vector<double> ps, means;
  for (const auto& m : r.means) {
    ps.push_back(m.p);
    means.push_back(m.mota);
  }
  const double rho = oracle::spearman(ps, means);
  const double drop = means.front() - means.back();
  o.require(rho < 0.0, "Spearman < 0");
  o.require(drop >= 0.1, "MOTA(p=0) - MOTA(p=0.9) >= 0.1");
  o.note("rho " + fmt(rho) + ", MOTA " + fmt(means.front()) + " -> " + fmt(means.back()));
  return o;
}

Outcome sample_size_checks() {
  Outcome o;
  auto n_for = [](std::uint64_t n, double e = 0.05) {
    SampleSpec s;
    s.population = n;
    s.margin = e;
    return sample_size(s);
  };
  o.require(n_for(920) == 272, "N=920 -> 272");
  o.require(n_for(100000000000ULL) == 385, "large-N limit 385");
  bool mono = true;
  std::uint64_t prev = 0, prev_e = std::numeric_limits<std::uint64_t>::max();
  for (int i = 0; i < 100; ++i) {
    const auto s = n_for(static_cast<std::uint64_t>(std::llround(std::pow(10.0, 0.09 * i))));
    mono = mono && s >= prev;
    prev = s;
    const auto se = n_for(5000, 0.01 + 0.004 * i);
    mono = mono && se <= prev_e;
    prev_e = se;
  }
  o.require(mono, "monotone in N and margin");
  o.note("N=11005 -> " + std::to_string(n_for(11005)));
  return o;
}

Outcome heatmap_mass() {
  Outcome o;
  SequenceInfo small;
  small.frame_width = 100;
  small.frame_height = 100;
  const auto h = rasterize_track(single(1, {{1, BoundingBox(45, 45, 10, 10)}}), small);
  o.require(h.nonzero_count() == 81 && h.mass() == 81, "r=5 disk has 81 cells");

  std::mt19937_64 rng(17);
  SequenceInfo info;
  info.frame_width = 320;
  info.frame_height = 180;
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_real_distribution<double> x(-30, 350), y(-30, 210), s(1, 50);
  int mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<TrackedBox> pts;
    const int n = len(rng);
    std::uint64_t expect = 0;
    for (int f = 1; f <= n; ++f) {
      const BoundingBox b(x(rng), y(rng), s(rng), s(rng));
      pts.emplace_back(f, 1, b);
      expect += oracle::disk_pixels(320, 180, b.left() + b.width() / 2, b.top() + b.height() / 2,
                                    (b.width() + b.height()) / 4);
    }
    if (rasterize_track(Track(1, pts), info).mass() != expect) ++mismatches;
  }
  o.require(mismatches == 0, "mass equals oracle");
  o.note(std::to_string(mismatches) + " mismatches in 100");
  return o;
}

Outcome filtering_effect() {
  Outcome o;
  const auto layout = default_layout();
  const FilterParams params;
  double err_frac = 0.0, retained = 0.0, err_before = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto pop = simulate_population({100, 100, 100}, layout, layout.info.frame_count, seed);
    std::map<TrackId, ClassLabel> label;
    for (const auto& l : pop.labels) label[l.track_id] = l.label;
    const auto kept = filter_tracks(pop.tracks, params, layout.info);
    std::size_t err = 0, good = 0;
    for (const auto& t : kept) (label[t.id()] == ClassLabel::error ? err : good)++;
    err_frac += kept.empty() ? 1.0 : static_cast<double>(err) / static_cast<double>(kept.size());
    retained += static_cast<double>(good) / 200.0;
    err_before += 100.0 / 300.0;
  }
  err_frac /= 10;
  retained /= 10;
  err_before /= 10;
  o.require(err_frac <= 0.05, "error fraction <= 5%");
  o.require(retained >= 0.8, "retention >= 80%");
  o.note("error fraction " + fmt(err_before) + " -> " + fmt(err_frac) + ", retained " + fmt(retained));
  return o;
}

Outcome classifier_pipeline() {
  Outcome o;
  const auto layout = default_layout();
  double acc = 0.0, shuffled = 0.0, worst_grad = 0.0;
  std::size_t n_test = 0;
  const int seeds = 5;
  for (int k = 0; k < seeds; ++k) {
    const auto seed = static_cast<std::uint64_t>(1000 + k);
    const auto pop = simulate_population({100, 100, 100}, layout, layout.info.frame_count, seed);
    LabeledSet data;
    for (std::size_t i = 0; i < pop.tracks.size(); ++i) {
      data.features.push_back(pool_heatmap(rasterize_track(pop.tracks[i], layout.info), 64));
      data.labels.push_back(pop.labels[i].label);
    }
    const auto r = train(data, 64, seed);
    acc += r.test_accuracy;
    n_test += r.n_test;

    auto control = data;
    std::mt19937_64 rng(seed);
    std::shuffle(control.labels.begin(), control.labels.end(), rng);
    shuffled += train(control, 64, seed).test_accuracy;

    // Gradient check on a 50-sample batch, standardized on its own
    // statistics, at a random weight point.
    std::vector<FeatureVector> batch;
    std::vector<ClassLabel> batch_labels;
    for (std::size_t i = 0; i < 50; ++i) {
      const std::size_t j = (i * 6) % data.features.size();
      batch.push_back(data.features[j]);
      batch_labels.push_back(data.labels[j]);
    }
    auto model = SoftmaxModel::zero(64);
    for (const auto& f : batch) model.feature_mean += f / 50.0;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(model.dim());
    for (const auto& f : batch) var += (f - model.feature_mean).array().square().matrix() / 50.0;
    model.feature_std = var.array().sqrt().max(1e-8).matrix();
    std::normal_distribution<double> w(0.0, 0.1);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) model.weights.data()[i] = w(rng);
    const double g = gradient_check(model.weights, design_matrix(model, batch), batch_labels, TrainParams{}.l2);
    worst_grad = std::isnan(g) ? g : std::max(worst_grad, g);
  }
  acc /= seeds;
  shuffled /= seeds;
  const double sd = std::sqrt((1.0 / 3.0) * (2.0 / 3.0) / static_cast<double>(n_test));
  o.require(acc >= 0.9, "mean test accuracy >= 0.90");
  o.require(worst_grad <= 1e-5, "gradient check <= 1e-5");
  o.require(std::abs(shuffled - 1.0 / 3.0) <= 3 * sd, "shuffled control within 3 sigma of 1/3");
  o.note("test accuracy " + fmt(acc) + ", shuffled " + fmt(shuffled) + " (sigma " + fmt(sd) + "), grad err " +
         fmt(worst_grad));
  return o;
}

struct RunResult {
  int code;
  std::string out;
};

RunResult run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str() + err.str()};
}

Outcome determinism_and_io() {
  Outcome o;
  auto pass = [](const fs::path& dir) {
    const auto s = dir.string();
    std::vector<RunResult> r;
    r.push_back(run_cli({"simulate", "--kind", "sequence", "--agents", "3", "--duration", "200", "--out", s + "/seq"}));
    r.push_back(run_cli({"simulate", "--customers", "6", "--staff", "6", "--errors", "6", "--duration", "400",
                         "--out", s + "/pop"}));
    r.push_back(run_cli({"perturb", "--gt", s + "/seq/gt.csv", "--out", s + "/det.csv"}));
    r.push_back(run_cli({"track", "--det", s + "/det.csv", "--out", s + "/trk.csv"}));
    r.push_back(run_cli({"eval", "--gt", s + "/seq/gt.csv", "--hyp", s + "/trk.csv", "--out", s + "/eval.csv"}));
    r.push_back(run_cli({"sweep", "--gt", s + "/seq/gt.csv", "--seeds", "2", "--p-grid", "0:0.9:0.3", "--jobs", "3",
                         "--out", s + "/sweep.csv"}));
    r.push_back(run_cli({"heatmap", "--tracks", s + "/pop/tracks.csv", "--aggregate", "--per-track", "--pool", "16",
                         "--out", s + "/hm"}));
    r.push_back(run_cli({"filter", "--tracks", s + "/pop/tracks.csv", "--min-frames", "200", "--out", s + "/f.csv"}));
    r.push_back(run_cli({"sample-size", "--n", "920", "--out", s + "/n.txt"}));
    r.push_back(run_cli({"sample", "--tracks", s + "/pop/tracks.csv", "--n", "7", "--out", s + "/smp.csv"}));
    r.push_back(run_cli({"histogram", "--tracks", s + "/pop/tracks.csv", "--out", s + "/hist.csv"}));
    r.push_back(run_cli({"train", "--features", s + "/hm/features.csv", "--labels", s + "/pop/labels.csv", "--out",
                         s + "/model"}));
    r.push_back(run_cli({"predict", "--model", s + "/model/model.txt", "--features", s + "/hm/features.csv", "--out",
                         s + "/pred.csv"}));
    r.push_back(run_cli({"gradcheck", "--features", s + "/hm/features.csv", "--labels", s + "/pop/labels.csv",
                         "--out", s + "/gc.txt"}));
    return r;
  };
  auto snapshot = [](const fs::path& dir) {
    std::map<std::string, std::string> m;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = io::read_text(e.path());
    return m;
  };
  const auto a = testutil::temp_dir("accept_a"), b = testutil::temp_dir("accept_b");
  const auto ra = pass(a), rb = pass(b);
  bool codes = true, stdout_same = true;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    codes = codes && ra[i].code == 0 && rb[i].code == 0;
    stdout_same = stdout_same && ra[i].out == rb[i].out;
  }
  const auto sa = snapshot(a);
  o.require(codes, "all subcommands succeed");
  o.require(stdout_same && sa == snapshot(b), "reruns byte-identical");
  o.note(std::to_string(ra.size()) + " subcommands, " + std::to_string(sa.size()) + " files compared");
  fs::remove_all(a);
  fs::remove_all(b);

  std::mt19937_64 rng(1000);
  int mot_ok = 0, label_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto tracks = testutil::random_tracks(rng, 5, 8);
    const auto text = io::format_tracks(tracks);
    const auto back = io::parse_mot_csv(text);
    if (back.tracks == tracks && io::format_tracks(back.tracks) == text)
      ++mot_ok;
    const auto labels = testutil::random_labels(rng, 20);
    if (io::parse_labels(io::format_labels(labels)) == labels) ++label_ok;
  }
  o.require(mot_ok == 1000, "MOT-CSV round trip");
  o.require(label_ok == 1000, "label round trip");
  o.note("round trips " + std::to_string(mot_ok) + "/1000, " + std::to_string(label_ok) + "/1000");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
    double limit_s;  // 0: no runtime bound
  };
  const std::vector<Criterion> criteria{
      {"MOTA formula and CLEAR counting", mota_and_counting, 5.0},
      {"assignment optimality", assignment_optimality, 5.0},
      {"Kalman numerics", kalman_numerics, 0.0},
      {"tracker end-to-end", tracker_end_to_end, 0.0},
      {"skip-frame trend", skip_frame_trend, 60.0},
      {"sample size", sample_size_checks, 1.0},
      {"heatmap mass conservation", heatmap_mass, 0.0},
      {"filtering effect", filtering_effect, 0.0},
      {"classifier pipeline", classifier_pipeline, 120.0},
      {"determinism and I/O", determinism_and_io, 0.0},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) o.require(false, "runtime < " + fmt(c.limit_s) + " s");
    std::printf("%s [%zu] %s (%.2f s) %s\n", o.ok ? "PASS" : "FAIL", i + 1, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
    failed += o.ok ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
