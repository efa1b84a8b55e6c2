#include <random>
#include <set>

#include "doctest.h"
#include "headtrack/errors.hpp"
#include "headtrack/evaluation.hpp"
#include "headtrack/io.hpp"
#include "headtrack/tracker.hpp"

using namespace headtrack;

namespace {

std::vector<Track> two_walkers(int frames) {
  std::vector<TrackedBox> a, b;
  for (int f = 1; f <= frames; ++f) {
    a.emplace_back(f, 1, BoundingBox(100.0 + 3.0 * f, 100.0, 40, 40));
    b.emplace_back(f, 2, BoundingBox(900.0 - 2.0 * f, 500.0 + 1.0 * f, 40, 40));
  }
  return {Track(1, a), Track(2, b)};
}

FrameDetections as_detections(const std::vector<Track>& tracks) {
  FrameDetections out;
  for (const auto& t : tracks)
    for (const auto& p : t.points()) out[p.frame_index].emplace_back(p.frame_index, p.bbox, 1.0);
  return out;
}

}  // namespace

TEST_CASE("associate basics") {
  const std::vector<BoundingBox> tracks{BoundingBox(0, 0, 10, 10), BoundingBox(100, 0, 10, 10)};
  auto r = associate(tracks, {}, 0.3);
  CHECK(r.matches.empty());
  CHECK(r.unmatched_tracks == std::vector<std::size_t>{0, 1});

  r = associate(tracks, std::vector<BoundingBox>{tracks[1], tracks[0]}, 0.3);
  CHECK(r.matches == std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 0}});
  CHECK(r.unmatched_detections.empty());
  CHECK(r.unmatched_tracks.empty());
}

TEST_CASE("associate dissolves sub-gate pairs") {
  // IOUs: track0/det0 = 1, track1/det1 = 0.6, track2/det2 = 5/195 (below gate)
  const std::vector<BoundingBox> tracks{BoundingBox(0, 0, 10, 10), BoundingBox(100, 0, 10, 10),
                                        BoundingBox(300, 0, 10, 10)};
  const std::vector<BoundingBox> dets{BoundingBox(0, 0, 10, 10), BoundingBox(102.5, 0, 10, 10),
                                      BoundingBox(309.5, 0, 10, 10)};
  const auto r = associate(tracks, dets, 0.3);
  CHECK(r.matches == std::vector<std::pair<std::size_t, std::size_t>>{{0, 0}, {1, 1}});
  CHECK(r.unmatched_detections == std::vector<std::size_t>{2});
  CHECK(r.unmatched_tracks == std::vector<std::size_t>{2});
}

TEST_CASE("first frame spawns sequential ids") {
  Tracker t;
  const std::vector<Detection> d{{1, BoundingBox(0, 0, 10, 10), 1.0}, {1, BoundingBox(50, 50, 10, 10), 1.0}};
  const auto out = t.step(1, d);
  REQUIRE(out.size() == 2);
  CHECK(out[0].track_id == 1);
  CHECK(out[1].track_id == 2);
}

TEST_CASE("stationary detection keeps one id") {
  Tracker t;
  std::set<TrackId> ids;
  for (int f = 1; f <= 10; ++f) {
    const std::vector<Detection> d{{f, BoundingBox(200, 200, 40, 40), 1.0}};
    for (const auto& b : t.step(f, d)) ids.insert(b.track_id);
  }
  CHECK(ids == std::set<TrackId>{1});
}

TEST_CASE("reappearing after max_age + 1 missing frames gets a new id") {
  TrackerParams params;
  Tracker t(params);
  const BoundingBox box(200, 200, 40, 40);
  int f = 1;
  for (; f <= 5; ++f) t.step(f, std::vector<Detection>{{f, box, 1.0}});
  for (int k = 0; k < params.max_age + 1; ++k, ++f) t.step(f, {});
  CHECK(t.active().empty());
  std::set<TrackId> late;
  for (int k = 0; k < 4; ++k, ++f)
    for (const auto& b : t.step(f, std::vector<Detection>{{f, box, 1.0}})) late.insert(b.track_id);
  CHECK(late == std::set<TrackId>{2});
}

TEST_CASE("short gap keeps the id") {
  Tracker t;
  const BoundingBox box(200, 200, 40, 40);
  int f = 1;
  for (; f <= 5; ++f) t.step(f, std::vector<Detection>{{f, box, 1.0}});
  for (int k = 0; k < 2; ++k, ++f) t.step(f, {});
  const auto out = t.step(f, std::vector<Detection>{{f, box, 1.0}});
  REQUIRE(out.size() == 1);
  CHECK(out[0].track_id == 1);
}

TEST_CASE("out-of-order frames are rejected") {
  Tracker t;
  t.step(5, {});
  CHECK_THROWS_AS(t.step(5, {}), OutOfOrderFrame);
  CHECK_THROWS_AS(t.step(3, {}), OutOfOrderFrame);
}

TEST_CASE("parameter validation") {
  TrackerParams p;
  p.iou_gate = 0.0;
  CHECK_THROWS_AS(p.validate(), InvariantError);
  p = {};
  p.max_age = 0;
  CHECK_THROWS_AS(p.validate(), InvariantError);
  p = {};
  p.min_hits = 0;
  CHECK_THROWS_AS(p.validate(), InvariantError);
}

TEST_CASE("run on separated walkers") {
  CHECK(run_tracker({}).empty());
  const auto gt = two_walkers(100);
  const auto frames = as_detections(gt);
  const auto hyp = run_tracker(frames);
  CHECK(hyp.size() == 2);
  const auto rep = evaluate(gt, hyp);
  CHECK(rep.counts.idsw == 0);
  CHECK(rep.mota >= 0.99);
  CHECK(io::format_tracks(hyp) == io::format_tracks(run_tracker(frames)));
}

TEST_CASE("emitted boxes are unique per frame and ids are not reused") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(0, 600), size(20, 60);
  std::bernoulli_distribution present(0.6);
  for (int trial = 0; trial < 20; ++trial) {
    FrameDetections frames;
    for (int f = 1; f <= 60; ++f) {
      auto& v = frames[f];
      for (int k = 0; k < 4; ++k)
        if (present(rng)) v.emplace_back(f, BoundingBox(pos(rng), pos(rng), size(rng), size(rng)), 1.0);
    }
    Tracker t;
    std::set<TrackId> retired, live_prev;
    for (const auto& [f, dets] : frames) {
      std::set<std::pair<FrameIndex, TrackId>> seen;
      for (const auto& b : t.step(f, dets)) CHECK(seen.insert({b.frame_index, b.track_id}).second);
      std::set<TrackId> live;
      for (const auto& a : t.active()) {
        live.insert(a.track_id);
        CHECK(retired.count(a.track_id) == 0);
        CHECK(a.time_since_update <= a.age);
      }
      for (const auto id : live_prev)
        if (!live.count(id)) retired.insert(id);
      live_prev = live;
    }
  }
}

TEST_CASE("per-gap prediction flag") {
  TrackerParams p;
  p.predict_per_gap = true;
  std::vector<TrackedBox> pts;
  for (int f = 1; f <= 40; f += 2) pts.emplace_back(f, 1, BoundingBox(100.0 + 6.0 * f, 100, 40, 40));
  const std::vector<Track> gt{Track(1, pts)};
  const auto hyp = run_tracker(as_detections(gt), p);
  CHECK(hyp.size() == 1);
}
