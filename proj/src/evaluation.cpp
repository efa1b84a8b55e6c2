#include "headtrack/evaluation.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "headtrack/assignment.hpp"
#include "headtrack/errors.hpp"
#include "headtrack/io.hpp"

namespace headtrack {
namespace {

struct FrameBoxes {
  std::vector<TrackId> ids;
  std::vector<BoundingBox> boxes;
};

std::map<FrameIndex, FrameBoxes> by_frame(std::span<const Track> tracks) {
  std::map<FrameIndex, FrameBoxes> frames;
  for (const auto& b : flatten(tracks)) {
    auto& f = frames[b.frame_index];
    f.ids.push_back(b.track_id);
    f.boxes.push_back(b.bbox);
  }
  return frames;
}

}  // namespace

double mota(const MotCounts& c) {
  if (c.gt == 0) throw EmptyGroundTruth();
  return 1.0 - static_cast<double>(c.fn + c.fp + c.idsw) / static_cast<double>(c.gt);
}

MotaReport evaluate(std::span<const Track> gt, std::span<const Track> hyp, double match_iou) {
  if (!(match_iou > 0.0 && match_iou <= 1.0)) throw InvariantError("match_iou must be in (0,1]");
  if (total_boxes(gt) == 0) throw EmptyGroundTruth();

  const auto gt_frames = by_frame(gt);
  const auto hyp_frames = by_frame(hyp);
  std::vector<FrameIndex> frames;
  for (const auto& [f, _] : gt_frames) frames.push_back(f);
  for (const auto& [f, _] : hyp_frames) frames.push_back(f);
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  static const FrameBoxes kEmpty;
  std::unordered_map<TrackId, TrackId> last_match;  // gt id -> hyp id
  MotCounts counts;

  for (const auto frame : frames) {
    const auto git = gt_frames.find(frame);
    const auto hit = hyp_frames.find(frame);
    const FrameBoxes& g = git == gt_frames.end() ? kEmpty : git->second;
    const FrameBoxes& h = hit == hyp_frames.end() ? kEmpty : hit->second;
    counts.gt += g.ids.size();

    std::vector<char> g_done(g.ids.size(), 0), h_done(h.ids.size(), 0);
    std::unordered_map<TrackId, std::size_t> h_index;
    for (std::size_t j = 0; j < h.ids.size(); ++j) h_index[h.ids[j]] = j;

    std::size_t matched = 0;
    for (std::size_t i = 0; i < g.ids.size(); ++i) {
      const auto lm = last_match.find(g.ids[i]);
      if (lm == last_match.end()) continue;
      const auto hj = h_index.find(lm->second);
      if (hj == h_index.end() || h_done[hj->second]) continue;
      if (iou(g.boxes[i], h.boxes[hj->second]) >= match_iou) {
        g_done[i] = h_done[hj->second] = 1;
        ++matched;
      }
    }

    std::vector<std::size_t> gi, hj;
    for (std::size_t i = 0; i < g.ids.size(); ++i)
      if (!g_done[i]) gi.push_back(i);
    for (std::size_t j = 0; j < h.ids.size(); ++j)
      if (!h_done[j]) hj.push_back(j);

    if (!gi.empty() && !hj.empty()) {
      // A gated pair costs 1 - IOU < 1; an ungated one costs more than any
      // full set of gated pairs, so cardinality is maximized first.
      const double blocked = static_cast<double>(std::min(gi.size(), hj.size())) + 1.0;
      Eigen::MatrixXd cost(static_cast<Eigen::Index>(gi.size()), static_cast<Eigen::Index>(hj.size()));
      Eigen::MatrixXd overlap(cost.rows(), cost.cols());
      for (std::size_t a = 0; a < gi.size(); ++a) {
        for (std::size_t b = 0; b < hj.size(); ++b) {
          const double o = iou(g.boxes[gi[a]], h.boxes[hj[b]]);
          const auto r = static_cast<Eigen::Index>(a), c = static_cast<Eigen::Index>(b);
          overlap(r, c) = o;
          cost(r, c) = o >= match_iou ? 1.0 - o : blocked;
        }
      }
      for (const auto& [a, b] : solve_assignment(cost)) {
        if (overlap(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) < match_iou) continue;
        const TrackId gid = g.ids[gi[a]];
        const TrackId hid = h.ids[hj[b]];
        const auto lm = last_match.find(gid);
        if (lm != last_match.end() && lm->second != hid) ++counts.idsw;
        last_match[gid] = hid;
        ++matched;
      }
    }
    counts.fn += g.ids.size() - matched;
    counts.fp += h.ids.size() - matched;
  }
  return {counts, mota(counts)};
}

std::vector<SweepPoint> evaluate_sweep_points(std::span<const Track> gt,
                                              const std::vector<std::pair<double, std::vector<Track>>>& hyps,
                                              double match_iou) {
  std::vector<SweepPoint> points;
  points.reserve(hyps.size());
  for (const auto& [p, tracks] : hyps) points.push_back({p, evaluate(gt, tracks, match_iou)});
  std::stable_sort(points.begin(), points.end(), [](const SweepPoint& a, const SweepPoint& b) { return a.p < b.p; });
  return points;
}

std::string format_sweep_points(std::span<const SweepPoint> points) {
  std::string out = "p,fp,fn,idsw,gt,mota\n";
  for (const auto& pt : points) {
    const auto& c = pt.report.counts;
    out += io::format_real(pt.p) + "," + std::to_string(c.fp) + "," + std::to_string(c.fn) + "," +
           std::to_string(c.idsw) + "," + std::to_string(c.gt) + "," + io::format_real(pt.report.mota) + "\n";
  }
  return out;
}

}  // namespace headtrack
