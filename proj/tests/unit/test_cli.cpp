#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "headtrack/heatmap.hpp"
#include "headtrack/io.hpp"
#include "headtrack/tracker.hpp"
#include "test_util.hpp"

using namespace headtrack;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) { return io::read_text(p); }

// Byte content of every file below dir, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> m;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) m[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return m;
}

bool help_shows(const std::string& help, const std::string& flag, const std::string& value) {
  const auto at = help.find(flag);
  if (at == std::string::npos) return false;
  const auto eol = help.find('\n', at);
  return help.substr(at, eol - at).find("[" + value + "]") != std::string::npos;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"nope"}).code == cli::kUsage);
  CHECK(run({"sample-size", "--n", "920", "--bogus", "1"}).code == cli::kUsage);
  CHECK(run({"sample-size"}).code == cli::kUsage);
  CHECK(run({"sample-size", "--help"}).code == cli::kOk);
}

TEST_CASE("sample-size") {
  const auto r = run({"sample-size", "--n", "920"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out == "272\n");
  CHECK(run({"sample-size", "--n", "11005"}).out == "372\n");
  CHECK(run({"sample-size", "--n", "100", "--margin", "0"}).code == cli::kInputError);
}

TEST_CASE("track and eval") {
  const auto dir = testutil::temp_dir("cli_track");
  std::string det;
  for (int f = 1; f <= 30; ++f)
    det += std::to_string(f) + ",-1," + std::to_string(100 + 2 * f) + ",100,40,40,1,-1,-1,-1\n";
  io::write_text(dir / "d.csv", det);
  const auto t = run({"track", "--det", (dir / "d.csv").string(), "--out", (dir / "t.csv").string()});
  CHECK(t.code == cli::kOk);
  const auto tracks = io::read_tracks(dir / "t.csv");
  CHECK(tracks.size() == 1);

  const auto e = run({"eval", "--gt", (dir / "t.csv").string(), "--hyp", (dir / "t.csv").string()});
  CHECK(e.code == cli::kOk);
  CHECK(e.out.rfind("mota=1.0 ", 0) == 0);

  io::write_text(dir / "bad.csv", "1,2,3\n");
  CHECK(run({"eval", "--gt", (dir / "bad.csv").string(), "--hyp", (dir / "t.csv").string()}).code ==
        cli::kInputError);
  CHECK(run({"eval", "--gt", (dir / "missing.csv").string(), "--hyp", (dir / "t.csv").string()}).code ==
        cli::kInputError);
  CHECK(run({"track", "--det", (dir / "d.csv").string(), "--out", (dir / "x.csv").string(), "--iou-gate", "0"})
            .code == cli::kInputError);
  fs::remove_all(dir);
}

TEST_CASE("help lists behavioral defaults") {
  const TrackerParams tp;
  const auto track = run({"track", "--help"}).out;
  CHECK(help_shows(track, "--iou-gate", io::format_g6(tp.iou_gate)));
  CHECK(help_shows(track, "--max-age", std::to_string(tp.max_age)));
  CHECK(help_shows(track, "--min-hits", std::to_string(tp.min_hits)));
  CHECK(help_shows(track, "--seed", "42"));
  CHECK(help_shows(run({"eval", "--help"}).out, "--match-iou", "0.5"));
  const auto sweep = run({"sweep", "--help"}).out;
  CHECK(help_shows(sweep, "--p-grid", "0:0.9:0.1"));
  CHECK(help_shows(sweep, "--seeds", "5"));
  CHECK(help_shows(sweep, "--jobs", "1"));
  CHECK(help_shows(sweep, "--miss-prob", "0.1"));
  CHECK(help_shows(sweep, "--center-jitter", "2"));
  CHECK(help_shows(sweep, "--fp-per-frame", "0.2"));
  const FilterParams fp;
  const auto filter = run({"filter", "--help"}).out;
  CHECK(help_shows(filter, "--min-frames", std::to_string(fp.min_frames)));
  CHECK(help_shows(filter, "--min-distance-factor", "2"));
  const auto ss = run({"sample-size", "--help"}).out;
  CHECK(help_shows(ss, "--confidence", "0.95"));
  CHECK(help_shows(ss, "--margin", "0.05"));
  const auto train = run({"train", "--help"}).out;
  CHECK(help_shows(train, "--g", "64"));
  CHECK(help_shows(train, "--lr", "0.1"));
  CHECK(help_shows(train, "--iters", "500"));
  CHECK(help_shows(train, "--l2", "0.0001"));
  CHECK(help_shows(train, "--split", "60,20,20"));
  CHECK(help_shows(run({"heatmap", "--help"}).out, "--radius-rule", "mean-half-extent"));
}

TEST_CASE("pipeline reruns are byte-identical") {
  auto pass = [](const fs::path& dir) {
    const auto s = dir.string();
    std::vector<Run> r;
    r.push_back(run({"simulate", "--kind", "sequence", "--agents", "3", "--duration", "120", "--out", s + "/seq"}));
    r.push_back(run({"simulate", "--customers", "10", "--staff", "10", "--errors", "10", "--duration", "300", "--out",
                     s + "/pop"}));
    r.push_back(run({"perturb", "--gt", s + "/seq/gt.csv", "--out", s + "/det.csv"}));
    r.push_back(run({"track", "--det", s + "/det.csv", "--out", s + "/trk.csv"}));
    r.push_back(run({"eval", "--gt", s + "/seq/gt.csv", "--hyp", s + "/trk.csv", "--out", s + "/eval.csv"}));
    r.push_back(run({"sweep", "--gt", s + "/seq/gt.csv", "--seeds", "2", "--p-grid", "0,0.5", "--jobs", "2",
                     "--out", s + "/sweep.csv"}));
    r.push_back(run({"heatmap", "--tracks", s + "/pop/tracks.csv", "--aggregate", "--per-track", "--pool", "8",
                     "--out", s + "/hm"}));
    r.push_back(run({"filter", "--tracks", s + "/pop/tracks.csv", "--min-frames", "100", "--out", s + "/flt.csv"}));
    r.push_back(run({"sample-size", "--n", "920", "--out", s + "/n.txt"}));
    r.push_back(run({"sample", "--tracks", s + "/pop/tracks.csv", "--n", "5", "--out", s + "/smp.csv"}));
    r.push_back(run({"histogram", "--tracks", s + "/pop/tracks.csv", "--out", s + "/hist.csv"}));
    r.push_back(run({"train", "--tracks", s + "/pop/tracks.csv", "--labels", s + "/pop/labels.csv", "--g", "8",
                     "--out", s + "/model"}));
    r.push_back(run({"train", "--features", s + "/hm/features.csv", "--labels", s + "/pop/labels.csv", "--out",
                     s + "/model2"}));
    r.push_back(run({"predict", "--model", s + "/model/model.txt", "--tracks", s + "/pop/tracks.csv", "--out",
                     s + "/pred.csv"}));
    r.push_back(run({"gradcheck", "--tracks", s + "/pop/tracks.csv", "--labels", s + "/pop/labels.csv", "--out",
                     s + "/gc.txt"}));
    return r;
  };
  const auto a = testutil::temp_dir("cli_a"), b = testutil::temp_dir("cli_b");
  const auto ra = pass(a), rb = pass(b);
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) {
    INFO("command " << i << ": " << ra[i].err);
    CHECK(ra[i].code == cli::kOk);
    CHECK(ra[i].out == rb[i].out);
  }
  const auto sa = snapshot(a), sb = snapshot(b);
  CHECK(sa.size() >= 20);
  CHECK(sa == sb);
  CHECK(slurp(a / "model" / "model.txt") == slurp(a / "model2" / "model.txt"));
  const auto gc = slurp(a / "gc.txt");
  CHECK(std::stod(gc.substr(gc.find('\n') + 1)) <= 1e-5);
  fs::remove_all(a);
  fs::remove_all(b);
}
