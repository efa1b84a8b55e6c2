#include "headtrack/io.hpp"

#include <algorithm>
#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "headtrack/errors.hpp"
#include "headtrack/heatmap.hpp"

namespace headtrack::io {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view field, std::size_t line) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw FormatError("not a number: '" + std::string(field) + "'", line);
  }
  return v;
}

std::int64_t parse_int(std::string_view field, std::size_t line) {
  field = trim(field);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    // Some tools write integral columns as "3.0".
    const double d = parse_real(field, line);
    if (d != std::floor(d) || std::abs(d) > 9e15) {
      throw FormatError("not an integer: '" + std::string(field) + "'", line);
    }
    return static_cast<std::int64_t>(d);
  }
  return v;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    fn(std::string_view(text).substr(pos, end - pos), line_no);
    pos = end + 1;
  }
}

std::vector<std::string_view> split_view(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(sep, pos);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

template <typename Fn>
auto with_line(std::size_t line, Fn&& fn) {
  try {
    return fn();
  } catch (const FormatError&) {
    throw;
  } catch (const InvariantError& e) {
    throw InvariantError("line " + std::to_string(line) + ": " + e.what());
  }
}

void append_row(std::string& out, FrameIndex frame, TrackId id, const BoundingBox& b, double conf) {
  out += std::to_string(frame);
  out += ',';
  out += std::to_string(id);
  for (double v : {b.left(), b.top(), b.width(), b.height(), conf}) {
    out += ',';
    out += format_g6(v);
  }
  out += ",-1,-1,-1\n";
}

}  // namespace

std::string format_g6(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string format_real(double value) {
  std::string s = format_g6(value);
  if (std::isfinite(value) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  for (auto f : split_view(line, sep)) out.emplace_back(trim(f));
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("write failed: " + path.string());
}

MotContents parse_mot_csv(const std::string& text) {
  MotContents result;
  std::vector<TrackedBox> boxes;
  std::map<TrackId, std::set<FrameIndex>> seen;
  for_each_line(text, [&](std::string_view raw, std::size_t line) {
    const auto line_text = trim(raw);
    if (line_text.empty()) return;
    const auto fields = split_view(line_text, ',');
    if (fields.size() != 10) {
      throw FormatError("expected 10 fields, found " + std::to_string(fields.size()), line);
    }
    const auto frame = parse_int(fields[0], line);
    const auto id = parse_int(fields[1], line);
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parse_real(fields[2 + i], line);
    if (frame < 1) throw InvariantError("line " + std::to_string(line) + ": frame must be >= 1");
    with_line(line, [&] {
      const BoundingBox box(v[0], v[1], v[2], v[3]);
      if (id == -1) {
        if (!boxes.empty()) throw InvariantError("detection row in a file of track rows");
        result.detections.emplace_back(frame, box, v[4]);
      } else {
        if (!result.detections.empty()) throw InvariantError("track row in a file of detection rows");
        if (!seen[id].insert(frame).second) {
          throw InvariantError("duplicate (frame " + std::to_string(frame) + ", id " + std::to_string(id) + ")");
        }
        boxes.emplace_back(frame, id, box);
      }
    });
  });
  if (!boxes.empty()) result.tracks = group_into_tracks(std::move(boxes));
  return result;
}

MotContents read_mot_csv(const std::filesystem::path& path) { return parse_mot_csv(read_text(path)); }

std::vector<Detection> read_detections(const std::filesystem::path& path) {
  auto c = read_mot_csv(path);
  if (!c.tracks.empty()) throw InvariantError(path.string() + ": expected detections (id -1), found tracks");
  return std::move(c.detections);
}

std::vector<Track> read_tracks(const std::filesystem::path& path) {
  auto c = read_mot_csv(path);
  if (!c.detections.empty()) throw InvariantError(path.string() + ": expected tracks, found detections (id -1)");
  return std::move(c.tracks);
}

std::string format_detections(const std::vector<Detection>& detections) {
  std::string out;
  for (const auto& d : detections) {
    if (d.frame_index < 1) throw InvariantError("MOT frames are 1-based");
    append_row(out, d.frame_index, -1, d.bbox, d.confidence);
  }
  return out;
}

std::string format_tracks(const std::vector<Track>& tracks) {
  std::string out;
  for (const auto& b : flatten(tracks)) {
    if (b.frame_index < 1) throw InvariantError("MOT frames are 1-based");
    append_row(out, b.frame_index, b.track_id, b.bbox, 1.0);
  }
  return out;
}

void write_mot_csv(const std::vector<Detection>& detections, const std::filesystem::path& path) {
  write_text(path, format_detections(detections));
}

void write_mot_csv(const std::vector<Track>& tracks, const std::filesystem::path& path) {
  write_text(path, format_tracks(tracks));
}

// ---------------------------------------------------------------------------
// VOC XML

VocFrame parse_voc_xml(const std::string& text, FrameIndex frame, const std::optional<std::string>& id_tag) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw FormatError(std::string("malformed XML: ") + e.what());
  }
  const auto& ann = tree.get_child_optional("annotation") ? tree.get_child("annotation") : tree;

  auto number = [](const pt::ptree& node, const std::string& key) {
    const auto v = node.get_optional<std::string>(key);
    if (!v) throw FormatError("missing <" + key + ">");
    return parse_real(*v, 0);
  };

  VocFrame result{frame, 0, 0, {}};
  if (const auto size = ann.get_child_optional("size")) {
    result.width = static_cast<int>(number(*size, "width"));
    result.height = static_cast<int>(number(*size, "height"));
  }
  for (const auto& [name, obj] : ann) {
    if (name != "object") continue;
    const auto bnd = obj.get_child_optional("bndbox");
    if (!bnd) throw FormatError("object without <bndbox>");
    const double xmin = number(*bnd, "xmin");
    const double ymin = number(*bnd, "ymin");
    const double xmax = number(*bnd, "xmax");
    const double ymax = number(*bnd, "ymax");
    VocObject o{BoundingBox::from_corners(xmin, ymin, xmax, ymax), std::nullopt};
    if (id_tag) {
      const auto id = obj.get_optional<std::string>(*id_tag);
      if (!id) throw MissingIdError("object without <" + *id_tag + ">");
      o.track_id = parse_int(*id, 0);
    }
    result.objects.push_back(std::move(o));
  }
  return result;
}

std::vector<VocFrame> read_voc_xml_dir(const std::filesystem::path& dir, const std::optional<std::string>& id_tag) {
  std::vector<std::pair<FrameIndex, std::filesystem::path>> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".xml") continue;
    const std::string stem = entry.path().stem().string();
    FrameIndex frame = 0;
    auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), frame);
    if (stem.empty() || ec != std::errc() || ptr != stem.data() + stem.size() || frame < 0) {
      throw FormatError(entry.path().string() + ": file stem is not a frame number");
    }
    files.emplace_back(frame, entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<VocFrame> frames;
  frames.reserve(files.size());
  for (const auto& [frame, path] : files) {
    try {
      frames.push_back(parse_voc_xml(read_text(path), frame, id_tag));
    } catch (const MissingIdError& e) {
      throw MissingIdError(path.string() + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Heatmap export

std::string encode_pgm16(const Heatmap& heatmap) {
  std::string out = "P5\n" + std::to_string(heatmap.width()) + " " + std::to_string(heatmap.height()) + "\n65535\n";
  const std::uint64_t max = heatmap.max_cell();
  out.reserve(out.size() + heatmap.cells().size() * 2);
  for (const auto cell : heatmap.cells()) {
    // round(cell * 65535 / max), halves rounded up
    const std::uint64_t v = max == 0 ? 0 : (2 * 65535 * std::uint64_t{cell} + max) / (2 * max);
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

void write_pgm16(const Heatmap& heatmap, const std::filesystem::path& path) {
  write_text(path, encode_pgm16(heatmap));
}

std::string format_heatmap_csv(const Heatmap& heatmap) {
  std::string out = "x,y,count\n";
  for (int y = 0; y < heatmap.height(); ++y) {
    for (int x = 0; x < heatmap.width(); ++x) {
      if (const auto c = heatmap.at(x, y)) {
        out += std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(c) + "\n";
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Labels

std::vector<LabelRow> parse_labels(const std::string& text) {
  std::vector<LabelRow> rows;
  std::set<TrackId> ids;
  bool header_seen = false;
  for_each_line(text, [&](std::string_view raw, std::size_t line) {
    const auto t = trim(raw);
    if (t.empty()) return;
    if (!header_seen) {
      if (t != "track_id,label") throw FormatError("expected header 'track_id,label'", line);
      header_seen = true;
      return;
    }
    const auto f = split_view(t, ',');
    if (f.size() != 2) throw FormatError("expected 2 fields", line);
    const auto id = parse_int(f[0], line);
    const auto value = parse_int(f[1], line);
    if (value < 0 || value >= kNumClasses) {
      throw FormatError("label must be 0, 1 or 2, got " + std::to_string(value), line);
    }
    if (id < 1) throw InvariantError("line " + std::to_string(line) + ": track id must be >= 1");
    if (!ids.insert(id).second) {
      throw InvariantError("line " + std::to_string(line) + ": duplicate track id " + std::to_string(id));
    }
    rows.push_back({id, static_cast<ClassLabel>(value)});
  });
  if (!header_seen) throw FormatError("missing header 'track_id,label'");
  return rows;
}

std::string format_labels(const std::vector<LabelRow>& rows) {
  std::string out = "track_id,label\n";
  for (const auto& r : rows) {
    out += std::to_string(r.track_id) + "," + std::to_string(static_cast<int>(r.label)) + "\n";
  }
  return out;
}

std::vector<LabelRow> read_labels(const std::filesystem::path& path) { return parse_labels(read_text(path)); }

void write_labels(const std::vector<LabelRow>& rows, const std::filesystem::path& path) {
  write_text(path, format_labels(rows));
}

}  // namespace headtrack::io
