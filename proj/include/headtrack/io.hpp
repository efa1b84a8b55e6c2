#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "headtrack/core.hpp"

namespace headtrack {

class Heatmap;

namespace io {

// Contents of a MOTChallenge-style CSV: either detection rows (id = -1) or
// identity-bearing rows grouped into tracks. An empty file has neither.
struct MotContents {
  std::vector<Detection> detections;
  std::vector<Track> tracks;
};

MotContents read_mot_csv(const std::filesystem::path& path);
MotContents parse_mot_csv(const std::string& text);

// Convenience wrappers that reject the other row kind.
std::vector<Detection> read_detections(const std::filesystem::path& path);
std::vector<Track> read_tracks(const std::filesystem::path& path);

// Rows use %.6g for reals; tracks are written ordered by (frame, id) with
// confidence 1.
std::string format_detections(const std::vector<Detection>& detections);
std::string format_tracks(const std::vector<Track>& tracks);
void write_mot_csv(const std::vector<Detection>& detections, const std::filesystem::path& path);
void write_mot_csv(const std::vector<Track>& tracks, const std::filesystem::path& path);

struct VocObject {
  BoundingBox bbox;
  std::optional<TrackId> track_id;
};

struct VocFrame {
  FrameIndex frame_index;
  int width;
  int height;
  std::vector<VocObject> objects;
};

// Reads every *.xml file in dir; the frame index is the numeric file stem.
// When id_tag is set each object must carry that child element holding its
// track id (MissingIdError otherwise). Frames are returned in frame order.
std::vector<VocFrame> read_voc_xml_dir(const std::filesystem::path& dir,
                                       const std::optional<std::string>& id_tag = "trackid");
VocFrame parse_voc_xml(const std::string& text, FrameIndex frame,
                       const std::optional<std::string>& id_tag);

// Binary P5 graymap, maxval 65535, big-endian samples scaled so the
// largest cell maps to 65535.
std::string encode_pgm16(const Heatmap& heatmap);
void write_pgm16(const Heatmap& heatmap, const std::filesystem::path& path);

// "x,y,count" rows for nonzero cells in row-major order.
std::string format_heatmap_csv(const Heatmap& heatmap);

struct LabelRow {
  TrackId track_id;
  ClassLabel label;
  bool operator==(const LabelRow&) const = default;
};

std::vector<LabelRow> parse_labels(const std::string& text);
std::string format_labels(const std::vector<LabelRow>& rows);
std::vector<LabelRow> read_labels(const std::filesystem::path& path);
void write_labels(const std::vector<LabelRow>& rows, const std::filesystem::path& path);

// Shared text helpers.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
// %.6g
std::string format_g6(double value);
// %.6g, with ".0" appended when the result would read as an integer.
std::string format_real(double value);
std::vector<std::string> split_fields(const std::string& line, char sep = ',');

}  // namespace io
}  // namespace headtrack
