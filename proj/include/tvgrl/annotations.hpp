#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tvgrl/json_types.hpp"
#include "tvgrl/types.hpp"

namespace tvgrl {

/// One temporal-grounding ground-truth record.
struct Annotation {
  std::string id;
  std::string video_ref;
  double duration_s = 0.0;
  Segment segment;
  std::string query;
  // Fields of a native record that this library does not interpret; written
  // back unchanged.
  Json extra = Json::object();

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Empty when all invariants hold. Messages are stable strings
/// ("segment exceeds duration", "empty query", ...).
std::vector<std::string> validate(const Annotation& a);

enum class AnnotationFormat { Native, Charades, ActivityNet, QvHighlight };

AnnotationFormat parse_annotation_format(std::string_view name);
std::string_view to_string(AnnotationFormat format);

struct LoadOptions {
  AnnotationFormat format = AnnotationFormat::Native;
  // Strict: the first malformed or invalid record aborts the load.
  // Lenient: such records are skipped and reported.
  bool strict = false;
  // Charades-STA records carry no duration; durations are looked up here by
  // video id. Videos missing from the map fall back to the segment end.
  std::map<std::string, double> durations;
};

struct SkippedRecord {
  std::size_t line = 0;  // 1-based line (or record index for whole-file JSON)
  std::string reason;
};

struct LoadReport {
  std::vector<Annotation> annotations;
  std::vector<SkippedRecord> skipped;
};

/// Reads annotations in file order. Throws IoError when the file cannot be
/// read; in strict mode throws ParseError / ValidationError carrying the line.
LoadReport load_annotations(const std::filesystem::path& path,
                            const LoadOptions& options);

/// Same as load_annotations but over in-memory text.
LoadReport parse_annotations(std::string_view text, const LoadOptions& options);

/// Reads a Charades-style "id,...,length" CSV (header row required, columns
/// named "id" and "length") into a duration map.
std::map<std::string, double> load_durations_csv(
    const std::filesystem::path& path);

/// A ground-truth record that may carry several windows for the same query.
struct MultiSegmentRecord {
  std::string id;
  std::string video_ref;
  double duration_s = 0.0;
  std::string query;
  std::vector<Segment> windows;
};

/// One Annotation per window, sharing video/duration/query; ids get a "#k"
/// suffix when k > 1. Throws ArgumentError when there are no windows and
/// ValidationError when a window is invalid against the duration.
std::vector<Annotation> split_multi_segment(const MultiSegmentRecord& record);

/// Native record: {"video", "duration", "segment": [s, e], "query", "id", ...}.
Json to_json(const Annotation& a);
/// Throws ParseError on missing or mistyped fields. Does not validate.
Annotation annotation_from_json(const Json& j);

/// One native record per line.
std::string to_native_lines(const std::vector<Annotation>& annotations);

}  // namespace tvgrl
