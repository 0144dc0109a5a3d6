#include "tvgrl/annotations.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"

namespace tvgrl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      if (pos < text.size()) lines.push_back(text.substr(pos));
      break;
    }
    lines.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

double parse_number(std::string_view s, const char* what) {
  s = trim(s);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string("malformed ") + what + " '" + std::string(s) + "'");
  }
  return value;
}

double json_number(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ParseError(std::string("field '") + key + "' is not a number");
  return v.get<double>();
}

std::string json_string(const Json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  // Dataset ids are sometimes numeric (QVHighlights qid).
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError(std::string("field '") + key + "' is not a string");
}

std::vector<Segment> json_windows(const Json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    throw ParseError(std::string("missing or non-array field '") + key + "'");
  }
  std::vector<Segment> out;
  for (const auto& w : j.at(key)) out.push_back(segment_from_json(w));
  return out;
}

class Collector {
 public:
  explicit Collector(const LoadOptions& options) : options_(options) {}

  // Runs `body` for one record; converts failures into skips or rethrows.
  template <typename F>
  void record(std::size_t line, F&& body) {
    try {
      body();
    } catch (const ParseError& e) {
      if (options_.strict) throw ParseError(e.what(), line);
      report_.skipped.push_back({line, e.what()});
    } catch (const ValidationError& e) {
      if (options_.strict) throw ValidationError(e.what(), e.violations(), line);
      report_.skipped.push_back({line, e.what()});
    } catch (const ArgumentError& e) {
      if (options_.strict) throw ParseError(e.what(), line);
      report_.skipped.push_back({line, e.what()});
    } catch (const Json::exception& e) {
      if (options_.strict) throw ParseError(e.what(), line);
      report_.skipped.push_back({line, e.what()});
    }
  }

  void emit(Annotation a) {
    auto violations = validate(a);
    if (!violations.empty()) {
      std::string msg = "invalid annotation: " + violations.front();
      throw ValidationError(msg, std::move(violations));
    }
    report_.annotations.push_back(std::move(a));
  }

  LoadReport take() { return std::move(report_); }

 private:
  const LoadOptions& options_;
  LoadReport report_;
};

void parse_native(std::string_view text, Collector& out) {
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    out.record(i + 1, [&] {
      auto a = annotation_from_json(Json::parse(line));
      if (a.id.empty()) a.id = a.video_ref + "@" + std::to_string(i + 1);
      out.emit(std::move(a));
    });
  }
}

// Charades-STA: "<video> <start> <end>##<query>", optionally with a fourth
// numeric field carrying the duration.
void parse_charades(std::string_view text, const LoadOptions& options,
                    Collector& out) {
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    out.record(i + 1, [&] {
      const auto sep = line.find("##");
      if (sep == std::string_view::npos) throw ParseError("missing '##' separator");
      std::istringstream head{std::string(line.substr(0, sep))};
      std::vector<std::string> fields;
      for (std::string f; head >> f;) fields.push_back(f);
      if (fields.size() != 3 && fields.size() != 4) {
        throw ParseError("expected '<video> <start> <end>[ <duration>]' before '##'");
      }
      Annotation a;
      a.video_ref = fields[0];
      a.segment = {parse_number(fields[1], "start"), parse_number(fields[2], "end")};
      a.query = std::string(trim(line.substr(sep + 2)));
      if (auto it = options.durations.find(a.video_ref); it != options.durations.end()) {
        a.duration_s = it->second;
      } else if (fields.size() == 4) {
        a.duration_s = parse_number(fields[3], "duration");
      } else {
        a.duration_s = a.segment.end_s;
      }
      a.id = a.video_ref + "@" + std::to_string(i + 1);
      out.emit(std::move(a));
    });
  }
}

// ActivityNet Captions: one JSON object keyed by video id, each entry with
// "duration", "timestamps" and "sentences" arrays of equal length.
void parse_activitynet(std::string_view text, Collector& out) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed ActivityNet JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("ActivityNet file must hold a JSON object");
  std::size_t index = 0;
  for (const auto& [video, entry] : root.items()) {
    ++index;
    out.record(index, [&] {
      const double duration = json_number(entry, "duration");
      const auto windows = json_windows(entry, "timestamps");
      if (!entry.contains("sentences") || !entry.at("sentences").is_array()) {
        throw ParseError("missing or non-array field 'sentences'");
      }
      const auto& sentences = entry.at("sentences");
      if (sentences.size() != windows.size()) {
        throw ParseError("timestamps/sentences length mismatch");
      }
      // Each (window, sentence) pair is its own query, so validate all before
      // emitting any to keep a record all-or-nothing.
      std::vector<Annotation> batch;
      for (std::size_t k = 0; k < windows.size(); ++k) {
        Annotation a;
        a.video_ref = video;
        a.duration_s = duration;
        a.segment = windows[k];
        if (!sentences[k].is_string()) throw ParseError("sentence is not a string");
        a.query = std::string(trim(sentences[k].get<std::string>()));
        a.id = video + "#" + std::to_string(k);
        auto violations = validate(a);
        if (!violations.empty()) {
          const auto msg = "invalid annotation: " + violations.front();
          throw ValidationError(msg, std::move(violations));
        }
        batch.push_back(std::move(a));
      }
      for (auto& a : batch) out.emit(std::move(a));
    });
  }
}

// QVHighlights: JSON lines with "qid", "query", "vid", "duration" and
// "relevant_windows". Saliency annotations are ignored.
void parse_qvhighlight(std::string_view text, Collector& out) {
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    out.record(i + 1, [&] {
      const auto j = Json::parse(line);
      MultiSegmentRecord rec;
      rec.id = json_string(j, "qid");
      rec.video_ref = json_string(j, "vid");
      rec.duration_s = json_number(j, "duration");
      rec.query = json_string(j, "query");
      rec.windows = json_windows(j, "relevant_windows");
      for (auto& a : split_multi_segment(rec)) out.emit(std::move(a));
    });
  }
}

}  // namespace

std::vector<std::string> validate(const Annotation& a) {
  std::vector<std::string> out;
  if (a.video_ref.empty()) out.emplace_back("empty video reference");
  if (!std::isfinite(a.duration_s) || a.duration_s < 0.0) {
    out.emplace_back("invalid duration");
  }
  const auto& s = a.segment;
  if (!std::isfinite(s.start_s) || !std::isfinite(s.end_s)) {
    out.emplace_back("non-finite segment bound");
  } else {
    if (s.start_s < 0.0) out.emplace_back("negative segment start");
    if (s.start_s > s.end_s) out.emplace_back("segment start after end");
    if (s.end_s > a.duration_s) out.emplace_back("segment exceeds duration");
  }
  if (trim(a.query).empty()) out.emplace_back("empty query");
  return out;
}

AnnotationFormat parse_annotation_format(std::string_view name) {
  if (name == "native") return AnnotationFormat::Native;
  if (name == "charades") return AnnotationFormat::Charades;
  if (name == "activitynet") return AnnotationFormat::ActivityNet;
  if (name == "qvhighlight") return AnnotationFormat::QvHighlight;
  throw ArgumentError("unknown annotation format '" + std::string(name) + "'");
}

std::string_view to_string(AnnotationFormat format) {
  switch (format) {
    case AnnotationFormat::Native: return "native";
    case AnnotationFormat::Charades: return "charades";
    case AnnotationFormat::ActivityNet: return "activitynet";
    case AnnotationFormat::QvHighlight: return "qvhighlight";
  }
  return "unknown";
}

LoadReport parse_annotations(std::string_view text, const LoadOptions& options) {
  Collector out(options);
  switch (options.format) {
    case AnnotationFormat::Native: parse_native(text, out); break;
    case AnnotationFormat::Charades: parse_charades(text, options, out); break;
    case AnnotationFormat::ActivityNet: parse_activitynet(text, out); break;
    case AnnotationFormat::QvHighlight: parse_qvhighlight(text, out); break;
  }
  return out.take();
}

LoadReport load_annotations(const std::filesystem::path& path,
                            const LoadOptions& options) {
  return parse_annotations(read_text_file(path.string()), options);
}

std::map<std::string, double> load_durations_csv(const std::filesystem::path& path) {
  const auto text = read_text_file(path.string());
  const auto lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty durations file");
  auto split_csv = [](std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    while (true) {
      const auto comma = line.find(',', pos);
      cols.push_back(trim(line.substr(pos, comma - pos)));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    return cols;
  };
  const auto header = split_csv(lines[0]);
  std::size_t id_col = header.size(), len_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "id") id_col = c;
    if (header[c] == "length") len_col = c;
  }
  if (id_col == header.size() || len_col == header.size()) {
    throw ParseError("durations CSV needs 'id' and 'length' columns", 1);
  }
  std::map<std::string, double> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split_csv(lines[i]);
    if (cols.size() <= std::max(id_col, len_col)) {
      throw ParseError("too few columns", i + 1);
    }
    try {
      out[std::string(cols[id_col])] = parse_number(cols[len_col], "length");
    } catch (const ParseError& e) {
      throw ParseError(e.what(), i + 1);
    }
  }
  return out;
}

std::vector<Annotation> split_multi_segment(const MultiSegmentRecord& record) {
  if (record.windows.empty()) {
    throw ArgumentError("record '" + record.id + "' has no ground-truth windows");
  }
  std::vector<Annotation> out;
  out.reserve(record.windows.size());
  for (std::size_t k = 0; k < record.windows.size(); ++k) {
    Annotation a;
    a.id = record.windows.size() == 1 ? record.id : record.id + "#" + std::to_string(k);
    a.video_ref = record.video_ref;
    a.duration_s = record.duration_s;
    a.segment = record.windows[k];
    a.query = record.query;
    auto violations = validate(a);
    if (!violations.empty()) {
      const auto msg = "window " + std::to_string(k) + " invalid: " + violations.front();
      throw ValidationError(msg, std::move(violations));
    }
    out.push_back(std::move(a));
  }
  return out;
}

Json to_json(const Annotation& a) {
  Json j = Json::object();
  j["video"] = a.video_ref;
  j["duration"] = a.duration_s;
  j["segment"] = to_json(a.segment);
  j["query"] = a.query;
  j["id"] = a.id;
  for (const auto& [key, value] : a.extra.items()) j[key] = value;
  return j;
}

Annotation annotation_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("record is not a JSON object");
  Annotation a;
  a.video_ref = json_string(j, "video");
  a.duration_s = json_number(j, "duration");
  if (!j.contains("segment")) throw ParseError("missing field 'segment'");
  a.segment = segment_from_json(j.at("segment"));
  a.query = json_string(j, "query");
  if (j.contains("id")) a.id = json_string(j, "id");
  for (const auto& [key, value] : j.items()) {
    if (key == "video" || key == "duration" || key == "segment" || key == "query" ||
        key == "id") {
      continue;
    }
    a.extra[key] = value;
  }
  return a;
}

std::string to_native_lines(const std::vector<Annotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) {
    out += to_json(a).dump();
    out += '\n';
  }
  return out;
}

}  // namespace tvgrl
