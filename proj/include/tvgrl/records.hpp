#pragma once

#include <string>
#include <vector>

#include "tvgrl/json_types.hpp"
#include "tvgrl/types.hpp"

namespace tvgrl {

// Line-record schema for task instances:
//   {"id", "kind", "video", "clip": [s, e], "prompt", "target": {...},
//    "source_id"}
// with kind-tagged target payloads
//   tvg: {"segment": [s, e], "duration": d}
//   vc:  {"masked_query": q, "verb": lemma}
//   ar/vd: {"verbs": [lemma, ...]}
Json to_json(const TaskInstance& instance);
Json to_json(const TaskTarget& target);
Json to_json(const Segment& s);

/// Throws ParseError on missing or mistyped fields.
TaskInstance instance_from_json(const Json& j);
Segment segment_from_json(const Json& j);

/// Parses one instance per non-empty line. Throws ParseError with line number.
std::vector<TaskInstance> parse_instance_lines(std::string_view text);

/// Whole-file helpers shared by the CLI.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view contents);

}  // namespace tvgrl
