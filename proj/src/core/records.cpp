#include "tvgrl/records.hpp"

#include <fstream>
#include <sstream>

#include "tvgrl/errors.hpp"

namespace tvgrl {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ParseError(std::string("missing field '") + key + "'");
  }
  return j.at(key);
}

std::string string_field(const Json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

std::set<VerbLemma> lemma_set(const Json& j) {
  const auto& v = field(j, "verbs");
  if (!v.is_array()) throw ParseError("field 'verbs' is not an array");
  std::set<VerbLemma> out;
  for (const auto& e : v) {
    if (!e.is_string()) throw ParseError("verb is not a string");
    out.insert(VerbLemma(e.get<std::string>()));
  }
  return out;
}

Json lemma_array(const std::set<VerbLemma>& lemmas) {
  Json arr = Json::array();
  for (const auto& l : lemmas) arr.push_back(l.value);
  return arr;
}

}  // namespace

Json to_json(const Segment& s) { return Json::array({s.start_s, s.end_s}); }

Segment segment_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError("segment must be an array of two numbers");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Json to_json(const TaskTarget& target) {
  Json j = Json::object();
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, TvgTarget>) {
          j["segment"] = to_json(t.segment);
          j["duration"] = t.duration_s;
        } else if constexpr (std::is_same_v<T, VcTarget>) {
          j["masked_query"] = t.masked_query;
          j["verb"] = t.gt_verb.value;
        } else {
          j["verbs"] = lemma_array(t.gt_verbs);
        }
      },
      target);
  return j;
}

Json to_json(const TaskInstance& instance) {
  Json j = Json::object();
  j["id"] = instance.id;
  j["kind"] = std::string(to_string(instance.kind));
  j["video"] = instance.video_ref;
  j["clip"] = to_json(instance.clip);
  j["prompt"] = instance.prompt;
  j["target"] = to_json(instance.target);
  j["source_id"] = instance.source_annotation_id;
  return j;
}

TaskInstance instance_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("instance record is not a JSON object");
  TaskInstance inst;
  inst.id = j.contains("id") ? string_field(j, "id") : std::string();
  inst.kind = parse_task_kind(string_field(j, "kind"));
  inst.video_ref = string_field(j, "video");
  inst.clip = segment_from_json(field(j, "clip"));
  inst.prompt = string_field(j, "prompt");
  inst.source_annotation_id = j.contains("source_id") ? string_field(j, "source_id") : "";
  const auto& t = field(j, "target");
  switch (inst.kind) {
    case TaskKind::Tvg: {
      const auto& d = field(t, "duration");
      if (!d.is_number()) throw ParseError("target duration is not a number");
      inst.target = TvgTarget{segment_from_json(field(t, "segment")), d.get<double>()};
      break;
    }
    case TaskKind::VerbCompletion:
      inst.target = VcTarget{string_field(t, "masked_query"), VerbLemma(string_field(t, "verb"))};
      break;
    case TaskKind::ActionRecognition:
      inst.target = ArTarget{lemma_set(t)};
      break;
    case TaskKind::VideoDescription:
      inst.target = VdTarget{lemma_set(t)};
      break;
  }
  return inst;
}

std::vector<TaskInstance> parse_instance_lines(std::string_view text) {
  std::vector<TaskInstance> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(instance_from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw ParseError(e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("error writing '" + path + "'");
}

}  // namespace tvgrl
