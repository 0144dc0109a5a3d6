#include "tvgrl/types.hpp"

#include <cmath>

#include "tvgrl/errors.hpp"

namespace tvgrl {

bool is_well_formed(const Segment& s) {
  return std::isfinite(s.start_s) && std::isfinite(s.end_s) && s.start_s >= 0.0 &&
         s.start_s <= s.end_s;
}

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Tvg: return "tvg";
    case TaskKind::VerbCompletion: return "vc";
    case TaskKind::ActionRecognition: return "ar";
    case TaskKind::VideoDescription: return "vd";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "tvg" || name == "temporal_video_grounding") return TaskKind::Tvg;
  if (name == "vc" || name == "verb_completion") return TaskKind::VerbCompletion;
  if (name == "ar" || name == "action_recognition") return TaskKind::ActionRecognition;
  if (name == "vd" || name == "video_description") return TaskKind::VideoDescription;
  throw ParseError("unknown task kind '" + std::string(name) + "'");
}

TaskKind kind_of(const TaskTarget& target) {
  return static_cast<TaskKind>(target.index());
}

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

}  // namespace

std::vector<std::string> validate(const TaskInstance& instance) {
  std::vector<std::string> out;
  if (kind_of(instance.target) != instance.kind) {
    out.emplace_back("target does not match task kind");
  }
  if (!is_well_formed(instance.clip)) out.emplace_back("malformed clip");
  if (instance.video_ref.empty()) out.emplace_back("empty video reference");
  if (const auto* vc = std::get_if<VcTarget>(&instance.target)) {
    if (count_occurrences(vc->masked_query, kBlankMarker) != 1) {
      out.emplace_back("masked query must contain exactly one blank marker");
    }
    if (vc->gt_verb.value.empty()) out.emplace_back("empty ground-truth verb");
  } else if (const auto* ar = std::get_if<ArTarget>(&instance.target)) {
    if (ar->gt_verbs.empty()) out.emplace_back("empty ground-truth verb set");
  } else if (const auto* vd = std::get_if<VdTarget>(&instance.target)) {
    if (vd->gt_verbs.empty()) out.emplace_back("empty ground-truth verb set");
  } else if (const auto* tvg = std::get_if<TvgTarget>(&instance.target)) {
    if (!is_well_formed(tvg->segment) || tvg->segment.end_s > tvg->duration_s) {
      out.emplace_back("ground-truth segment invalid against duration");
    }
  }
  return out;
}

}  // namespace tvgrl
