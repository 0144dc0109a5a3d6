#include "tvgrl/invertgen.hpp"

#include <charconv>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"

namespace tvgrl::invertgen {

namespace {

std::string substitute(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos;
       pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string instance_id(const Annotation& a, TaskKind kind) {
  return a.id + "/" + std::string(to_string(kind));
}

TaskInstance clip_instance(const Annotation& a, TaskKind kind, std::string prompt,
                           TaskTarget target) {
  TaskInstance inst;
  inst.id = instance_id(a, kind);
  inst.kind = kind;
  inst.video_ref = a.video_ref;
  inst.clip = a.segment;
  inst.prompt = std::move(prompt);
  inst.target = std::move(target);
  inst.source_annotation_id = a.id;
  return inst;
}

std::set<VerbLemma> query_lemmas(const std::vector<verbtext::VerbHit>& hits) {
  std::set<VerbLemma> out;
  for (const auto& h : hits) out.insert(h.lemma);
  return out;
}

}  // namespace

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates p;
  p.tvg =
      "To accurately pinpoint the event \"{query}\" in the video, determine the precise time "
      "period of the event. Output your reasoning inside <think> </think> tags, then give the "
      "start and end times in seconds inside <answer> </answer> tags in the format "
      "\"<answer>t_s to t_e</answer>\".";
  p.vc = "Add a verb for the event '{masked_query}' based on the video.";
  p.ar = "Use a verb to describe the event based on the video.";
  p.vd = "Describe what people have done based on the video.";
  return p;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  auto p = defaults();
  std::istringstream in(read_text_file(path.string()));
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_no);
    const auto key = line.substr(0, eq);
    auto value = line.substr(eq + 1);
    if (key == "tvg") p.tvg = value;
    else if (key == "vc") p.vc = value;
    else if (key == "ar") p.ar = value;
    else if (key == "vd") p.vd = value;
    else throw ParseError("unknown prompt key '" + key + "'", line_no);
  }
  return p;
}

VerbChoice VerbChoice::parse(std::string_view text) {
  if (text == "first") return {Mode::First, 0};
  if (text == "all") return {Mode::All, 0};
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ArgumentError("verb choice must be 'first', 'all' or an index");
  }
  return {Mode::Index, k};
}

TaskInstance make_tvg_instance(const Annotation& a, const PromptTemplates& prompts) {
  TaskInstance inst;
  inst.id = instance_id(a, TaskKind::Tvg);
  inst.kind = TaskKind::Tvg;
  inst.video_ref = a.video_ref;
  inst.clip = {0.0, a.duration_s};
  inst.prompt = substitute(prompts.tvg, "{query}", a.query);
  inst.target = TvgTarget{a.segment, a.duration_s};
  inst.source_annotation_id = a.id;
  return inst;
}

std::vector<TaskInstance> make_vc_instances(const Annotation& a, VerbChoice choice,
                                            const verbtext::Lexicon& lexicon,
                                            const PromptTemplates& prompts) {
  const auto hits = verbtext::extract_verbs(a.query, lexicon);
  std::vector<std::size_t> picked;
  switch (choice.mode) {
    case VerbChoice::Mode::First:
      if (!hits.empty()) picked.push_back(0);
      break;
    case VerbChoice::Mode::Index:
      if (choice.index < hits.size()) picked.push_back(choice.index);
      break;
    case VerbChoice::Mode::All:
      for (std::size_t i = 0; i < hits.size(); ++i) picked.push_back(i);
      break;
  }

  const auto spans = verbtext::tokenize_spans(a.query);
  std::vector<TaskInstance> out;
  for (auto k : picked) {
    const auto& hit = hits[k];
    const auto& span = spans[hit.token_index];
    std::string masked = a.query;
    masked.replace(span.offset, span.length, kBlankMarker);
    auto prompt = substitute(prompts.vc, "{masked_query}", masked);
    prompt = substitute(std::move(prompt), "{query}", a.query);
    auto inst = clip_instance(a, TaskKind::VerbCompletion, std::move(prompt),
                              VcTarget{masked, hit.lemma});
    if (choice.mode == VerbChoice::Mode::All && hits.size() > 1) {
      inst.id += "/" + std::to_string(k);
    }
    out.push_back(std::move(inst));
  }
  return out;
}

std::optional<TaskInstance> make_ar_instance(const Annotation& a,
                                             const verbtext::Lexicon& lexicon,
                                             const PromptTemplates& prompts) {
  const auto hits = verbtext::extract_verbs(a.query, lexicon);
  if (hits.empty()) return std::nullopt;
  return clip_instance(a, TaskKind::ActionRecognition,
                       substitute(prompts.ar, "{query}", a.query), ArTarget{query_lemmas(hits)});
}

std::optional<TaskInstance> make_vd_instance(const Annotation& a,
                                             const verbtext::Lexicon& lexicon,
                                             const PromptTemplates& prompts) {
  const auto hits = verbtext::extract_verbs(a.query, lexicon);
  if (hits.empty()) return std::nullopt;
  return clip_instance(a, TaskKind::VideoDescription,
                       substitute(prompts.vd, "{query}", a.query), VdTarget{query_lemmas(hits)});
}

InvertSummary invert_dataset(std::span<const Annotation> annotations,
                             const InvertOptions& options,
                             const std::function<void(const TaskInstance&)>& sink) {
  const auto& lexicon = options.lexicon ? *options.lexicon : verbtext::Lexicon::builtin();
  InvertSummary summary;
  for (auto kind : kAllTaskKinds) {
    if (options.kinds.contains(kind)) {
      summary.emitted[kind] = 0;
      summary.skipped[kind] = 0;
    }
  }
  auto emit = [&](const TaskInstance& inst) {
    sink(inst);
    ++summary.emitted[inst.kind];
  };

  for (const auto& a : annotations) {
    ++summary.annotations;
    bool skipped_any = false;
    auto skip = [&](TaskKind kind) {
      ++summary.skipped[kind];
      skipped_any = true;
    };
    if (options.kinds.contains(TaskKind::Tvg)) emit(make_tvg_instance(a, options.prompts));
    if (options.kinds.contains(TaskKind::VerbCompletion)) {
      const auto vc = make_vc_instances(a, options.verb_choice, lexicon, options.prompts);
      if (vc.empty()) skip(TaskKind::VerbCompletion);
      for (const auto& inst : vc) emit(inst);
    }
    if (options.kinds.contains(TaskKind::ActionRecognition)) {
      if (auto ar = make_ar_instance(a, lexicon, options.prompts)) emit(*ar);
      else skip(TaskKind::ActionRecognition);
    }
    if (options.kinds.contains(TaskKind::VideoDescription)) {
      if (auto vd = make_vd_instance(a, lexicon, options.prompts)) emit(*vd);
      else skip(TaskKind::VideoDescription);
    }
    if (skipped_any) summary.skipped_ids.push_back(a.id);
  }
  return summary;
}

InvertResult invert_dataset(std::span<const Annotation> annotations,
                            const InvertOptions& options) {
  InvertResult result;
  result.summary = invert_dataset(annotations, options, [&](const TaskInstance& inst) {
    result.instances.push_back(inst);
  });
  return result;
}

std::string InvertSummary::to_text() const {
  std::ostringstream out;
  out << "annotations: " << annotations << '\n';
  for (const auto& [kind, n] : emitted) {
    out << to_string(kind) << ": emitted " << n;
    if (auto it = skipped.find(kind); it != skipped.end()) out << ", skipped " << it->second;
    out << '\n';
  }
  return out.str();
}

}  // namespace tvgrl::invertgen
