#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tvgrl/annotations.hpp"
#include "tvgrl/types.hpp"
#include "tvgrl/verbtext.hpp"

namespace tvgrl::invertgen {

/// Prompt wording per task kind. "{query}" and "{masked_query}" are replaced
/// with the annotation query and the masked query.
struct PromptTemplates {
  std::string tvg;
  std::string vc;
  std::string ar;
  std::string vd;

  static PromptTemplates defaults();
  /// key=value file with keys tvg/vc/ar/vd; missing keys keep the defaults.
  static PromptTemplates load(const std::filesystem::path& path);
};

/// Which verb hits of a query become verb-completion instances.
struct VerbChoice {
  enum class Mode { First, Index, All };
  Mode mode = Mode::First;
  std::size_t index = 0;

  /// "first", "all" or a zero-based index.
  static VerbChoice parse(std::string_view text);
};

TaskInstance make_tvg_instance(const Annotation& a,
                               const PromptTemplates& prompts = PromptTemplates::defaults());

/// One instance per selected verb hit; empty when the query has no verb (or
/// the requested index is out of range).
std::vector<TaskInstance> make_vc_instances(
    const Annotation& a, VerbChoice choice,
    const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin(),
    const PromptTemplates& prompts = PromptTemplates::defaults());

std::optional<TaskInstance> make_ar_instance(
    const Annotation& a, const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin(),
    const PromptTemplates& prompts = PromptTemplates::defaults());

std::optional<TaskInstance> make_vd_instance(
    const Annotation& a, const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin(),
    const PromptTemplates& prompts = PromptTemplates::defaults());

struct InvertOptions {
  VerbChoice verb_choice;
  std::set<TaskKind> kinds{kAllTaskKinds.begin(), kAllTaskKinds.end()};
  PromptTemplates prompts = PromptTemplates::defaults();
  const verbtext::Lexicon* lexicon = nullptr;  // null: builtin lexicon
};

struct InvertSummary {
  std::size_t annotations = 0;
  std::map<TaskKind, std::size_t> emitted;
  std::map<TaskKind, std::size_t> skipped;
  std::vector<std::string> skipped_ids;  // annotations without any verb

  std::string to_text() const;
};

/// Emits instances in annotation order, and within an annotation in kind
/// order Tvg, VC, AR, VD. Annotations whose query has no verb still yield
/// their Tvg instance; invert kinds are skipped and counted.
InvertSummary invert_dataset(std::span<const Annotation> annotations,
                             const InvertOptions& options,
                             const std::function<void(const TaskInstance&)>& sink);

struct InvertResult {
  std::vector<TaskInstance> instances;
  InvertSummary summary;
};

InvertResult invert_dataset(std::span<const Annotation> annotations,
                            const InvertOptions& options = {});

}  // namespace tvgrl::invertgen
