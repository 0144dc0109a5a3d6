#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tvgrl/json_types.hpp"
#include "tvgrl/rng.hpp"
#include "tvgrl/types.hpp"
#include "tvgrl/verbtext.hpp"

namespace tvgrl::rewards {

/// Structured view of a model response following
/// "<think>...</think> <answer>...</answer>".
struct ParsedResponse {
  bool format_ok = false;
  std::optional<std::string> think;
  std::optional<std::string> answer_text;
  // Only set when the answer body reads "<start> to <end>" with start <= end.
  std::optional<Segment> answer_segment;
};

/// Never throws. format_ok requires, up to surrounding whitespace, exactly one
/// think block immediately followed (whitespace allowed) by exactly one answer
/// block and nothing after it. think/answer_text are still extracted from
/// non-conforming text when each tag pair occurs exactly once, so the task
/// reward can be scored independently of the format reward.
ParsedResponse parse_response(std::string_view raw);

/// "<number> to <number>" with unsigned decimal numbers; nullopt when the
/// pattern does not match or the bounds are reversed.
std::optional<Segment> parse_answer_segment(std::string_view answer);

double format_reward(std::string_view raw);

/// Interval IoU. Two equal zero-length intervals score 1; any other pair with
/// an empty union scores 0.
double iou_reward(const Segment& pred, const Segment& gt);

/// 1 when the filled-in verb is a variant of the target verb. A response that
/// aligns with the masked query (same words around the blank) is judged on
/// the words filling the blank; otherwise any token of the response counts,
/// which covers bare-verb answers.
double vc_reward(std::string_view response, const VcTarget& target,
                 const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin());

/// The first verb of the response must share a lemma with a ground-truth verb.
double ar_reward(std::string_view response, const ArTarget& target,
                 const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin());

/// Some ground-truth verb must appear (as any inflection) among the verbs of
/// the response.
double vd_reward(std::string_view response, const VdTarget& target,
                 const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin());

/// Word vectors for the cosine-similarity reward baseline.
/// File format: "word v1 v2 ... vd" per line, d taken from the first line.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(const EmbeddingTable& other);
  EmbeddingTable& operator=(const EmbeddingTable& other);

  static EmbeddingTable parse(std::string_view text);
  static EmbeddingTable load(const std::filesystem::path& path);

  void add(std::string word, std::vector<double> vector);
  std::optional<std::span<const double>> find(std::string_view word) const;
  std::size_t dimension() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

  /// Lookups that fell back to a zero reward because a vector was missing.
  std::size_t missing_lookups() const { return missing_.load(); }
  void note_missing() const { ++missing_; }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  mutable std::atomic<std::size_t> missing_{0};
};

/// Cosine of the two word vectors clamped to [0, 1]. Words are looked up as
/// written (lowercased) and then by lemma; a miss scores 0 and bumps the
/// table's missing counter.
double cosine_similarity_reward(std::string_view pred_verb, std::string_view gt_verb,
                                const EmbeddingTable& embeddings,
                                const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin());

/// Tvg with probability p, otherwise VC/AR/VD uniformly. Throws
/// ArgumentError unless 0 <= p <= 1.
TaskKind sample_task_kind(Rng& rng, double p);

struct RewardBreakdown {
  TaskKind kind = TaskKind::Tvg;
  double r_format = 0.0;
  double r_task = 0.0;
  double r_total = 0.0;
  int alpha = 1;  // selects the grounding reward
  int beta = 0;   // selects the inversion reward

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

/// r_total = r_format + r_task with the task reward picked by instance kind:
/// IoU of the parsed answer segment for Tvg, the matching verb reward over the
/// answer body otherwise. A missing answer scores r_task = 0.
RewardBreakdown combined_reward(const TaskInstance& instance, std::string_view raw,
                                const verbtext::Lexicon& lexicon = verbtext::Lexicon::builtin());

Json to_json(const RewardBreakdown& b);
RewardBreakdown breakdown_from_json(const Json& j);

}  // namespace tvgrl::rewards
