#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tvgrl/annotations.hpp"
#include "tvgrl/evalharness.hpp"
#include "tvgrl/grpo.hpp"
#include "tvgrl/json_types.hpp"
#include "tvgrl/rng.hpp"
#include "tvgrl/types.hpp"

namespace tvgrl::toylab {

/// Regular verbs the synthetic queries draw from, in action-id order.
const std::vector<std::string>& toy_verbs();
/// Object words closing every synthetic query; none of them is a verb.
const std::vector<std::string>& toy_objects();

struct SyntheticCorpusConfig {
  std::size_t n_videos = 480;
  std::size_t timesteps = 40;
  std::size_t n_actions = 8;
  std::size_t feature_dim = 16;
  double noise_sigma = 0.6;
  std::size_t span_min = 8;
  std::size_t span_max = 16;
  std::uint64_t seed = 7;

  /// Throws ArgumentError on inconsistent bounds.
  void validate() const;
};

/// One synthetic clip. Timestep t covers seconds [t, t + 1).
struct SyntheticVideo {
  std::string id;
  std::size_t timesteps = 0;
  std::size_t feature_dim = 0;
  std::vector<double> features;  // timesteps x feature_dim, row major
  std::size_t action_id = 0;
  std::size_t distractor_id = 0;
  Segment gt_span;
  std::string query;

  std::span<const double> frame(std::size_t t) const {
    return {features.data() + t * feature_dim, feature_dim};
  }
  Annotation annotation() const;
};

struct SyntheticCorpus {
  SyntheticCorpusConfig config;
  std::vector<double> action_embeddings;  // n_actions x feature_dim
  std::vector<double> motion;             // feature_dim, present only inside spans
  std::vector<SyntheticVideo> videos;
};

/// Deterministic under config.seed. Inside the span a frame is
/// action + motion + noise; outside it is a per-video distractor action + noise.
SyntheticCorpus gen_synthetic_corpus(const SyntheticCorpusConfig& config);

/// Splits off the last n_heldout videos; both parts share the embeddings.
std::pair<SyntheticCorpus, SyntheticCorpus> split_corpus(const SyntheticCorpus& corpus,
                                                         std::size_t n_heldout);

/// Order-sensitive hash of every field, for determinism checks.
std::uint64_t corpus_hash(const SyntheticCorpus& corpus);

struct ToyPolicyShape {
  std::size_t feature_dim = 16;
  std::size_t hidden = 12;
  std::size_t bins = 10;
  std::size_t n_actions = 8;
  std::size_t timesteps = 40;
  double temperature = 1.0;
  bool isolated_heads = false;  // verb head reads its own trunk
};

/// Parameter layout of the flat vector, in order.
struct ToyPolicyParams {
  std::vector<double> trunk;       // feature_dim x hidden
  std::vector<double> head_start;  // hidden x bins
  std::vector<double> head_end;    // hidden x bins
  std::vector<double> head_verb;   // hidden x n_actions
  std::vector<double> verb_trunk;  // feature_dim x hidden, isolated heads only
};

/// Shared-trunk policy over an enumerable output space.
///
/// Frames pass through z = tanh(W^T x). Tvg instances pool z into B bins H_b
/// and score start bin b with u_b . (H_b - H_{b-1}) / tau and end bin b with
/// v_b . (H_b - H_{b+1}) / tau (H_{-1} = H_B = 0); the pair (s, e) has
/// probability proportional to exp(start_s + end_e) over s <= e. Invert
/// instances pool z over the clip and pick a verb from head_verb.
class ToyPolicy final : public grpo::PolicyHandle {
 public:
  /// The policy reads frames of the corpus videos by reference; the corpus
  /// must outlive it.
  ToyPolicy(ToyPolicyShape shape, const SyntheticCorpus& corpus);

  /// Makes further videos (e.g. a held-out split) addressable.
  void add_videos(const SyntheticCorpus& corpus);

  const ToyPolicyShape& shape() const { return shape_; }
  std::size_t parameter_count() const;

  /// Small random initialization.
  void init_random(Rng& rng, double scale = 0.3);

  ToyPolicyParams unpack(std::span<const double> theta) const;
  std::vector<double> pack(const ToyPolicyParams& params) const;

  // PolicyHandle
  std::vector<std::string> generate(const TaskInstance& instance, int n,
                                    Rng& rng) const override;
  double log_prob(const TaskInstance& instance, std::string_view response,
                  grpo::PolicySlot slot) const override;
  std::vector<double> parameters() const override { return current_; }
  void set_parameters(std::span<const double> theta) override;
  void snapshot(grpo::PolicySlot target) override;
  std::vector<double> log_prob_gradient(const TaskInstance& instance,
                                        std::string_view response) const override;
  std::optional<std::vector<std::string>> support(const TaskInstance& instance) const override;

  /// Probabilities aligned with support(instance), under the given slot.
  std::vector<double> distribution(const TaskInstance& instance,
                                   grpo::PolicySlot slot = grpo::PolicySlot::Current) const;

  /// Most probable response under the current parameters.
  std::string greedy(const TaskInstance& instance) const;

  /// Sets every slot to theta.
  void reset(std::span<const double> theta);

  /// Rendering of output index k (a bin pair or an action id) for the instance.
  std::string render(const TaskInstance& instance, std::size_t k) const;
  /// Bin pairs (s, e) with s <= e in support order.
  const std::vector<std::pair<std::size_t, std::size_t>>& bin_pairs() const { return pairs_; }
  Segment bin_segment(std::size_t s, std::size_t e) const;

  /// Supervised cross-entropy on the verb head (and its trunk) over the
  /// ground-truth clips of `videos`.
  void warm_start_verbs(std::span<const SyntheticVideo> videos, std::size_t epochs, double lr);

 private:
  struct Forward;

  const std::vector<double>& slot_params(grpo::PolicySlot slot) const;
  const SyntheticVideo& video_for(const TaskInstance& instance) const;
  Forward forward(const TaskInstance& instance, std::span<const double> theta) const;
  std::optional<std::size_t> output_index(const TaskInstance& instance,
                                          std::string_view response) const;
  std::vector<double> output_gradient(const TaskInstance& instance, std::size_t k) const;

  ToyPolicyShape shape_;
  std::map<std::string, const SyntheticVideo*, std::less<>> videos_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::vector<double> current_;
  std::vector<double> old_;
  std::vector<double> ref_;
};

struct TrainConfig {
  grpo::GrpoConfig grpo;
  double tvg_prob = 0.8;
  std::size_t iterations = 1500;
  std::size_t hidden = 12;
  std::size_t bins = 10;
  double temperature = 1.0;
  bool isolated_heads = false;
  std::size_t warm_start_epochs = 3;
  double warm_start_lr = 0.05;
  double init_scale = 0.3;
  std::uint64_t seed = 11;

  void validate() const;
};

struct LogRecord {
  std::int64_t step = 0;
  TaskKind kind = TaskKind::Tvg;
  double mean_reward = 0.0;
  double objective = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
};

struct TrainingLog {
  std::vector<LogRecord> records;

  /// Mean of the per-step mean rewards, by kind.
  std::map<TaskKind, double> mean_reward_by_kind() const;
  std::map<TaskKind, std::size_t> steps_by_kind() const;
  std::string to_jsonl() const;
};

Json to_json(const LogRecord& record);

/// Policy built from the config: random init followed by the verb warm start
/// on the training corpus. Runs that share the config share this start.
ToyPolicy make_initial_policy(const SyntheticCorpus& train_corpus, const TrainConfig& config);

/// Alternating-task GRPO loop. Each iteration draws an annotation uniformly,
/// draws the task kind with probability tvg_prob for Tvg, rolls out a group
/// of responses and takes one step.
TrainingLog train(ToyPolicy& policy, const SyntheticCorpus& train_corpus,
                  const TrainConfig& config,
                  const std::function<void(const LogRecord&)>& on_step = {});

enum class DecodeMode { Greedy, Sample };

struct ProbeResult {
  evalharness::EvalReport report;
  double miou = 0.0;
  double r1_03 = 0.0;
  double r1_05 = 0.0;
  double r1_07 = 0.0;
  double vc_acc = 0.0;
  double ar_acc = 0.0;
  double vd_acc = 0.0;

  double mean_verb_accuracy() const { return (vc_acc + ar_acc + vd_acc) / 3.0; }
};

/// Maps an instance to one raw response.
using Actor = std::function<std::string(const TaskInstance&)>;

/// Scores one response per kind for every held-out video through the
/// evaluation harness.
ProbeResult probe(const Actor& actor, const SyntheticCorpus& heldout);
ProbeResult probe(const ToyPolicy& policy, const SyntheticCorpus& heldout,
                  DecodeMode mode = DecodeMode::Greedy, std::uint64_t seed = 0);

struct DegradationConfig {
  SyntheticCorpusConfig corpus;
  TrainConfig train;
  std::size_t n_heldout = 120;
  double grounding_prob = 0.8;
  double miou_margin = 0.05;
};

struct DegradationResult {
  ProbeResult initial;
  ProbeResult tvg_only;
  ProbeResult mixed;
  TrainingLog tvg_only_log;
  TrainingLog mixed_log;
  bool verb_accuracy_lower = false;
  bool miou_within_margin = false;
};

/// Trains from one shared start with p = 1 and p = grounding_prob and probes
/// both on the held-out split.
DegradationResult run_degradation_study(const DegradationConfig& config);

}  // namespace tvgrl::toylab
