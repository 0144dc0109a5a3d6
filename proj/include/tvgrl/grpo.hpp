#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tvgrl/json_types.hpp"
#include "tvgrl/rng.hpp"
#include "tvgrl/types.hpp"

namespace tvgrl::grpo {

enum class KlMode { Exact, Sampled };

KlMode parse_kl_mode(std::string_view name);
std::string_view to_string(KlMode mode);

struct GrpoConfig {
  int group_size = 8;
  double kl_coeff = 0.01;
  std::optional<double> clip_epsilon = 0.2;  // nullopt: literal unclipped ratio
  double adv_epsilon = 1e-6;
  double learning_rate = 0.05;
  int ref_refresh_every = 0;  // steps between reference refreshes; 0 = never
  KlMode kl_mode = KlMode::Exact;
  std::uint64_t seed = 0;

  /// Throws ArgumentError on out-of-range fields.
  void validate() const;
};

/// Which parameter set a policy query refers to.
enum class PolicySlot { Current, Old, Ref };

/// One response with its probability under the current policy.
struct Outcome {
  std::string response;
  double prob = 0.0;
};

/// Generator / log-probability interface over the current, old and reference
/// parameter sets.
class PolicyHandle {
 public:
  virtual ~PolicyHandle() = default;

  /// n responses sampled from the current parameters.
  virtual std::vector<std::string> generate(const TaskInstance& instance, int n,
                                            Rng& rng) const = 0;

  /// log pi(response); -infinity for responses outside the support.
  virtual double log_prob(const TaskInstance& instance, std::string_view response,
                          PolicySlot slot) const = 0;

  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> theta) = 0;

  /// Copies the current parameters into the old or reference slot.
  virtual void snapshot(PolicySlot target) = 0;

  /// Gradient of log pi_current(response) with respect to parameters().
  /// The default throws; only differentiable policies can be trained.
  virtual std::vector<double> log_prob_gradient(const TaskInstance& instance,
                                                std::string_view response) const;

  /// Every response the policy can emit for this instance, when enumerable.
  /// The support is shared by all slots.
  virtual std::optional<std::vector<std::string>> support(const TaskInstance& instance) const;
};

/// G responses to one instance with everything one update needs.
struct GroupRollout {
  TaskInstance instance;
  std::vector<std::string> responses;
  std::vector<double> rewards;
  std::vector<double> advantages;
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
};

/// (r_i - mean) / std with the population std. Groups whose std is below
/// adv_epsilon carry no signal and get all-zero advantages.
/// Throws ArgumentError for fewer than two rewards or adv_epsilon <= 0.
std::vector<double> normalize_advantages(std::span<const double> rewards, double adv_epsilon);

/// Sum over the group of ratio_i * A_i, ratio_i = exp(logp_new_i - logp_old_i);
/// with clipping each term is min(ratio * A, clip(ratio, 1-eps, 1+eps) * A).
/// Throws NumericError on non-finite log-probabilities.
double surrogate_objective(const GroupRollout& rollout, const GrpoConfig& config);

/// KL(pi_current || pi_ref) for one instance.
///  Exact: sum over the enumerated support of p log(p / p_ref).
///  Sampled: mean over `samples` of (r - log r - 1), r = p_ref / p.
/// Throws NumericError when the reference assigns zero probability to a
/// response the current policy can produce, and ArgumentError when exact mode
/// is requested for a policy without an enumerable support or sampled mode
/// gets no samples.
double kl_penalty(const PolicyHandle& policy, const TaskInstance& instance, KlMode mode,
                  std::span<const std::string> samples = {});

/// Full objective evaluated at the policy's current parameters:
///   mean over groups of [surrogate - kl_coeff * KL].
/// logp_new is recomputed from the policy; logp_old and advantages are read
/// from the rollouts. Sampled KL uses each group's responses.
double grpo_objective(const PolicyHandle& policy, std::span<const GroupRollout> batch,
                      const GrpoConfig& config);

/// Analytic gradient of grpo_objective with respect to the current parameters.
std::vector<double> grpo_gradient(const PolicyHandle& policy, std::span<const GroupRollout> batch,
                                  const GrpoConfig& config);

struct StepStats {
  std::int64_t step = 0;
  double objective = 0.0;
  double mean_reward = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
};

/// One gradient-ascent step on grpo_objective. Afterwards the old slot holds
/// the updated parameters (the next rollout's sampler) and the reference slot
/// is refreshed when ref_refresh_every divides step + 1.
StepStats grpo_step(PolicyHandle& policy, std::span<const GroupRollout> batch,
                    const GrpoConfig& config, std::int64_t step);

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h for every coordinate.
/// Throws ArgumentError when h <= 0.
std::vector<double> finite_difference_gradient(
    std::span<const double> theta, const std::function<double(std::span<const double>)>& f,
    double h = 1e-5);

/// Finite differences of grpo_objective over the policy's parameters; the
/// policy's parameters are restored before returning.
std::vector<double> finite_difference_gradient(PolicyHandle& policy,
                                               std::span<const GroupRollout> batch,
                                               const GrpoConfig& config, double h = 1e-5);

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

Json to_json(const GroupRollout& rollout);
Json to_json(const StepStats& stats);

}  // namespace tvgrl::grpo
