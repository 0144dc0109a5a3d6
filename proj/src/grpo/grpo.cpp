#include "tvgrl/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvgrl/errors.hpp"

namespace tvgrl::grpo {

KlMode parse_kl_mode(std::string_view name) {
  if (name == "exact") return KlMode::Exact;
  if (name == "sampled") return KlMode::Sampled;
  throw ArgumentError("unknown KL mode '" + std::string(name) + "'");
}

std::string_view to_string(KlMode mode) {
  return mode == KlMode::Exact ? "exact" : "sampled";
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw ArgumentError("group_size must be at least 2");
  if (!(kl_coeff >= 0.0) || !std::isfinite(kl_coeff)) {
    throw ArgumentError("kl_coeff must be a finite non-negative number");
  }
  if (clip_epsilon && !(*clip_epsilon > 0.0)) {
    throw ArgumentError("clip_epsilon must be positive (or disabled)");
  }
  if (!(adv_epsilon > 0.0)) throw ArgumentError("adv_epsilon must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ArgumentError("learning_rate must be a finite positive number");
  }
  if (ref_refresh_every < 0) throw ArgumentError("ref_refresh_every must be >= 0");
}

std::vector<double> PolicyHandle::log_prob_gradient(const TaskInstance&,
                                                    std::string_view) const {
  throw ArgumentError("policy does not expose log-probability gradients");
}

std::optional<std::vector<std::string>> PolicyHandle::support(const TaskInstance&) const {
  return std::nullopt;
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double adv_epsilon) {
  const auto g = rewards.size();
  if (g < 2) throw ArgumentError("advantage normalization needs at least two rewards");
  if (!(adv_epsilon > 0.0)) throw ArgumentError("adv_epsilon must be positive");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / static_cast<double>(g));

  std::vector<double> adv(g, 0.0);
  if (!(std >= adv_epsilon)) return adv;
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / std;
  return adv;
}

namespace {

void check_rollout(const GroupRollout& r) {
  const auto g = r.responses.size();
  if (r.advantages.size() != g || r.logp_old.size() != g) {
    throw ArgumentError("rollout lists must all have the group size");
  }
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw NumericError(std::string("non-finite ") + what);
}

// Value of one surrogate term and d(term)/d(logp_new).
struct Term {
  double value;
  double dlogp;
};

Term surrogate_term(double logp_new, double logp_old, double adv,
                    const std::optional<double>& clip) {
  require_finite(logp_new, "current log-probability");
  require_finite(logp_old, "old log-probability");
  const double ratio = std::exp(logp_new - logp_old);
  const double plain = ratio * adv;
  if (!clip) return {plain, plain};
  const double clipped = std::clamp(ratio, 1.0 - *clip, 1.0 + *clip) * adv;
  // Strictly smaller only when the ratio sits outside the trust region, where
  // the clipped value is locally constant.
  if (clipped < plain) return {clipped, 0.0};
  return {plain, plain};
}

void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
  if (x.size() != y.size()) throw NumericError("gradient size mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Unclamped KL value (the clamp in kl_penalty would break differentiability
// at identical distributions).
double kl_value(const PolicyHandle& policy, const TaskInstance& instance, KlMode mode,
                std::span<const std::string> samples) {
  if (mode == KlMode::Exact) {
    const auto support = policy.support(instance);
    if (!support) throw ArgumentError("exact KL needs an enumerable policy support");
    double kl = 0.0;
    for (const auto& o : *support) {
      const double lp = policy.log_prob(instance, o, PolicySlot::Current);
      if (lp == -std::numeric_limits<double>::infinity()) continue;
      const double lr = policy.log_prob(instance, o, PolicySlot::Ref);
      if (!std::isfinite(lr)) {
        throw NumericError("reference policy assigns zero probability to '" + o + "'");
      }
      kl += std::exp(lp) * (lp - lr);
    }
    return kl;
  }
  if (samples.empty()) throw ArgumentError("sampled KL needs at least one sample");
  double sum = 0.0;
  for (const auto& o : samples) {
    const double lp = policy.log_prob(instance, o, PolicySlot::Current);
    const double lr = policy.log_prob(instance, o, PolicySlot::Ref);
    if (!std::isfinite(lp)) {
      throw NumericError("sample '" + o + "' has zero probability under the current policy");
    }
    if (!std::isfinite(lr)) {
      throw NumericError("reference policy assigns zero probability to '" + o + "'");
    }
    const double log_r = lr - lp;
    sum += std::exp(log_r) - log_r - 1.0;
  }
  return sum / static_cast<double>(samples.size());
}

void add_kl_gradient(const PolicyHandle& policy, const TaskInstance& instance, KlMode mode,
                     std::span<const std::string> samples, double scale,
                     std::vector<double>& grad) {
  if (mode == KlMode::Exact) {
    // d/dtheta sum p (log p - log p_ref) = sum p (log p - log p_ref) dlog p,
    // using sum p dlog p = 0.
    const auto support = policy.support(instance);
    if (!support) throw ArgumentError("exact KL needs an enumerable policy support");
    for (const auto& o : *support) {
      const double lp = policy.log_prob(instance, o, PolicySlot::Current);
      if (lp == -std::numeric_limits<double>::infinity()) continue;
      const double lr = policy.log_prob(instance, o, PolicySlot::Ref);
      if (!std::isfinite(lr)) {
        throw NumericError("reference policy assigns zero probability to '" + o + "'");
      }
      axpy(scale * std::exp(lp) * (lp - lr), policy.log_prob_gradient(instance, o), grad);
    }
    return;
  }
  // d/dtheta (r - log r - 1) = (1 - r) dlog p with r = p_ref / p.
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  for (const auto& o : samples) {
    const double lp = policy.log_prob(instance, o, PolicySlot::Current);
    const double lr = policy.log_prob(instance, o, PolicySlot::Ref);
    if (!std::isfinite(lp) || !std::isfinite(lr)) {
      throw NumericError("sample '" + o + "' outside the policy support");
    }
    axpy(scale * inv_n * (1.0 - std::exp(lr - lp)), policy.log_prob_gradient(instance, o),
         grad);
  }
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double surrogate_objective(const GroupRollout& rollout, const GrpoConfig& config) {
  check_rollout(rollout);
  if (rollout.logp_new.size() != rollout.responses.size()) {
    throw ArgumentError("rollout lists must all have the group size");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < rollout.responses.size(); ++i) {
    total += surrogate_term(rollout.logp_new[i], rollout.logp_old[i], rollout.advantages[i],
                            config.clip_epsilon)
                 .value;
  }
  return total;
}

double kl_penalty(const PolicyHandle& policy, const TaskInstance& instance, KlMode mode,
                  std::span<const std::string> samples) {
  return std::max(0.0, kl_value(policy, instance, mode, samples));
}

double grpo_objective(const PolicyHandle& policy, std::span<const GroupRollout> batch,
                      const GrpoConfig& config) {
  if (batch.empty()) throw ArgumentError("empty rollout batch");
  double total = 0.0;
  for (const auto& group : batch) {
    check_rollout(group);
    double value = 0.0;
    for (std::size_t i = 0; i < group.responses.size(); ++i) {
      const double lp = policy.log_prob(group.instance, group.responses[i], PolicySlot::Current);
      value += surrogate_term(lp, group.logp_old[i], group.advantages[i], config.clip_epsilon)
                   .value;
    }
    if (config.kl_coeff > 0.0) {
      value -= config.kl_coeff *
               kl_value(policy, group.instance, config.kl_mode, group.responses);
    }
    total += value;
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> grpo_gradient(const PolicyHandle& policy, std::span<const GroupRollout> batch,
                                  const GrpoConfig& config) {
  if (batch.empty()) throw ArgumentError("empty rollout batch");
  std::vector<double> grad(policy.parameters().size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const auto& group : batch) {
    check_rollout(group);
    for (std::size_t i = 0; i < group.responses.size(); ++i) {
      if (group.advantages[i] == 0.0) continue;
      const double lp = policy.log_prob(group.instance, group.responses[i], PolicySlot::Current);
      const auto term =
          surrogate_term(lp, group.logp_old[i], group.advantages[i], config.clip_epsilon);
      if (term.dlogp == 0.0) continue;
      axpy(inv_b * term.dlogp, policy.log_prob_gradient(group.instance, group.responses[i]),
           grad);
    }
    if (config.kl_coeff > 0.0) {
      add_kl_gradient(policy, group.instance, config.kl_mode, group.responses,
                      -config.kl_coeff * inv_b, grad);
    }
  }
  return grad;
}

StepStats grpo_step(PolicyHandle& policy, std::span<const GroupRollout> batch,
                    const GrpoConfig& config, std::int64_t step) {
  config.validate();
  if (batch.empty()) throw ArgumentError("empty rollout batch");

  StepStats stats;
  stats.step = step;
  stats.objective = grpo_objective(policy, batch, config);
  std::size_t n_rewards = 0;
  for (const auto& group : batch) {
    for (double r : group.rewards) stats.mean_reward += r, ++n_rewards;
    stats.kl += kl_penalty(policy, group.instance, config.kl_mode, group.responses);
  }
  if (n_rewards > 0) stats.mean_reward /= static_cast<double>(n_rewards);
  stats.kl /= static_cast<double>(batch.size());

  const auto grad = grpo_gradient(policy, batch, config);
  stats.grad_norm = norm(grad);
  if (!std::isfinite(stats.grad_norm)) throw NumericError("non-finite gradient");

  auto theta = policy.parameters();
  for (std::size_t j = 0; j < theta.size(); ++j) theta[j] += config.learning_rate * grad[j];
  policy.set_parameters(theta);
  policy.snapshot(PolicySlot::Old);
  if (config.ref_refresh_every > 0 && (step + 1) % config.ref_refresh_every == 0) {
    policy.snapshot(PolicySlot::Ref);
  }
  return stats;
}

std::vector<double> finite_difference_gradient(
    std::span<const double> theta, const std::function<double(std::span<const double>)>& f,
    double h) {
  if (!(h > 0.0)) throw ArgumentError("finite-difference step must be positive");
  std::vector<double> x(theta.begin(), theta.end());
  std::vector<double> grad(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double saved = x[j];
    x[j] = saved + h;
    const double up = f(x);
    x[j] = saved - h;
    const double down = f(x);
    x[j] = saved;
    grad[j] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::vector<double> finite_difference_gradient(PolicyHandle& policy,
                                               std::span<const GroupRollout> batch,
                                               const GrpoConfig& config, double h) {
  const auto theta = policy.parameters();
  auto restore = [&] { policy.set_parameters(theta); };
  try {
    auto grad = finite_difference_gradient(
        theta,
        [&](std::span<const double> x) {
          policy.set_parameters(x);
          return grpo_objective(policy, batch, config);
        },
        h);
    restore();
    return grad;
  } catch (...) {
    restore();
    throw;
  }
}

double relative_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("relative_error: size mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  const double scale = std::max(norm(a), norm(b));
  if (scale == 0.0) return 0.0;
  return std::sqrt(diff) / scale;
}

Json to_json(const GroupRollout& rollout) {
  Json j = Json::object();
  j["instance_id"] = rollout.instance.id;
  j["kind"] = std::string(to_string(rollout.instance.kind));
  j["responses"] = rollout.responses;
  j["rewards"] = rollout.rewards;
  j["advantages"] = rollout.advantages;
  if (!rollout.logp_new.empty()) j["logp_new"] = rollout.logp_new;
  if (!rollout.logp_old.empty()) j["logp_old"] = rollout.logp_old;
  if (!rollout.logp_ref.empty()) j["logp_ref"] = rollout.logp_ref;
  return j;
}

Json to_json(const StepStats& stats) {
  Json j = Json::object();
  j["step"] = stats.step;
  j["objective"] = stats.objective;
  j["mean_reward"] = stats.mean_reward;
  j["kl"] = stats.kl;
  j["grad_norm"] = stats.grad_norm;
  return j;
}

}  // namespace tvgrl::grpo
