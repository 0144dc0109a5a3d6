#include <array>
#include <cmath>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/invertgen.hpp"
#include "tvgrl/rewards.hpp"
#include "tvgrl/toylab.hpp"

namespace tvgrl::toylab {

namespace {

using KindInstances = std::array<std::optional<TaskInstance>, 4>;

KindInstances instances_for(const SyntheticVideo& v) {
  const auto a = v.annotation();
  KindInstances out;
  out[0] = invertgen::make_tvg_instance(a);
  auto vc = invertgen::make_vc_instances(a, {});
  if (!vc.empty()) out[1] = std::move(vc.front());
  out[2] = invertgen::make_ar_instance(a);
  out[3] = invertgen::make_vd_instance(a);
  return out;
}

ToyPolicyShape shape_for(const SyntheticCorpus& corpus, const TrainConfig& config) {
  ToyPolicyShape shape;
  shape.feature_dim = corpus.config.feature_dim;
  shape.timesteps = corpus.config.timesteps;
  shape.n_actions = corpus.config.n_actions;
  shape.hidden = config.hidden;
  shape.bins = config.bins;
  shape.temperature = config.temperature;
  shape.isolated_heads = config.isolated_heads;
  return shape;
}

constexpr std::uint64_t kSamplerStream = 0x5a3b1e;
constexpr std::uint64_t kInitStream = 0x1417;

}  // namespace

void TrainConfig::validate() const {
  grpo.validate();
  if (!(tvg_prob >= 0.0 && tvg_prob <= 1.0)) throw ArgumentError("tvg_prob must lie in [0, 1]");
  if (grpo.group_size < 2) throw ArgumentError("group_size must be at least 2");
  if (hidden == 0 || bins == 0) throw ArgumentError("hidden and bins must be positive");
  if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  if (!(warm_start_lr >= 0.0)) throw ArgumentError("warm_start_lr must be non-negative");
}

Json to_json(const LogRecord& r) {
  Json j;
  j["step"] = r.step;
  j["kind"] = to_string(r.kind);
  j["mean_reward"] = r.mean_reward;
  j["objective"] = r.objective;
  j["kl"] = r.kl;
  j["grad_norm"] = r.grad_norm;
  return j;
}

std::map<TaskKind, double> TrainingLog::mean_reward_by_kind() const {
  std::map<TaskKind, double> sums;
  const auto counts = steps_by_kind();
  for (const auto& r : records) sums[r.kind] += r.mean_reward;
  for (auto& [kind, s] : sums) s /= static_cast<double>(counts.at(kind));
  return sums;
}

std::map<TaskKind, std::size_t> TrainingLog::steps_by_kind() const {
  std::map<TaskKind, std::size_t> counts;
  for (const auto& r : records) ++counts[r.kind];
  return counts;
}

std::string TrainingLog::to_jsonl() const {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

ToyPolicy make_initial_policy(const SyntheticCorpus& train_corpus, const TrainConfig& config) {
  config.validate();
  ToyPolicy policy(shape_for(train_corpus, config), train_corpus);
  Rng rng(Rng::mix(config.seed, kInitStream));
  policy.init_random(rng, config.init_scale);
  policy.warm_start_verbs(train_corpus.videos, config.warm_start_epochs, config.warm_start_lr);
  return policy;
}

TrainingLog train(ToyPolicy& policy, const SyntheticCorpus& train_corpus,
                  const TrainConfig& config,
                  const std::function<void(const LogRecord&)>& on_step) {
  config.validate();
  if (train_corpus.videos.empty()) throw ArgumentError("empty training corpus");

  std::vector<KindInstances> instances;
  instances.reserve(train_corpus.videos.size());
  for (const auto& v : train_corpus.videos) instances.push_back(instances_for(v));

  Rng sampler(Rng::mix(config.seed, kSamplerStream));
  TrainingLog log;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    const auto idx = sampler.index(instances.size());
    const auto kind = rewards::sample_task_kind(sampler, config.tvg_prob);
    const auto& slot = instances[idx][static_cast<std::size_t>(kind)];
    if (!slot) {
      throw ArgumentError("video '" + train_corpus.videos[idx].id + "' has no " +
                          std::string(to_string(kind)) + " instance");
    }

    grpo::GroupRollout group;
    group.instance = *slot;
    const auto iter_seed = Rng::mix(config.seed, it);
    for (int i = 0; i < config.grpo.group_size; ++i) {
      Rng r(Rng::mix(iter_seed, static_cast<std::uint64_t>(i)));
      group.responses.push_back(policy.generate(group.instance, 1, r).front());
    }
    for (const auto& resp : group.responses) {
      group.rewards.push_back(rewards::combined_reward(group.instance, resp).r_total);
      group.logp_old.push_back(policy.log_prob(group.instance, resp, grpo::PolicySlot::Old));
      group.logp_ref.push_back(policy.log_prob(group.instance, resp, grpo::PolicySlot::Ref));
    }
    group.logp_new = group.logp_old;
    group.advantages = grpo::normalize_advantages(group.rewards, config.grpo.adv_epsilon);

    const auto stats = grpo::grpo_step(policy, std::span(&group, 1), config.grpo,
                                       static_cast<std::int64_t>(it));
    LogRecord rec{stats.step, kind, stats.mean_reward, stats.objective, stats.kl,
                  stats.grad_norm};
    log.records.push_back(rec);
    if (on_step) on_step(rec);
  }
  return log;
}

ProbeResult probe(const Actor& actor, const SyntheticCorpus& heldout) {
  std::vector<TaskInstance> insts;
  std::vector<std::string> responses;
  for (const auto& v : heldout.videos) {
    for (auto& slot : instances_for(v)) {
      if (!slot) continue;
      responses.push_back(actor(*slot));
      insts.push_back(std::move(*slot));
    }
  }
  ProbeResult out;
  out.report = evalharness::score_run(insts, responses);
  out.miou = out.report.miou;
  auto r1 = [&](double m) {
    const auto it = out.report.r1.find(m);
    return it == out.report.r1.end() ? 0.0 : it->second;
  };
  out.r1_03 = r1(0.3);
  out.r1_05 = r1(0.5);
  out.r1_07 = r1(0.7);
  auto acc = [&](TaskKind k) {
    const auto it = out.report.accuracy.find(k);
    return it == out.report.accuracy.end() ? 0.0 : it->second;
  };
  out.vc_acc = acc(TaskKind::VerbCompletion);
  out.ar_acc = acc(TaskKind::ActionRecognition);
  out.vd_acc = acc(TaskKind::VideoDescription);
  return out;
}

ProbeResult probe(const ToyPolicy& policy, const SyntheticCorpus& heldout, DecodeMode mode,
                  std::uint64_t seed) {
  if (mode == DecodeMode::Greedy) {
    return probe([&](const TaskInstance& inst) { return policy.greedy(inst); }, heldout);
  }
  Rng rng(seed);
  return probe([&](const TaskInstance& inst) { return policy.generate(inst, 1, rng).front(); },
               heldout);
}

DegradationResult run_degradation_study(const DegradationConfig& config) {
  const auto corpus = gen_synthetic_corpus(config.corpus);
  const auto [train_corpus, heldout] = split_corpus(corpus, config.n_heldout);

  auto start = make_initial_policy(train_corpus, config.train);
  start.add_videos(heldout);

  DegradationResult out;
  out.initial = probe(start, heldout);

  auto run = [&](double p, TrainingLog& log) {
    ToyPolicy policy = start;
    auto cfg = config.train;
    cfg.tvg_prob = p;
    log = train(policy, train_corpus, cfg);
    return probe(policy, heldout);
  };
  out.tvg_only = run(1.0, out.tvg_only_log);
  out.mixed = run(config.grounding_prob, out.mixed_log);

  out.verb_accuracy_lower =
      out.tvg_only.mean_verb_accuracy() < out.mixed.mean_verb_accuracy();
  out.miou_within_margin = out.mixed.miou >= out.tvg_only.miou - config.miou_margin;
  return out;
}

}  // namespace tvgrl::toylab
