#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "tvgrl/errors.hpp"
#include "tvgrl/rewards.hpp"
#include "tvgrl/toylab.hpp"
#include "tvgrl/verbtext.hpp"

namespace tvgrl::toylab {

using grpo::PolicySlot;

namespace {

constexpr std::string_view kTvgThink = "<think>The event starts where the motion begins.</think> ";
constexpr std::string_view kVerbThink = "<think>The clip shows one action.</think> ";

std::string wrap(std::string_view think, std::string_view answer) {
  std::string out(think);
  out += "<answer>";
  out += answer;
  out += "</answer>";
  return out;
}

double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

std::string third_person(const std::string& lemma) {
  return verbtext::inflect(VerbLemma{lemma}, verbtext::Inflection::ThirdPerson);
}

}  // namespace

// Everything one forward pass produces, kept for the backward pass.
struct ToyPolicy::Forward {
  bool tvg = false;
  const SyntheticVideo* video = nullptr;
  std::vector<std::size_t> steps;  // timesteps read
  std::vector<double> z;           // steps.size() x hidden
  // Tvg
  std::vector<double> h;       // bins x hidden
  std::vector<double> d_start; // bins x hidden
  std::vector<double> d_end;   // bins x hidden
  std::vector<double> start_logits;
  std::vector<double> end_logits;
  // Verb
  std::vector<double> g;  // hidden
  // Output distribution in support order.
  std::vector<double> logp;
};

ToyPolicy::ToyPolicy(ToyPolicyShape shape, const SyntheticCorpus& corpus) : shape_(shape) {
  if (shape_.bins == 0 || shape_.timesteps % shape_.bins != 0) {
    throw ArgumentError("bin count must divide the timestep count");
  }
  if (shape_.hidden == 0 || shape_.feature_dim == 0 || shape_.n_actions < 2) {
    throw ArgumentError("invalid toy policy shape");
  }
  if (!(shape_.temperature > 0.0) || !std::isfinite(shape_.temperature)) {
    throw ArgumentError("temperature must be positive");
  }
  if (corpus.config.feature_dim != shape_.feature_dim ||
      corpus.config.timesteps != shape_.timesteps ||
      corpus.config.n_actions != shape_.n_actions) {
    throw ArgumentError("policy shape does not match the corpus");
  }
  add_videos(corpus);
  for (std::size_t s = 0; s < shape_.bins; ++s) {
    for (std::size_t e = s; e < shape_.bins; ++e) pairs_.emplace_back(s, e);
  }
  current_.assign(parameter_count(), 0.0);
  old_ = current_;
  ref_ = current_;
}

void ToyPolicy::add_videos(const SyntheticCorpus& corpus) {
  for (const auto& v : corpus.videos) videos_[v.id] = &v;
}

std::size_t ToyPolicy::parameter_count() const {
  const auto trunk = shape_.feature_dim * shape_.hidden;
  return trunk + 2 * shape_.hidden * shape_.bins + shape_.hidden * shape_.n_actions +
         (shape_.isolated_heads ? trunk : 0);
}

void ToyPolicy::init_random(Rng& rng, double scale) {
  auto p = unpack(current_);
  const double trunk_scale = 1.0 / std::sqrt(static_cast<double>(shape_.feature_dim));
  for (auto& v : p.trunk) v = trunk_scale * rng.normal();
  for (auto& v : p.head_start) v = scale * rng.normal();
  for (auto& v : p.head_end) v = scale * rng.normal();
  for (auto& v : p.head_verb) v = scale * rng.normal();
  for (auto& v : p.verb_trunk) v = trunk_scale * rng.normal();
  reset(pack(p));
}

ToyPolicyParams ToyPolicy::unpack(std::span<const double> theta) const {
  if (theta.size() != parameter_count()) throw ArgumentError("parameter vector size mismatch");
  ToyPolicyParams p;
  auto it = theta.begin();
  auto take = [&](std::vector<double>& dst, std::size_t n) {
    dst.assign(it, it + static_cast<std::ptrdiff_t>(n));
    it += static_cast<std::ptrdiff_t>(n);
  };
  const auto trunk = shape_.feature_dim * shape_.hidden;
  take(p.trunk, trunk);
  take(p.head_start, shape_.hidden * shape_.bins);
  take(p.head_end, shape_.hidden * shape_.bins);
  take(p.head_verb, shape_.hidden * shape_.n_actions);
  if (shape_.isolated_heads) take(p.verb_trunk, trunk);
  return p;
}

std::vector<double> ToyPolicy::pack(const ToyPolicyParams& p) const {
  std::vector<double> theta;
  theta.reserve(parameter_count());
  for (const auto* part : {&p.trunk, &p.head_start, &p.head_end, &p.head_verb, &p.verb_trunk}) {
    theta.insert(theta.end(), part->begin(), part->end());
  }
  if (theta.size() != parameter_count()) throw ArgumentError("parameter blocks have wrong sizes");
  return theta;
}

void ToyPolicy::set_parameters(std::span<const double> theta) {
  if (theta.size() != parameter_count()) throw ArgumentError("parameter vector size mismatch");
  current_.assign(theta.begin(), theta.end());
}

void ToyPolicy::snapshot(PolicySlot target) {
  switch (target) {
    case PolicySlot::Current:
      break;
    case PolicySlot::Old:
      old_ = current_;
      break;
    case PolicySlot::Ref:
      ref_ = current_;
      break;
  }
}

void ToyPolicy::reset(std::span<const double> theta) {
  set_parameters(theta);
  old_ = current_;
  ref_ = current_;
}

const std::vector<double>& ToyPolicy::slot_params(PolicySlot slot) const {
  switch (slot) {
    case PolicySlot::Old:
      return old_;
    case PolicySlot::Ref:
      return ref_;
    case PolicySlot::Current:
      break;
  }
  return current_;
}

const SyntheticVideo& ToyPolicy::video_for(const TaskInstance& instance) const {
  const auto it = videos_.find(instance.video_ref);
  if (it == videos_.end()) throw ArgumentError("unknown video '" + instance.video_ref + "'");
  return *it->second;
}

Segment ToyPolicy::bin_segment(std::size_t s, std::size_t e) const {
  const double w = static_cast<double>(shape_.timesteps) / static_cast<double>(shape_.bins);
  return {static_cast<double>(s) * w, static_cast<double>(e + 1) * w};
}

ToyPolicy::Forward ToyPolicy::forward(const TaskInstance& instance,
                                      std::span<const double> theta) const {
  Forward f;
  f.video = &video_for(instance);
  f.tvg = instance.kind == TaskKind::Tvg;
  const auto hd = shape_.hidden;
  const auto dim = shape_.feature_dim;
  const auto nb = shape_.bins;
  const double tau = shape_.temperature;

  const auto trunk_size = dim * hd;
  const double* w_shared = theta.data();
  const double* u = w_shared + trunk_size;
  const double* v = u + hd * nb;
  const double* q = v + hd * nb;
  const double* w_verb = shape_.isolated_heads ? q + hd * shape_.n_actions : w_shared;
  const double* w = f.tvg ? w_shared : w_verb;

  if (f.tvg) {
    for (std::size_t t = 0; t < shape_.timesteps; ++t) f.steps.push_back(t);
  } else {
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(instance.clip.start_s)));
    const auto hi = std::min(shape_.timesteps,
                             static_cast<std::size_t>(std::max(0.0, std::ceil(instance.clip.end_s))));
    for (std::size_t t = lo; t < hi; ++t) f.steps.push_back(t);
    if (f.steps.empty()) throw ArgumentError("clip covers no timesteps");
  }

  f.z.assign(f.steps.size() * hd, 0.0);
  for (std::size_t k = 0; k < f.steps.size(); ++k) {
    const auto x = f.video->frame(f.steps[k]);
    for (std::size_t j = 0; j < hd; ++j) {
      double a = 0.0;
      for (std::size_t i = 0; i < dim; ++i) a += x[i] * w[i * hd + j];
      f.z[k * hd + j] = std::tanh(a);
    }
  }

  if (f.tvg) {
    const auto per_bin = shape_.timesteps / nb;
    f.h.assign(nb * hd, 0.0);
    for (std::size_t t = 0; t < shape_.timesteps; ++t) {
      for (std::size_t j = 0; j < hd; ++j) f.h[(t / per_bin) * hd + j] += f.z[t * hd + j];
    }
    for (auto& x : f.h) x /= static_cast<double>(per_bin);
    f.d_start.assign(nb * hd, 0.0);
    f.d_end.assign(nb * hd, 0.0);
    f.start_logits.assign(nb, 0.0);
    f.end_logits.assign(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t j = 0; j < hd; ++j) {
        const double hb = f.h[b * hd + j];
        f.d_start[b * hd + j] = hb - (b > 0 ? f.h[(b - 1) * hd + j] : 0.0);
        f.d_end[b * hd + j] = hb - (b + 1 < nb ? f.h[(b + 1) * hd + j] : 0.0);
        f.start_logits[b] += u[j * nb + b] * f.d_start[b * hd + j];
        f.end_logits[b] += v[j * nb + b] * f.d_end[b * hd + j];
      }
      f.start_logits[b] /= tau;
      f.end_logits[b] /= tau;
    }
    f.logp.resize(pairs_.size());
    for (std::size_t k = 0; k < pairs_.size(); ++k) {
      f.logp[k] = f.start_logits[pairs_[k].first] + f.end_logits[pairs_[k].second];
    }
  } else {
    f.g.assign(hd, 0.0);
    for (std::size_t k = 0; k < f.steps.size(); ++k) {
      for (std::size_t j = 0; j < hd; ++j) f.g[j] += f.z[k * hd + j];
    }
    for (auto& x : f.g) x /= static_cast<double>(f.steps.size());
    f.logp.assign(shape_.n_actions, 0.0);
    for (std::size_t a = 0; a < shape_.n_actions; ++a) {
      for (std::size_t j = 0; j < hd; ++j) f.logp[a] += q[j * shape_.n_actions + a] * f.g[j];
      f.logp[a] /= tau;
    }
  }
  const double lz = log_sum_exp(f.logp);
  for (auto& x : f.logp) x -= lz;
  return f;
}

std::string ToyPolicy::render(const TaskInstance& instance, std::size_t k) const {
  switch (instance.kind) {
    case TaskKind::Tvg: {
      const auto seg = bin_segment(pairs_.at(k).first, pairs_.at(k).second);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f to %.2f", seg.start_s, seg.end_s);
      return wrap(kTvgThink, buf);
    }
    case TaskKind::VerbCompletion: {
      auto text = std::get<VcTarget>(instance.target).masked_query;
      const auto pos = text.find(kBlankMarker);
      const auto verb = third_person(toy_verbs().at(k));
      if (pos == std::string::npos) return wrap(kVerbThink, verb);
      text.replace(pos, kBlankMarker.size(), verb);
      return wrap(kVerbThink, text);
    }
    case TaskKind::ActionRecognition:
      return wrap(kVerbThink, toy_verbs().at(k));
    case TaskKind::VideoDescription:
      return wrap(kVerbThink, "a person " + third_person(toy_verbs().at(k)));
  }
  return {};
}

std::optional<std::vector<std::string>> ToyPolicy::support(const TaskInstance& instance) const {
  const auto n = instance.kind == TaskKind::Tvg ? pairs_.size() : shape_.n_actions;
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) out.push_back(render(instance, k));
  return out;
}

std::optional<std::size_t> ToyPolicy::output_index(const TaskInstance& instance,
                                                   std::string_view response) const {
  if (instance.kind == TaskKind::Tvg) {
    const auto parsed = rewards::parse_response(response);
    if (!parsed.answer_segment) return std::nullopt;
    const double w = static_cast<double>(shape_.timesteps) / static_cast<double>(shape_.bins);
    const double s = std::round(parsed.answer_segment->start_s / w);
    const double e = std::round(parsed.answer_segment->end_s / w) - 1.0;
    if (s < 0.0 || e < s || e >= static_cast<double>(shape_.bins)) return std::nullopt;
    const auto si = static_cast<std::size_t>(s);
    const auto ei = static_cast<std::size_t>(e);
    // Index of (s, e) in the upper-triangular enumeration.
    const auto nb = shape_.bins;
    const auto k = si * nb - si * (si - 1) / 2 + (ei - si);
    if (render(instance, k) != response) return std::nullopt;
    return k;
  }
  for (std::size_t k = 0; k < shape_.n_actions; ++k) {
    if (render(instance, k) == response) return k;
  }
  return std::nullopt;
}

double ToyPolicy::log_prob(const TaskInstance& instance, std::string_view response,
                           PolicySlot slot) const {
  const auto k = output_index(instance, response);
  if (!k) return -std::numeric_limits<double>::infinity();
  return forward(instance, slot_params(slot)).logp[*k];
}

std::vector<double> ToyPolicy::distribution(const TaskInstance& instance, PolicySlot slot) const {
  auto f = forward(instance, slot_params(slot));
  for (auto& x : f.logp) x = std::exp(x);
  return f.logp;
}

std::vector<std::string> ToyPolicy::generate(const TaskInstance& instance, int n,
                                             Rng& rng) const {
  const auto probs = distribution(instance);
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t k = 0;
    for (; k + 1 < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) break;
    }
    out.push_back(render(instance, k));
  }
  return out;
}

std::string ToyPolicy::greedy(const TaskInstance& instance) const {
  const auto probs = distribution(instance);
  const auto k = static_cast<std::size_t>(std::max_element(probs.begin(), probs.end()) -
                                          probs.begin());
  return render(instance, k);
}

std::vector<double> ToyPolicy::output_gradient(const TaskInstance& instance,
                                               std::size_t k) const {
  const auto f = forward(instance, current_);
  const auto hd = shape_.hidden;
  const auto dim = shape_.feature_dim;
  const auto nb = shape_.bins;
  const auto na = shape_.n_actions;
  const double tau = shape_.temperature;
  const auto trunk_size = dim * hd;
  const std::size_t off_u = trunk_size;
  const std::size_t off_v = off_u + hd * nb;
  const std::size_t off_q = off_v + hd * nb;
  const std::size_t off_w2 = off_q + hd * na;

  std::vector<double> grad(parameter_count(), 0.0);
  std::vector<double> gz(f.steps.size() * hd, 0.0);
  std::size_t off_w = 0;

  if (f.tvg) {
    std::vector<double> ds(nb, 0.0), de(nb, 0.0);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      const double p = std::exp(f.logp[i]);
      ds[pairs_[i].first] -= p;
      de[pairs_[i].second] -= p;
    }
    ds[pairs_[k].first] += 1.0;
    de[pairs_[k].second] += 1.0;

    std::vector<double> gh(nb * hd, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t j = 0; j < hd; ++j) {
        const double us = current_[off_u + j * nb + b];
        const double ve = current_[off_v + j * nb + b];
        grad[off_u + j * nb + b] = ds[b] * f.d_start[b * hd + j] / tau;
        grad[off_v + j * nb + b] = de[b] * f.d_end[b * hd + j] / tau;
        const double cs = ds[b] * us / tau;
        const double ce = de[b] * ve / tau;
        gh[b * hd + j] += cs + ce;
        if (b > 0) gh[(b - 1) * hd + j] -= cs;
        if (b + 1 < nb) gh[(b + 1) * hd + j] -= ce;
      }
    }
    const auto per_bin = shape_.timesteps / nb;
    for (std::size_t t = 0; t < f.steps.size(); ++t) {
      for (std::size_t j = 0; j < hd; ++j) {
        gz[t * hd + j] = gh[(t / per_bin) * hd + j] / static_cast<double>(per_bin);
      }
    }
  } else {
    std::vector<double> dl(na);
    for (std::size_t a = 0; a < na; ++a) dl[a] = (a == k ? 1.0 : 0.0) - std::exp(f.logp[a]);
    std::vector<double> gg(hd, 0.0);
    for (std::size_t j = 0; j < hd; ++j) {
      for (std::size_t a = 0; a < na; ++a) {
        grad[off_q + j * na + a] = dl[a] * f.g[j] / tau;
        gg[j] += dl[a] * current_[off_q + j * na + a] / tau;
      }
    }
    const double n = static_cast<double>(f.steps.size());
    for (std::size_t t = 0; t < f.steps.size(); ++t) {
      for (std::size_t j = 0; j < hd; ++j) gz[t * hd + j] = gg[j] / n;
    }
    if (shape_.isolated_heads) off_w = off_w2;
  }

  for (std::size_t t = 0; t < f.steps.size(); ++t) {
    const auto x = f.video->frame(f.steps[t]);
    for (std::size_t j = 0; j < hd; ++j) {
      const double z = f.z[t * hd + j];
      const double ga = gz[t * hd + j] * (1.0 - z * z);
      if (ga == 0.0) continue;
      for (std::size_t i = 0; i < dim; ++i) grad[off_w + i * hd + j] += x[i] * ga;
    }
  }
  return grad;
}

std::vector<double> ToyPolicy::log_prob_gradient(const TaskInstance& instance,
                                                 std::string_view response) const {
  const auto k = output_index(instance, response);
  if (!k) throw ArgumentError("response outside the policy support");
  return output_gradient(instance, *k);
}

void ToyPolicy::warm_start_verbs(std::span<const SyntheticVideo> videos, std::size_t epochs,
                                 double lr) {
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& v : videos) {
      TaskInstance inst;
      inst.id = v.id + "/warm";
      inst.kind = TaskKind::ActionRecognition;
      inst.video_ref = v.id;
      inst.clip = v.gt_span;
      inst.target = ArTarget{{VerbLemma{toy_verbs()[v.action_id]}}};
      const auto g = output_gradient(inst, v.action_id);
      for (std::size_t j = 0; j < g.size(); ++j) current_[j] += lr * g[j];
    }
  }
  old_ = current_;
  ref_ = current_;
}

}  // namespace tvgrl::toylab
