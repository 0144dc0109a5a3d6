#include <algorithm>
#include <cmath>

#include "tvgrl/errors.hpp"
#include "tvgrl/rewards.hpp"

namespace tvgrl::rewards {

using verbtext::Lexicon;
using verbtext::lemmatize_verb;

double iou_reward(const Segment& pred, const Segment& gt) {
  const double inter =
      std::max(0.0, std::min(pred.end_s, gt.end_s) - std::max(pred.start_s, gt.start_s));
  const double uni = pred.length() + gt.length() - inter;
  if (!(uni > 0.0)) return pred == gt ? 1.0 : 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double vc_reward(std::string_view response, const VcTarget& target, const Lexicon& lexicon) {
  const auto reply = verbtext::tokenize(response);
  if (reply.empty()) return 0.0;
  const auto gt = lemmatize_verb(target.gt_verb.value, lexicon);
  auto matches = [&](const std::string& token) {
    return token != kBlankMarker && lemmatize_verb(token, lexicon) == gt;
  };

  const auto masked = verbtext::tokenize(target.masked_query);
  const auto blank = std::find(masked.begin(), masked.end(), std::string(kBlankMarker));
  if (blank != masked.end()) {
    const auto prefix = static_cast<std::size_t>(blank - masked.begin());
    const auto suffix = masked.size() - prefix - 1;
    if (reply.size() > prefix + suffix &&
        std::equal(masked.begin(), blank, reply.begin()) &&
        std::equal(blank + 1, masked.end(), reply.end() - static_cast<std::ptrdiff_t>(suffix))) {
      const auto first = reply.begin() + static_cast<std::ptrdiff_t>(prefix);
      const auto last = reply.end() - static_cast<std::ptrdiff_t>(suffix);
      return std::any_of(first, last, matches) ? 1.0 : 0.0;
    }
  }
  return std::any_of(reply.begin(), reply.end(), matches) ? 1.0 : 0.0;
}

namespace {

std::set<VerbLemma> normalized(const std::set<VerbLemma>& lemmas, const Lexicon& lexicon) {
  std::set<VerbLemma> out;
  for (const auto& l : lemmas) out.insert(lemmatize_verb(l.value, lexicon));
  return out;
}

}  // namespace

double ar_reward(std::string_view response, const ArTarget& target, const Lexicon& lexicon) {
  const auto hits = verbtext::extract_verbs(response, lexicon);
  if (hits.empty()) return 0.0;
  return normalized(target.gt_verbs, lexicon).contains(hits.front().lemma) ? 1.0 : 0.0;
}

double vd_reward(std::string_view response, const VdTarget& target, const Lexicon& lexicon) {
  std::set<VerbLemma> predicted;
  for (const auto& hit : verbtext::extract_verbs(response, lexicon)) predicted.insert(hit.lemma);
  for (const auto& gt : normalized(target.gt_verbs, lexicon)) {
    if (predicted.contains(gt)) return 1.0;
  }
  return 0.0;
}

TaskKind sample_task_kind(Rng& rng, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ArgumentError("task sampling probability must lie in [0, 1]");
  }
  if (rng.uniform() < p) return TaskKind::Tvg;
  return kInvertTaskKinds[rng.index(kInvertTaskKinds.size())];
}

RewardBreakdown combined_reward(const TaskInstance& instance, std::string_view raw,
                                const Lexicon& lexicon) {
  const auto parsed = parse_response(raw);
  RewardBreakdown b;
  b.kind = instance.kind;
  b.r_format = parsed.format_ok ? 1.0 : 0.0;
  std::visit(
      [&](const auto& target) {
        using T = std::decay_t<decltype(target)>;
        if constexpr (std::is_same_v<T, TvgTarget>) {
          b.r_task = parsed.answer_segment ? iou_reward(*parsed.answer_segment, target.segment)
                                           : 0.0;
        } else if (!parsed.answer_text) {
          b.r_task = 0.0;
        } else if constexpr (std::is_same_v<T, VcTarget>) {
          b.r_task = vc_reward(*parsed.answer_text, target, lexicon);
        } else if constexpr (std::is_same_v<T, ArTarget>) {
          b.r_task = ar_reward(*parsed.answer_text, target, lexicon);
        } else {
          b.r_task = vd_reward(*parsed.answer_text, target, lexicon);
        }
      },
      instance.target);
  b.r_total = b.r_format + b.r_task;
  b.alpha = instance.kind == TaskKind::Tvg ? 1 : 0;
  b.beta = 1 - b.alpha;
  return b;
}

Json to_json(const RewardBreakdown& b) {
  Json j = Json::object();
  j["kind"] = std::string(to_string(b.kind));
  j["r_format"] = b.r_format;
  j["r_task"] = b.r_task;
  j["r_total"] = b.r_total;
  j["alpha"] = b.alpha;
  j["beta"] = b.beta;
  return j;
}

RewardBreakdown breakdown_from_json(const Json& j) {
  try {
    RewardBreakdown b;
    b.kind = parse_task_kind(j.at("kind").get<std::string>());
    b.r_format = j.at("r_format").get<double>();
    b.r_task = j.at("r_task").get<double>();
    b.r_total = j.at("r_total").get<double>();
    b.alpha = j.at("alpha").get<int>();
    b.beta = j.at("beta").get<int>();
    return b;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed reward breakdown: ") + e.what());
  }
}

}  // namespace tvgrl::rewards
