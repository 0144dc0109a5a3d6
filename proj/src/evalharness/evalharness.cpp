#include "tvgrl/evalharness.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/rewards.hpp"

namespace tvgrl::evalharness {

namespace {

void check_aligned(std::size_t n_preds, std::size_t n_gts) {
  if (n_preds != n_gts) {
    throw ArgumentError("prediction count " + std::to_string(n_preds) +
                        " does not match ground-truth count " + std::to_string(n_gts));
  }
  if (n_gts == 0) throw ArgumentError("no samples to evaluate");
}

std::string threshold_label(double m) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "r1@%g", m);
  return buf;
}

}  // namespace

std::string format_fixed4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  return buf;
}

double r1_at_m(std::span<const std::optional<Segment>> preds, std::span<const Segment> gts,
               double m, bool inclusive) {
  check_aligned(preds.size(), gts.size());
  if (!(m > 0.0 && m <= 1.0)) throw ArgumentError("threshold must lie in (0, 1]");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (!preds[i]) continue;
    const double iou = rewards::iou_reward(*preds[i], gts[i]);
    if (inclusive ? iou >= m : iou > m) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(gts.size());
}

double mean_iou(std::span<const std::optional<Segment>> preds, std::span<const Segment> gts) {
  check_aligned(preds.size(), gts.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    if (preds[i]) sum += rewards::iou_reward(*preds[i], gts[i]);
  }
  return sum / static_cast<double>(gts.size());
}

EvalReport score_run(std::span<const TaskInstance> instances,
                     std::span<const std::string> responses, const ScoreOptions& options) {
  if (instances.size() != responses.size()) {
    throw ArgumentError("instance count " + std::to_string(instances.size()) +
                        " does not match response count " + std::to_string(responses.size()));
  }
  const auto& lexicon = options.lexicon ? *options.lexicon : verbtext::Lexicon::builtin();
  EvalReport report;
  report.n_samples = instances.size();

  std::vector<std::optional<Segment>> preds;
  std::vector<Segment> gts;
  std::map<TaskKind, double> reward_sums;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    ++report.counts[inst.kind];
    if (inst.kind == TaskKind::Tvg) {
      const auto& target = std::get<TvgTarget>(inst.target);
      preds.push_back(rewards::parse_response(responses[i]).answer_segment);
      gts.push_back(target.segment);
    } else {
      reward_sums[inst.kind] += rewards::combined_reward(inst, responses[i], lexicon).r_task;
    }
  }

  report.n_tvg = gts.size();
  if (!gts.empty()) {
    for (double m : options.thresholds) {
      report.r1[m] = r1_at_m(preds, gts, m, options.inclusive);
    }
    report.miou = mean_iou(preds, gts);
  }
  for (const auto& [kind, sum] : reward_sums) {
    report.accuracy[kind] = sum / static_cast<double>(report.counts[kind]);
  }
  return report;
}

Json EvalReport::to_json() const {
  Json j;
  j["n_samples"] = n_samples;
  j["n_tvg"] = n_tvg;
  for (const auto& [m, pct] : r1) j[threshold_label(m)] = std::stod(format_fixed4(pct));
  j["miou"] = std::stod(format_fixed4(miou));
  for (auto kind : kInvertTaskKinds) {
    if (auto it = accuracy.find(kind); it != accuracy.end()) {
      j[std::string(to_string(kind)) + "_acc"] = std::stod(format_fixed4(it->second));
    }
  }
  Json c = Json::object();
  for (auto kind : kAllTaskKinds) {
    if (auto it = counts.find(kind); it != counts.end()) c[std::string(to_string(kind))] = it->second;
  }
  j["counts"] = c;
  Json meta = Json::object();
  for (const auto& [k, v] : metadata) meta[k] = v;
  j["metadata"] = meta;
  return j;
}

namespace {

std::vector<std::pair<std::string, std::string>> flat_fields(const EvalReport& r) {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("n_samples", std::to_string(r.n_samples));
  out.emplace_back("n_tvg", std::to_string(r.n_tvg));
  for (const auto& [m, pct] : r.r1) out.emplace_back(threshold_label(m), format_fixed4(pct));
  out.emplace_back("miou", format_fixed4(r.miou));
  for (auto kind : kInvertTaskKinds) {
    if (auto it = r.accuracy.find(kind); it != r.accuracy.end()) {
      out.emplace_back(std::string(to_string(kind)) + "_acc", format_fixed4(it->second));
    }
  }
  return out;
}

}  // namespace

std::string EvalReport::to_table() const {
  const auto fields = flat_fields(*this);
  std::size_t width = 0;
  for (const auto& [k, v] : fields) width = std::max(width, k.size());
  std::ostringstream out;
  for (const auto& [k, v] : fields) {
    out << k << std::string(width - k.size() + 2, ' ') << v << '\n';
  }
  for (const auto& [k, v] : metadata) {
    out << k << std::string(width > k.size() ? width - k.size() + 2 : 2, ' ') << v << '\n';
  }
  return out.str();
}

std::string EvalReport::to_csv() const {
  const auto fields = flat_fields(*this);
  std::string header, row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) {
      header += ',';
      row += ',';
    }
    header += fields[i].first;
    row += fields[i].second;
  }
  return header + '\n' + row + '\n';
}

}  // namespace tvgrl::evalharness
