#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvgrl/json_types.hpp"
#include "tvgrl/types.hpp"
#include "tvgrl/verbtext.hpp"

namespace tvgrl::evalharness {

inline constexpr std::array<double, 3> kDefaultThresholds = {0.3, 0.5, 0.7};

/// Percentage of pairs whose IoU exceeds m (or reaches it when inclusive).
/// Absent predictions count as misses. Throws ArgumentError on empty or
/// misaligned input and for m outside (0, 1].
double r1_at_m(std::span<const std::optional<Segment>> preds, std::span<const Segment> gts,
               double m, bool inclusive = false);

/// Mean IoU; absent predictions contribute 0.
double mean_iou(std::span<const std::optional<Segment>> preds, std::span<const Segment> gts);

struct EvalReport {
  std::size_t n_samples = 0;
  std::size_t n_tvg = 0;
  std::map<double, double> r1;  // threshold -> percentage
  double miou = 0.0;
  std::map<TaskKind, double> accuracy;  // invert kinds present in the run
  std::map<TaskKind, std::size_t> counts;
  std::map<std::string, std::string> metadata;

  Json to_json() const;
  std::string to_table() const;
  std::string to_csv() const;
};

struct ScoreOptions {
  std::vector<double> thresholds{kDefaultThresholds.begin(), kDefaultThresholds.end()};
  bool inclusive = false;
  const verbtext::Lexicon* lexicon = nullptr;  // null: builtin lexicon
};

/// Scores aligned instances and raw responses. Tvg samples feed R1 and mIoU
/// through their parsed answer segments; each invert kind reports its mean
/// binary reward. Throws ArgumentError when the lists are misaligned.
EvalReport score_run(std::span<const TaskInstance> instances,
                     std::span<const std::string> responses, const ScoreOptions& options = {});

/// Fixed 4-decimal rendering used by every report format.
std::string format_fixed4(double value);

}  // namespace tvgrl::evalharness
