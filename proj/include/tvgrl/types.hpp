#pragma once

#include <array>
#include <compare>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tvgrl {

/// A closed time interval in seconds.
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;

  double length() const { return end_s - start_s; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// True when 0 <= start <= end and both bounds are finite.
bool is_well_formed(const Segment& s);

enum class TaskKind { Tvg, VerbCompletion, ActionRecognition, VideoDescription };

inline constexpr std::array<TaskKind, 4> kAllTaskKinds = {
    TaskKind::Tvg, TaskKind::VerbCompletion, TaskKind::ActionRecognition,
    TaskKind::VideoDescription};

inline constexpr std::array<TaskKind, 3> kInvertTaskKinds = {
    TaskKind::VerbCompletion, TaskKind::ActionRecognition,
    TaskKind::VideoDescription};

/// Short wire names: "tvg", "vc", "ar", "vd".
std::string_view to_string(TaskKind kind);

/// Accepts the short names and the long names ("verb_completion", ...).
/// Throws ParseError on anything else.
TaskKind parse_task_kind(std::string_view name);

inline bool is_invert(TaskKind kind) { return kind != TaskKind::Tvg; }

/// Canonical base form of a verb ("closed" -> "close").
struct VerbLemma {
  std::string value;

  VerbLemma() = default;
  explicit VerbLemma(std::string v) : value(std::move(v)) {}

  friend auto operator<=>(const VerbLemma&, const VerbLemma&) = default;
  friend bool operator==(const VerbLemma&, const VerbLemma&) = default;
};

/// Blank marker that replaces the masked verb in a verb-completion query.
inline constexpr std::string_view kBlankMarker = "[ ]";

struct TvgTarget {
  Segment segment;
  double duration_s = 0.0;
  friend bool operator==(const TvgTarget&, const TvgTarget&) = default;
};

struct VcTarget {
  std::string masked_query;
  VerbLemma gt_verb;
  friend bool operator==(const VcTarget&, const VcTarget&) = default;
};

struct ArTarget {
  std::set<VerbLemma> gt_verbs;
  friend bool operator==(const ArTarget&, const ArTarget&) = default;
};

struct VdTarget {
  std::set<VerbLemma> gt_verbs;
  friend bool operator==(const VdTarget&, const VdTarget&) = default;
};

// Alternative order matches TaskKind.
using TaskTarget = std::variant<TvgTarget, VcTarget, ArTarget, VdTarget>;

TaskKind kind_of(const TaskTarget& target);

/// A concrete prompt + target for one task kind. For invert kinds the clip is
/// the ground-truth segment of the source annotation; for Tvg it spans the
/// whole video.
struct TaskInstance {
  std::string id;
  TaskKind kind = TaskKind::Tvg;
  std::string video_ref;
  Segment clip;
  std::string prompt;
  TaskTarget target;
  std::string source_annotation_id;

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

/// Violations of the TaskInstance invariants; empty when well formed.
std::vector<std::string> validate(const TaskInstance& instance);

}  // namespace tvgrl
