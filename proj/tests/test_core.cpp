#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "tvgrl/annotations.hpp"
#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/rng.hpp"
#include "tvgrl/types.hpp"

using namespace tvgrl;

namespace {

Annotation door() {
  Annotation a;
  a.id = "a1";
  a.video_ref = "v1";
  a.duration_s = 30.0;
  a.segment = {10.0, 20.0};
  a.query = "Person closed the door";
  return a;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

LoadOptions opts(AnnotationFormat f, bool strict = false) {
  LoadOptions o;
  o.format = f;
  o.strict = strict;
  return o;
}

}  // namespace

TEST_CASE("native line ingests field for field") {
  const auto r = parse_annotations(
      R"({"video":"v1","duration":30.0,"segment":[10.0,20.0],"query":"Person closed the door"})",
      opts(AnnotationFormat::Native));
  REQUIRE(r.annotations.size() == 1);
  const auto& a = r.annotations[0];
  CHECK(a.video_ref == "v1");
  CHECK(a.duration_s == 30.0);
  CHECK(a.segment == Segment{10.0, 20.0});
  CHECK(a.query == "Person closed the door");
  CHECK(a.id == "v1@1");
  CHECK(r.skipped.empty());
}

TEST_CASE("reversed segment fails strict load with its line number") {
  const std::string text =
      "{\"video\":\"v1\",\"duration\":30,\"segment\":[1,2],\"query\":\"a person sits\"}\n"
      "{\"video\":\"v1\",\"duration\":30,\"segment\":[20,10],\"query\":\"a person sits\"}\n";
  try {
    parse_annotations(text, opts(AnnotationFormat::Native, true));
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(e.line() == 2);
    CHECK(contains(e.violations(), "segment start after end"));
  }
}

TEST_CASE("lenient load skips the malformed line and reports it") {
  const std::string text =
      "{\"video\":\"v1\",\"duration\":30,\"segment\":[1,2],\"query\":\"a person sits\"}\n"
      "{\"video\":\"v2\",\"duration\":30,\"segment\":[1,\n"
      "{\"video\":\"v3\",\"duration\":30,\"segment\":[4,9],\"query\":\"a person opens a box\"}\n";
  const auto r = parse_annotations(text, opts(AnnotationFormat::Native));
  REQUIRE(r.annotations.size() == 2);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].line == 2);
  CHECK(r.annotations[0].video_ref == "v1");
  CHECK(r.annotations[1].video_ref == "v3");
}

TEST_CASE("segment beyond the duration is a validation error") {
  const std::string text =
      "{\"video\":\"v1\",\"duration\":15,\"segment\":[10,20],\"query\":\"a person sits\"}\n";
  CHECK_THROWS_AS(parse_annotations(text, opts(AnnotationFormat::Native, true)), ValidationError);
  const auto r = parse_annotations(text, opts(AnnotationFormat::Native));
  CHECK(r.annotations.empty());
  CHECK(r.skipped.size() == 1);
}

TEST_CASE("unreadable file is an I/O error") {
  CHECK_THROWS_AS(load_annotations("/nonexistent/annotations.jsonl", opts(AnnotationFormat::Native)),
                  IoError);
}

TEST_CASE("validate names each broken invariant") {
  CHECK(validate(door()).empty());

  auto a = door();
  a.segment = {10.0, 40.0};
  CHECK(validate(a) == std::vector<std::string>{"segment exceeds duration"});

  a = door();
  a.query = "   ";
  CHECK(validate(a) == std::vector<std::string>{"empty query"});

  a = door();
  a.segment = {-1.0, 5.0};
  CHECK(contains(validate(a), "negative segment start"));

  a = door();
  a.segment.end_s = std::numeric_limits<double>::quiet_NaN();
  CHECK(contains(validate(a), "non-finite segment bound"));

  a = door();
  a.video_ref.clear();
  CHECK(contains(validate(a), "empty video reference"));
}

TEST_CASE("split_multi_segment yields one annotation per window") {
  MultiSegmentRecord rec{"q7", "vid", 60.0, "a person jumps", {{2, 5}, {10, 14}}};
  const auto out = split_multi_segment(rec);
  REQUIRE(out.size() == 2);
  CHECK(out[0].segment == Segment{2, 5});
  CHECK(out[1].segment == Segment{10, 14});
  CHECK(out[0].id == "q7#0");
  CHECK(out[1].id == "q7#1");
  for (const auto& a : out) {
    CHECK(a.video_ref == "vid");
    CHECK(a.duration_s == 60.0);
    CHECK(a.query == "a person jumps");
  }

  MultiSegmentRecord single{"q8", "vid", 60.0, "a person jumps", {{3, 4}}};
  const auto one = split_multi_segment(single);
  REQUIRE(one.size() == 1);
  CHECK(one[0].id == "q8");
  CHECK(one[0].segment == Segment{3, 4});

  MultiSegmentRecord none{"q9", "vid", 60.0, "a person jumps", {}};
  CHECK_THROWS_AS(split_multi_segment(none), ArgumentError);

  MultiSegmentRecord bad{"q10", "vid", 10.0, "a person jumps", {{2, 5}, {8, 14}}};
  CHECK_THROWS_AS(split_multi_segment(bad), ValidationError);
}

TEST_CASE("split length equals window count for random records") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    MultiSegmentRecord rec{"r", "v", 100.0, "a person waves", {}};
    const auto k = 1 + rng.index(6);
    for (std::size_t i = 0; i < k; ++i) {
      const double s = 90.0 * rng.uniform();
      rec.windows.push_back({s, s + 10.0 * rng.uniform()});
    }
    CHECK(split_multi_segment(rec).size() == k);
  }
}

TEST_CASE("qvhighlight file splits into the sum of window counts") {
  const auto r = load_annotations(testutil::data_path("qvhighlight_sample.jsonl"),
                                  opts(AnnotationFormat::QvHighlight, true));
  // Windows per record in the fixture: 3, 1, 2.
  REQUIRE(r.annotations.size() == 6);
  CHECK(r.annotations[0].id == "101#0");
  CHECK(r.annotations[3].id == "102");
  CHECK(r.annotations[5].segment == Segment{40, 52});
  for (const auto& a : r.annotations) CHECK(validate(a).empty());
}

TEST_CASE("charades layout uses the durations map, then the fourth field") {
  const std::string text =
      "3MSZA 24.3 30.4##person turn a light on.\n"
      "3MSZA 0.0 6.9 31.2##person opens the door.\n"
      "AO8RW 0.0 6.9##a person is putting a book on a shelf.\n"
      "BROKEN 4.0##missing end\n";
  LoadOptions o = opts(AnnotationFormat::Charades);
  o.durations = {{"3MSZA", 33.79}};
  const auto r = parse_annotations(text, o);
  REQUIRE(r.annotations.size() == 3);
  CHECK(r.annotations[0].duration_s == 33.79);
  CHECK(r.annotations[0].segment == Segment{24.3, 30.4});
  CHECK(r.annotations[0].query == "person turn a light on.");
  CHECK(r.annotations[0].id == "3MSZA@1");
  CHECK(r.annotations[1].duration_s == 33.79);
  CHECK(r.annotations[2].duration_s == 6.9);
  REQUIRE(r.skipped.size() == 1);
  CHECK(r.skipped[0].line == 4);
}

TEST_CASE("charades fixture with durations csv") {
  LoadOptions o = opts(AnnotationFormat::Charades, true);
  o.durations = load_durations_csv(testutil::data_path("charades_durations.csv"));
  const auto r = load_annotations(testutil::data_path("charades_sample.txt"), o);
  CHECK(r.annotations.size() == 8);
  for (const auto& a : r.annotations) {
    CHECK(validate(a).empty());
    CHECK(o.durations.count(a.video_ref) == 1);
  }
}

TEST_CASE("activitynet entries map sentences to timestamps") {
  const std::string text = R"({
    "v_a": {"duration": 50.0, "timestamps": [[0, 10], [12.5, 30]],
            "sentences": ["A man opens a gate.", " He walks inside."]},
    "v_b": {"duration": 20.0, "timestamps": [[0, 5]], "sentences": []}
  })";
  const auto r = parse_annotations(text, opts(AnnotationFormat::ActivityNet));
  REQUIRE(r.annotations.size() == 2);
  CHECK(r.annotations[0].id == "v_a#0");
  CHECK(r.annotations[1].segment == Segment{12.5, 30});
  CHECK(r.skipped.size() == 1);
}

TEST_CASE("native serialization round-trips and keeps unknown fields") {
  const std::string text =
      "{\"video\":\"v1\",\"duration\":30.5,\"segment\":[0.1,20.25],\"query\":\"a person "
      "laughs\",\"id\":\"x\",\"source\":\"manual\",\"tags\":[1,2]}\n"
      "{\"video\":\"v2\",\"duration\":12,\"segment\":[3,4],\"query\":\"someone sneezes\"}\n";
  const auto first = parse_annotations(text, opts(AnnotationFormat::Native, true));
  const auto again =
      parse_annotations(to_native_lines(first.annotations), opts(AnnotationFormat::Native, true));
  REQUIRE(again.annotations.size() == first.annotations.size());
  for (std::size_t i = 0; i < first.annotations.size(); ++i) {
    const auto& a = first.annotations[i];
    const auto& b = again.annotations[i];
    CHECK(a.id == b.id);
    CHECK(a.video_ref == b.video_ref);
    CHECK(a.duration_s == b.duration_s);
    CHECK(a.segment == b.segment);
    CHECK(a.query == b.query);
    CHECK(a.extra == b.extra);
  }
  CHECK(first.annotations[0].extra["source"] == "manual");
}

TEST_CASE("task kinds parse short and long names") {
  for (auto k : kAllTaskKinds) CHECK(parse_task_kind(to_string(k)) == k);
  CHECK(parse_task_kind("verb_completion") == TaskKind::VerbCompletion);
  CHECK_THROWS_AS(parse_task_kind("caption"), ParseError);
}

TEST_CASE("task instances round-trip through their records") {
  TaskInstance inst;
  inst.id = "a1/vc";
  inst.kind = TaskKind::VerbCompletion;
  inst.video_ref = "v1";
  inst.clip = {10, 20};
  inst.prompt = "Add a verb for the event 'Person [ ] the door' based on the video.";
  inst.target = VcTarget{"Person [ ] the door", VerbLemma{"close"}};
  inst.source_annotation_id = "a1";
  CHECK(validate(inst).empty());
  CHECK(instance_from_json(to_json(inst)) == inst);

  inst.kind = TaskKind::Tvg;
  CHECK(!validate(inst).empty());

  TaskInstance ar = inst;
  ar.kind = TaskKind::ActionRecognition;
  ar.target = ArTarget{{VerbLemma{"walk"}, VerbLemma{"laugh"}}};
  CHECK(instance_from_json(to_json(ar)) == ar);
  ar.target = ArTarget{};
  CHECK(!validate(ar).empty());
}

TEST_CASE("rng streams are reproducible and bounded") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = a.index(7);
    CHECK(k == b.index(7));
    CHECK(k < 7);
  }
  CHECK(Rng::mix(1, 2) != Rng::mix(2, 1));
}

TEST_CASE("normal draws have unit moments") {
  Rng r(9);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.02);
}
