#include <doctest.h>

#include <cmath>
#include <set>
#include <string>

#include "test_util.hpp"
#include "tvgrl/errors.hpp"
#include "tvgrl/rewards.hpp"
#include "tvgrl/rng.hpp"

using namespace tvgrl;
using namespace tvgrl::rewards;
using tvgrl::verbtext::lemmatize_verb;

namespace {

TaskInstance tvg_instance(Segment gt, double duration = 30.0) {
  TaskInstance inst;
  inst.id = "a/tvg";
  inst.kind = TaskKind::Tvg;
  inst.video_ref = "v";
  inst.clip = {0.0, duration};
  inst.prompt = "find it";
  inst.target = TvgTarget{gt, duration};
  return inst;
}

TaskInstance vc_instance(const std::string& masked, const std::string& verb) {
  TaskInstance inst;
  inst.id = "a/vc";
  inst.kind = TaskKind::VerbCompletion;
  inst.video_ref = "v";
  inst.clip = {10, 20};
  inst.prompt = "fill it";
  inst.target = VcTarget{masked, VerbLemma{verb}};
  return inst;
}

ArTarget ar(std::initializer_list<const char*> verbs) {
  ArTarget t;
  for (auto v : verbs) t.gt_verbs.insert(VerbLemma{v});
  return t;
}

VdTarget vd(std::initializer_list<const char*> verbs) {
  VdTarget t;
  for (auto v : verbs) t.gt_verbs.insert(VerbLemma{v});
  return t;
}

}  // namespace

TEST_CASE("parse_response worked examples") {
  auto p = parse_response("<think>scan video</think> <answer>12.5 to 31.0</answer>");
  CHECK(p.format_ok);
  REQUIRE(p.answer_segment);
  CHECK(*p.answer_segment == Segment{12.5, 31.0});
  CHECK(p.think == "scan video");
  CHECK(p.answer_text == "12.5 to 31.0");

  p = parse_response("12.5 to 31.0");
  CHECK_FALSE(p.format_ok);
  CHECK_FALSE(p.answer_segment);

  p = parse_response("<think>x</think> <answer>31.0 to 12.5</answer>");
  CHECK(p.format_ok);
  CHECK_FALSE(p.answer_segment);
}

TEST_CASE("template strictness") {
  CHECK(format_reward("<think>a</think><answer>b</answer>") == 1.0);
  CHECK(format_reward("  \n<think>a</think>\n\n<answer>b</answer>\t ") == 1.0);
  CHECK(format_reward("") == 0.0);
  CHECK(format_reward("<think>a</think> <answer>b</answer><answer>c</answer>") == 0.0);
  CHECK(format_reward("<think>a</think> <think>b</think> <answer>c</answer>") == 0.0);
  CHECK(format_reward("<think>a</think> <answer>b</answer> trailing") == 0.0);
  CHECK(format_reward("lead <think>a</think> <answer>b</answer>") == 0.0);
  CHECK(format_reward("<think>a</think> gap <answer>b</answer>") == 0.0);
  CHECK(format_reward("<answer>b</answer> <think>a</think>") == 0.0);
  CHECK(format_reward("<think>a <answer>b</answer></think>") == 0.0);
  CHECK(format_reward("<think>a</think> <answer>b") == 0.0);
}

TEST_CASE("answer segments need numbers around 'to'") {
  CHECK(parse_answer_segment("10 to 20") == Segment{10, 20});
  CHECK(parse_answer_segment(" 0.5  to  7.25 ") == Segment{0.5, 7.25});
  CHECK(parse_answer_segment("3 to 3") == Segment{3, 3});
  CHECK_FALSE(parse_answer_segment("10to20"));
  CHECK_FALSE(parse_answer_segment("-1 to 2"));
  CHECK_FALSE(parse_answer_segment("1e2 to 3e2"));
  CHECK_FALSE(parse_answer_segment("10 to 20 seconds"));
  CHECK_FALSE(parse_answer_segment("from 10 to 20"));
  CHECK_FALSE(parse_answer_segment("20 to 10"));
  CHECK_FALSE(parse_answer_segment("nan to 3"));
}

TEST_CASE("iou worked examples") {
  CHECK(iou_reward({10, 20}, {10, 20}) == 1.0);
  CHECK(std::abs(iou_reward({10, 20}, {15, 25}) - 5.0 / 15.0) <= 1e-12);
  CHECK(iou_reward({0, 5}, {10, 20}) == 0.0);
  CHECK(iou_reward({0, 5}, {5, 10}) == 0.0);
  CHECK(iou_reward({3, 3}, {3, 3}) == 1.0);
  CHECK(iou_reward({3, 3}, {4, 4}) == 0.0);
  CHECK(iou_reward({3, 3}, {0, 10}) == 0.0);
}

TEST_CASE("iou properties on random intervals") {
  Rng rng(17);
  for (int i = 0; i < 5000; ++i) {
    const double a0 = 100 * rng.uniform(), a1 = a0 + 20 * rng.uniform();
    const double b0 = 100 * rng.uniform(), b1 = b0 + 20 * rng.uniform();
    const Segment a{a0, a1}, b{b0, b1};
    const double v = iou_reward(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == iou_reward(b, a));
    if (a.length() > 0) CHECK(iou_reward(a, a) == 1.0);
    if (v == 1.0 && a.length() > 0) CHECK(a == b);
  }
}

TEST_CASE("vc_reward worked examples") {
  const VcTarget t{"Person [ ] the door", VerbLemma{"closed"}};
  CHECK(vc_reward("Person [closes] the door", t) == 1.0);
  CHECK(vc_reward("Person closes the door", t) == 1.0);
  CHECK(vc_reward("Person opens the door", t) == 0.0);
  CHECK(vc_reward("closed", t) == 1.0);
  CHECK(vc_reward("closing", t) == 1.0);
  CHECK(vc_reward("", t) == 0.0);
}

TEST_CASE("ar_reward worked examples") {
  const auto t = ar({"walk", "laugh"});
  CHECK(ar_reward("walk", t) == 1.0);
  CHECK(ar_reward("run", t) == 0.0);
  CHECK(ar_reward("laughing", t) == 1.0);
  CHECK(ar_reward("", t) == 0.0);
  CHECK(ar_reward("the door", t) == 0.0);
  CHECK(ar_reward("run and walk", t) == 0.0);
}

TEST_CASE("vd_reward worked examples") {
  CHECK(vd_reward("A person jumps and laughs", vd({"jump"})) == 1.0);
  CHECK(vd_reward("A person sits quietly", vd({"jump"})) == 0.0);
  CHECK(vd_reward("someone closed a window", vd({"open", "close"})) == 1.0);
  CHECK(vd_reward("", vd({"open"})) == 0.0);
}

TEST_CASE("verb rewards are invariant under inflection of the compared verb") {
  const std::vector<std::vector<std::string>> families = {
      {"close", "closes", "closed", "closing"},
      {"run", "runs", "ran", "running"},
      {"carry", "carries", "carried", "carrying"},
      {"take", "takes", "took", "taking", "taken"}};
  for (const auto& fam : families) {
    for (const auto& gt : fam) {
      for (const auto& pred : fam) {
        CHECK(vc_reward("Person " + pred + " the door", VcTarget{"Person [ ] the door", VerbLemma{gt}}) == 1.0);
        CHECK(ar_reward(pred, ArTarget{{lemmatize_verb(gt)}}) == 1.0);
        CHECK(vd_reward("a person " + pred + " it", VdTarget{{lemmatize_verb(gt)}}) == 1.0);
      }
    }
  }
}

TEST_CASE("cosine similarity baseline") {
  EmbeddingTable e;
  e.add("a", {1, 0});
  e.add("b", {0, 1});
  e.add("c", {1 / std::sqrt(2.0), 1 / std::sqrt(2.0)});
  e.add("d", {-1, 0});
  CHECK(cosine_similarity_reward("a", "a", e) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity_reward("a", "b", e) == 0.0);
  CHECK(cosine_similarity_reward("c", "a", e) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  CHECK(cosine_similarity_reward("d", "a", e) == 0.0);
  CHECK(e.missing_lookups() == 0);
  CHECK(cosine_similarity_reward("zzz", "a", e) == 0.0);
  CHECK(e.missing_lookups() == 1);

  const auto f = EmbeddingTable::load(testutil::data_path("embeddings.txt"));
  CHECK(f.dimension() == 3);
  CHECK(f.size() == 5);
  CHECK(cosine_similarity_reward("walked", "walk", f) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity_reward("walking", "strolls", f) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(cosine_similarity_reward("sit", "walk", f) == 0.0);
  CHECK_THROWS_AS(EmbeddingTable::parse("a 1 2\nb 1\n"), ParseError);
}

TEST_CASE("task kind sampler frequencies") {
  Rng one(1);
  for (int i = 0; i < 1000; ++i) CHECK(sample_task_kind(one, 1.0) == TaskKind::Tvg);

  Rng zero(2);
  std::map<TaskKind, int> counts;
  for (int i = 0; i < 90000; ++i) ++counts[sample_task_kind(zero, 0.0)];
  CHECK(counts[TaskKind::Tvg] == 0);
  for (auto k : kInvertTaskKinds) {
    CHECK(std::abs(counts[k] / 90000.0 - 1.0 / 3.0) <= 0.01);
  }

  Rng eight(3);
  int tvg = 0;
  for (int i = 0; i < 100000; ++i) tvg += sample_task_kind(eight, 0.8) == TaskKind::Tvg;
  CHECK(std::abs(tvg / 100000.0 - 0.8) <= 0.01);

  Rng r(4);
  CHECK_THROWS_AS(sample_task_kind(r, 1.5), ArgumentError);
  CHECK_THROWS_AS(sample_task_kind(r, -0.1), ArgumentError);
  CHECK_THROWS_AS(sample_task_kind(r, std::nan("")), ArgumentError);
}

TEST_CASE("sampler streams are reproducible") {
  Rng a(99), b(99);
  for (int i = 0; i < 10000; ++i) CHECK(sample_task_kind(a, 0.8) == sample_task_kind(b, 0.8));
}

TEST_CASE("combined reward worked examples") {
  const auto tvg = tvg_instance({10, 20});
  auto b = combined_reward(tvg, "<think>look</think> <answer>10.0 to 20.0</answer>");
  CHECK(b.r_format == 1.0);
  CHECK(b.r_task == 1.0);
  CHECK(b.r_total == 2.0);
  CHECK(b.alpha == 1);
  CHECK(b.beta == 0);

  const auto vc = vc_instance("Person [ ] the door", "closed");
  b = combined_reward(vc, "<think>look</think> <answer>Person closes the door</answer>");
  CHECK(b.r_format == 1.0);
  CHECK(b.r_task == 1.0);
  CHECK(b.r_total == 2.0);
  CHECK(b.alpha == 0);
  CHECK(b.beta == 1);

  b = combined_reward(tvg, "I think it happens somewhere in the middle");
  CHECK(b.r_format == 0.0);
  CHECK(b.r_task == 0.0);
  CHECK(b.r_total == 0.0);

  b = combined_reward(tvg, "<think>a</think> <answer>15 to 25</answer>");
  CHECK(b.r_total == doctest::Approx(1.0 + 1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("combined reward invariants on random responses") {
  Rng rng(5);
  const auto tvg = tvg_instance({4, 9});
  const auto vc = vc_instance("a person [ ] the door", "open");
  const std::vector<std::string> pieces = {"<think>", "</think>", "<answer>", "</answer>", " ",
                                           "3", " to ", "7.5", "opens", "door", "x"};
  for (int i = 0; i < 3000; ++i) {
    std::string raw;
    const auto n = rng.index(10);
    for (std::size_t k = 0; k < n; ++k) raw += pieces[rng.index(pieces.size())];
    for (const auto* inst : {&tvg, &vc}) {
      const auto b = combined_reward(*inst, raw);
      CHECK(b.alpha + b.beta == 1);
      CHECK(b.r_total == b.r_format + b.r_task);
      CHECK(b.r_total >= 0.0);
      CHECK(b.r_total <= 2.0);
      CHECK((b.r_format == 0.0 || b.r_format == 1.0));
      CHECK(b.r_format == format_reward(raw));
    }
  }
}

TEST_CASE("breakdowns round-trip through json") {
  RewardBreakdown b{TaskKind::ActionRecognition, 1.0, 0.0, 1.0, 0, 1};
  CHECK(breakdown_from_json(to_json(b)) == b);
}

TEST_CASE("parser survives arbitrary bytes") {
  Rng rng(8);
  for (int i = 0; i < 20000; ++i) {
    std::string raw(rng.index(64), '\0');
    for (auto& c : raw) c = static_cast<char>(rng.index(256));
    const auto p = parse_response(raw);
    if (p.format_ok) {
      CHECK(p.think);
      CHECK(p.answer_text);
    }
  }
}
