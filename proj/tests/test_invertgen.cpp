#include <doctest.h>

#include <set>

#include "test_util.hpp"
#include "tvgrl/annotations.hpp"
#include "tvgrl/errors.hpp"
#include "tvgrl/invertgen.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/verbtext.hpp"

using namespace tvgrl;
using namespace tvgrl::invertgen;

namespace {

Annotation ann(const std::string& id, const std::string& query, Segment seg = {10, 20},
               double dur = 30) {
  Annotation a;
  a.id = id;
  a.video_ref = "vid-" + id;
  a.duration_s = dur;
  a.segment = seg;
  a.query = query;
  return a;
}

std::set<std::string> lemma_strings(const std::set<VerbLemma>& s) {
  std::set<std::string> out;
  for (const auto& l : s) out.insert(l.value);
  return out;
}

}  // namespace

TEST_CASE("tvg instance maps the annotation") {
  const auto a = ann("a1", "Person closed the door");
  const auto inst = make_tvg_instance(a);
  CHECK(inst.kind == TaskKind::Tvg);
  CHECK(inst.clip == Segment{0, 30});
  CHECK(std::get<TvgTarget>(inst.target) == TvgTarget{{10, 20}, 30});
  CHECK(inst.prompt.find("Person closed the door") != std::string::npos);
  CHECK(inst.prompt.find("t_s to t_e") != std::string::npos);
  CHECK(inst.prompt.find("<answer>") != std::string::npos);
  CHECK(inst.source_annotation_id == "a1");
  CHECK(validate(inst).empty());
}

TEST_CASE("verb completion masks the verb") {
  const auto out = make_vc_instances(ann("a1", "Person closed the door"), {});
  REQUIRE(out.size() == 1);
  const auto& t = std::get<VcTarget>(out[0].target);
  CHECK(t.masked_query == "Person [ ] the door");
  CHECK(t.gt_verb.value == "close");
  CHECK(out[0].prompt == "Add a verb for the event 'Person [ ] the door' based on the video.");
  CHECK(out[0].clip == Segment{10, 20});

  const auto all = make_vc_instances(ann("a2", "A person walks away and laughs"),
                                     VerbChoice::parse("all"));
  REQUIRE(all.size() == 2);
  CHECK(std::get<VcTarget>(all[0].target).masked_query == "A person [ ] away and laughs");
  CHECK(std::get<VcTarget>(all[1].target).masked_query == "A person walks away and [ ]");
  CHECK(all[0].id != all[1].id);

  const auto second = make_vc_instances(ann("a2", "A person walks away and laughs"),
                                        VerbChoice::parse("1"));
  REQUIRE(second.size() == 1);
  CHECK(std::get<VcTarget>(second[0].target).gt_verb.value == "laugh");

  CHECK(make_vc_instances(ann("a3", "the door"), {}).empty());
  CHECK(make_vc_instances(ann("a2", "A person walks away and laughs"), VerbChoice::parse("5")).empty());
  CHECK_THROWS_AS(VerbChoice::parse("second"), ArgumentError);
}

TEST_CASE("action recognition and description targets") {
  const auto ar = make_ar_instance(ann("a", "A person walks away and laughs"));
  REQUIRE(ar);
  CHECK(lemma_strings(std::get<ArTarget>(ar->target).gt_verbs) ==
        std::set<std::string>{"walk", "laugh"});
  CHECK(ar->prompt == "Use a verb to describe the event based on the video.");
  CHECK(ar->clip == Segment{10, 20});

  const auto closed = make_ar_instance(ann("b", "Person closed the door"));
  REQUIRE(closed);
  CHECK(lemma_strings(std::get<ArTarget>(closed->target).gt_verbs) == std::set<std::string>{"close"});

  const auto dup = make_ar_instance(ann("c", "a person walks in, walking slowly"));
  REQUIRE(dup);
  CHECK(std::get<ArTarget>(dup->target).gt_verbs.size() == 1);

  const auto vd = make_vd_instance(ann("d", "A person jumps and laughs"));
  REQUIRE(vd);
  CHECK(lemma_strings(std::get<VdTarget>(vd->target).gt_verbs) ==
        std::set<std::string>{"jump", "laugh"});
  CHECK(vd->prompt == "Describe what people have done based on the video.");

  CHECK_FALSE(make_ar_instance(ann("e", "the door")));
  CHECK_FALSE(make_vd_instance(ann("e", "the door")));
}

TEST_CASE("invert_dataset counts and order") {
  std::vector<Annotation> anns;
  for (int i = 0; i < 5; ++i) anns.push_back(ann("k" + std::to_string(i), "a person opens a box"));
  auto res = invert_dataset(anns);
  CHECK(res.instances.size() == 20);
  for (std::size_t i = 0; i < res.instances.size(); ++i) {
    CHECK(res.instances[i].kind == kAllTaskKinds[i % 4]);
    CHECK(res.instances[i].source_annotation_id == anns[i / 4].id);
  }

  InvertOptions only_tvg;
  only_tvg.kinds = {TaskKind::Tvg};
  CHECK(invert_dataset(anns, only_tvg).instances.size() == 5);

  anns.push_back(ann("n1", "the door"));
  anns.push_back(ann("n2", "a sunny afternoon"));
  res = invert_dataset(anns);
  CHECK(res.summary.annotations == 7);
  CHECK(res.summary.emitted[TaskKind::Tvg] == 7);
  for (auto k : kInvertTaskKinds) {
    CHECK(res.summary.emitted[k] == 5);
    CHECK(res.summary.skipped[k] == 2);
  }
  CHECK(res.summary.skipped_ids == std::vector<std::string>{"n1", "n2"});
}

TEST_CASE("inversion invariants over the charades fixture") {
  LoadOptions o;
  o.format = AnnotationFormat::Charades;
  o.durations = load_durations_csv(testutil::data_path("charades_durations.csv"));
  const auto anns = load_annotations(testutil::data_path("charades_sample.txt"), o).annotations;
  InvertOptions opts;
  opts.verb_choice = VerbChoice::parse("all");
  const auto res = invert_dataset(anns, opts);

  std::map<std::string, const Annotation*> by_id;
  for (const auto& a : anns) by_id[a.id] = &a;
  for (const auto& inst : res.instances) {
    CHECK(validate(inst).empty());
    const auto& a = *by_id.at(inst.source_annotation_id);
    std::set<VerbLemma> query_lemmas;
    for (const auto& h : verbtext::extract_verbs(a.query)) query_lemmas.insert(h.lemma);
    if (is_invert(inst.kind)) CHECK(inst.clip == a.segment);
    if (inst.kind == TaskKind::VerbCompletion) {
      const auto& t = std::get<VcTarget>(inst.target);
      CHECK(verbtext::tokenize(t.masked_query).size() == verbtext::tokenize(a.query).size());
      CHECK(query_lemmas.count(t.gt_verb) == 1);
    }
    if (inst.kind == TaskKind::ActionRecognition) {
      for (const auto& l : std::get<ArTarget>(inst.target).gt_verbs) CHECK(query_lemmas.count(l) == 1);
    }
    if (inst.kind == TaskKind::VideoDescription) {
      for (const auto& l : std::get<VdTarget>(inst.target).gt_verbs) CHECK(query_lemmas.count(l) == 1);
    }
  }

  // Byte-identical on a re-run.
  auto dump = [](const InvertResult& r) {
    std::string s;
    for (const auto& i : r.instances) s += to_json(i).dump() + "\n";
    return s;
  };
  CHECK(dump(res) == dump(invert_dataset(anns, opts)));
}

TEST_CASE("prompt templates can be overridden") {
  testutil::TempDir dir;
  const auto path = dir.write("prompts.txt", "# custom\nvc=Fill the blank in '{masked_query}'.\n");
  InvertOptions opts;
  opts.prompts = PromptTemplates::load(path);
  const auto res = invert_dataset(std::vector<Annotation>{ann("a", "Person closed the door")}, opts);
  REQUIRE(res.instances.size() == 4);
  CHECK(res.instances[1].prompt == "Fill the blank in 'Person [ ] the door'.");
  CHECK(res.instances[2].prompt == PromptTemplates::defaults().ar);

  const auto bad = dir.write("bad.txt", "caption=nope\n");
  CHECK_THROWS_AS(PromptTemplates::load(bad), ParseError);
}
