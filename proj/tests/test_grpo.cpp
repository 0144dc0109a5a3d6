#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "tvgrl/errors.hpp"
#include "tvgrl/grpo.hpp"
#include "tvgrl/rng.hpp"

using namespace tvgrl;
using namespace tvgrl::grpo;

namespace {

// Softmax over named outcomes with one logit per outcome.
class SoftmaxPolicy : public PolicyHandle {
 public:
  explicit SoftmaxPolicy(std::vector<std::string> outcomes)
      : outcomes_(std::move(outcomes)),
        current_(outcomes_.size(), 0.0),
        old_(current_),
        ref_(current_) {}

  std::vector<std::string> generate(const TaskInstance&, int n, Rng& rng) const override {
    const auto p = probs(current_);
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) {
      double u = rng.uniform(), acc = 0;
      std::size_t k = 0;
      for (; k + 1 < p.size(); ++k) {
        acc += p[k];
        if (u < acc) break;
      }
      out.push_back(outcomes_[k]);
    }
    return out;
  }
  double log_prob(const TaskInstance&, std::string_view r, PolicySlot slot) const override {
    const auto& th = slot == PolicySlot::Old ? old_ : slot == PolicySlot::Ref ? ref_ : current_;
    for (std::size_t k = 0; k < outcomes_.size(); ++k) {
      if (outcomes_[k] == r) return std::log(probs(th)[k]);
    }
    return -std::numeric_limits<double>::infinity();
  }
  std::vector<double> parameters() const override { return current_; }
  void set_parameters(std::span<const double> t) override { current_.assign(t.begin(), t.end()); }
  void snapshot(PolicySlot s) override {
    if (s == PolicySlot::Old) old_ = current_;
    if (s == PolicySlot::Ref) ref_ = current_;
  }
  std::vector<double> log_prob_gradient(const TaskInstance&, std::string_view r) const override {
    const auto p = probs(current_);
    std::vector<double> g(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) g[j] = (outcomes_[j] == r ? 1.0 : 0.0) - p[j];
    return g;
  }
  std::optional<std::vector<std::string>> support(const TaskInstance&) const override {
    return outcomes_;
  }
  void set_ref(std::vector<double> t) { ref_ = std::move(t); }
  const std::vector<double>& ref() const { return ref_; }
  const std::vector<double>& old() const { return old_; }

  static std::vector<double> probs(const std::vector<double>& th) {
    double m = -1e300;
    for (double x : th) m = std::max(m, x);
    std::vector<double> p(th.size());
    double z = 0;
    for (std::size_t k = 0; k < th.size(); ++k) z += p[k] = std::exp(th[k] - m);
    for (auto& x : p) x /= z;
    return p;
  }

 private:
  std::vector<std::string> outcomes_;
  std::vector<double> current_, old_, ref_;
};

// Fixed probability tables per slot, for KL edge cases.
class TablePolicy : public PolicyHandle {
 public:
  TablePolicy(std::map<std::string, double> cur, std::map<std::string, double> ref)
      : cur_(std::move(cur)), ref_(std::move(ref)) {}
  std::vector<std::string> generate(const TaskInstance&, int, Rng&) const override { return {}; }
  double log_prob(const TaskInstance&, std::string_view r, PolicySlot slot) const override {
    const auto& t = slot == PolicySlot::Ref ? ref_ : cur_;
    const auto it = t.find(std::string(r));
    return it == t.end() || it->second == 0.0 ? -std::numeric_limits<double>::infinity()
                                              : std::log(it->second);
  }
  std::vector<double> parameters() const override { return {}; }
  void set_parameters(std::span<const double>) override {}
  void snapshot(PolicySlot) override {}
  std::optional<std::vector<std::string>> support(const TaskInstance&) const override {
    std::vector<std::string> out;
    for (const auto& [k, v] : cur_) out.push_back(k);
    return out;
  }

 private:
  std::map<std::string, double> cur_, ref_;
};

GroupRollout rollout_with(std::vector<double> logp_new, std::vector<double> logp_old,
                          std::vector<double> adv) {
  GroupRollout r;
  r.responses.resize(adv.size());
  r.rewards.assign(adv.size(), 0.0);
  r.advantages = std::move(adv);
  r.logp_new = std::move(logp_new);
  r.logp_old = std::move(logp_old);
  return r;
}

GroupRollout sampled_group(SoftmaxPolicy& policy, Rng& rng, int g) {
  GroupRollout group;
  group.responses = policy.generate(group.instance, g, rng);
  for (const auto& r : group.responses) {
    group.rewards.push_back(r == "a" ? 1.0 : r == "b" ? 0.3 : 0.0);
    group.logp_old.push_back(policy.log_prob(group.instance, r, PolicySlot::Old));
  }
  group.advantages = normalize_advantages(group.rewards, 1e-6);
  group.logp_new = group.logp_old;
  return group;
}

}  // namespace

TEST_CASE("normalize_advantages worked examples") {
  CHECK(normalize_advantages(std::vector<double>{1, 0, 1, 0}, 1e-6) ==
        std::vector<double>{1, -1, 1, -1});
  for (double c : {-3.0, 0.0, 0.5, 7.0}) {
    CHECK(normalize_advantages(std::vector<double>{c, c, c, c}, 1e-6) ==
          std::vector<double>{0, 0, 0, 0});
  }
  CHECK(normalize_advantages(std::vector<double>{2, 0, 2, 0}, 1e-6) ==
        std::vector<double>{1, -1, 1, -1});
  CHECK_THROWS_AS(normalize_advantages(std::vector<double>{1}, 1e-6), ArgumentError);
  CHECK_THROWS_AS(normalize_advantages(std::vector<double>{1, 2}, 0.0), ArgumentError);
}

TEST_CASE("advantages are shift and scale invariant") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = 2 + rng.index(15);
    std::vector<double> r(g);
    for (auto& x : r) x = rng.uniform() * 2.0;
    const auto a = normalize_advantages(r, 1e-6);
    const double shift = rng.uniform() * 10 - 5, scale = 0.1 + rng.uniform() * 10;
    std::vector<double> rs(g), rc(g);
    for (std::size_t i = 0; i < g; ++i) {
      rs[i] = r[i] + shift;
      rc[i] = r[i] * scale;
    }
    const auto as = normalize_advantages(rs, 1e-6);
    const auto ac = normalize_advantages(rc, 1e-6);
    double sum = 0;
    for (std::size_t i = 0; i < g; ++i) {
      CHECK(std::abs(as[i] - a[i]) <= 1e-12);
      CHECK(std::abs(ac[i] - a[i]) <= 1e-12);
      sum += a[i];
    }
    CHECK(std::abs(sum) <= 1e-10);
  }
}

TEST_CASE("surrogate objective worked examples") {
  GrpoConfig unclipped;
  unclipped.clip_epsilon.reset();
  GrpoConfig clipped;
  clipped.clip_epsilon = 0.2;

  CHECK(surrogate_objective(rollout_with({-1, -2}, {-1, -2}, {1, -1}), unclipped) == 0.0);
  const auto r = rollout_with({std::log(2.0), 0.0}, {0.0, 0.0}, {1, -1});
  CHECK(surrogate_objective(r, unclipped) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(surrogate_objective(r, clipped) == doctest::Approx(0.2).epsilon(1e-12));

  const auto bad = rollout_with({std::nan(""), 0.0}, {0.0, 0.0}, {1, -1});
  CHECK_THROWS_AS(surrogate_objective(bad, unclipped), NumericError);
}

TEST_CASE("exact and sampled KL worked examples") {
  SoftmaxPolicy p({"x", "y"});
  const TaskInstance inst;
  CHECK(kl_penalty(p, inst, KlMode::Exact) == 0.0);
  std::vector<std::string> samples = {"x", "y", "y", "x"};
  CHECK(kl_penalty(p, inst, KlMode::Sampled, samples) == 0.0);

  p.set_parameters(std::vector<double>{std::log(3.0), 0.0});  // (0.75, 0.25) against (0.5, 0.5)
  const double expected = 0.75 * std::log(1.5) + 0.25 * std::log(0.5);
  CHECK(std::abs(kl_penalty(p, inst, KlMode::Exact) - expected) <= 1e-12);
  CHECK(std::abs(expected - 0.1308) < 1e-4);
  CHECK(kl_penalty(p, inst, KlMode::Sampled, samples) >= 0.0);
  CHECK_THROWS_AS(kl_penalty(p, inst, KlMode::Sampled, {}), ArgumentError);

  TablePolicy gap({{"x", 0.5}, {"y", 0.5}}, {{"x", 1.0}, {"y", 0.0}});
  CHECK_THROWS_AS(kl_penalty(gap, inst, KlMode::Exact), NumericError);
  std::vector<std::string> ys = {"y"};
  CHECK_THROWS_AS(kl_penalty(gap, inst, KlMode::Sampled, ys), NumericError);
}

TEST_CASE("exact KL is non-negative on random distributions") {
  Rng rng(4);
  SoftmaxPolicy p({"a", "b", "c", "d"});
  const TaskInstance inst;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> th(4), rf(4);
    for (auto& x : th) x = 3 * rng.normal();
    for (auto& x : rf) x = 3 * rng.normal();
    p.set_parameters(th);
    p.set_ref(rf);
    CHECK(kl_penalty(p, inst, KlMode::Exact) >= 0.0);
  }
}

TEST_CASE("finite differences") {
  auto quad = [](std::span<const double> t) { return t[0] * t[0] + t[1] * t[1]; };
  const std::vector<double> at = {1.0, 2.0};
  const auto g = finite_difference_gradient(at, quad, 1e-5);
  CHECK(std::abs(g[0] - 2.0) <= 1e-8);
  CHECK(std::abs(g[1] - 4.0) <= 1e-8);

  // Central differences of x^3 carry an h^2 truncation term.
  auto cube = [](std::span<const double> t) { return t[0] * t[0] * t[0]; };
  const std::vector<double> one = {1.0};
  const double coarse = finite_difference_gradient(one, cube, 0.5)[0];
  const double fine = finite_difference_gradient(one, cube, 1e-5)[0];
  CHECK(coarse - 3.0 == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(std::abs(fine - 3.0) < 1e-8);

  CHECK_THROWS_AS(finite_difference_gradient(at, quad, 0.0), ArgumentError);
  CHECK(relative_error(std::vector<double>{0, 0}, std::vector<double>{0, 0}) == 0.0);
}

TEST_CASE("analytic gradient matches finite differences on a softmax policy") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    SoftmaxPolicy p({"a", "b", "c"});
    std::vector<double> th(3), rf(3);
    for (auto& x : th) x = rng.normal();
    for (auto& x : rf) x = rng.normal();
    p.set_parameters(th);
    p.snapshot(PolicySlot::Old);
    p.set_ref(rf);
    std::vector<GroupRollout> batch = {sampled_group(p, rng, 6), sampled_group(p, rng, 6)};
    // Move away from the sampling parameters so ratios differ from one.
    for (auto& x : th) x += 0.3 * rng.normal();
    p.set_parameters(th);
    for (auto clip : {std::optional<double>{}, std::optional<double>{0.2}}) {
      for (auto mode : {KlMode::Exact, KlMode::Sampled}) {
        GrpoConfig c;
        c.clip_epsilon = clip;
        c.kl_mode = mode;
        c.kl_coeff = 0.1;
        const auto analytic = grpo_gradient(p, batch, c);
        const auto numeric = finite_difference_gradient(p, batch, c, 1e-5);
        CHECK(relative_error(analytic, numeric) <= 1e-4);
        CHECK(p.parameters() == th);
      }
    }
  }
}

TEST_CASE("grpo_step with constant rewards is driven by the KL term only") {
  SoftmaxPolicy p({"a", "b"});
  GroupRollout g;
  g.responses = {"a", "b", "a"};
  g.rewards = {1, 1, 1};
  g.advantages = normalize_advantages(g.rewards, 1e-6);
  for (const auto& r : g.responses) g.logp_old.push_back(p.log_prob(g.instance, r, PolicySlot::Old));
  g.logp_new = g.logp_old;
  GrpoConfig c;
  const std::vector<GroupRollout> batch = {g};
  const auto stats = grpo_step(p, batch, c, 0);
  CHECK(stats.grad_norm == 0.0);
  CHECK(p.parameters() == std::vector<double>{0, 0});

  // Away from the reference the KL gradient alone moves the parameters back.
  p.set_parameters(std::vector<double>{1.0, 0.0});
  p.snapshot(PolicySlot::Old);
  std::vector<GroupRollout> batch2 = {g};
  for (std::size_t i = 0; i < 3; ++i) {
    batch2[0].logp_old[i] = p.log_prob(g.instance, g.responses[i], PolicySlot::Old);
  }
  grpo_step(p, batch2, c, 1);
  CHECK(p.parameters()[0] < 1.0);
}

TEST_CASE("unregularised unclipped step is REINFORCE with a baseline") {
  SoftmaxPolicy p({"a", "b", "c"});
  p.set_parameters(std::vector<double>{0.2, -0.1, 0.4});
  p.snapshot(PolicySlot::Old);
  p.snapshot(PolicySlot::Ref);
  Rng rng(12);
  const auto g = sampled_group(p, rng, 8);
  GrpoConfig c;
  c.kl_coeff = 0.0;
  c.clip_epsilon.reset();
  c.learning_rate = 0.1;

  std::vector<double> expected = p.parameters();
  for (std::size_t i = 0; i < g.responses.size(); ++i) {
    const auto grad = p.log_prob_gradient(g.instance, g.responses[i]);
    for (std::size_t j = 0; j < expected.size(); ++j) expected[j] += 0.1 * g.advantages[i] * grad[j];
  }
  const std::vector<GroupRollout> batch = {g};
  grpo_step(p, batch, c, 0);
  for (std::size_t j = 0; j < expected.size(); ++j) {
    CHECK(p.parameters()[j] == doctest::Approx(expected[j]).epsilon(1e-12));
  }
}

TEST_CASE("old and reference snapshots follow the schedule") {
  SoftmaxPolicy p({"a", "b"});
  GroupRollout g;
  g.responses = {"a", "b"};
  g.rewards = {1, 0};
  g.advantages = normalize_advantages(g.rewards, 1e-6);
  GrpoConfig c;
  c.ref_refresh_every = 2;
  for (std::int64_t step = 0; step < 4; ++step) {
    g.logp_old.clear();
    for (const auto& r : g.responses) g.logp_old.push_back(p.log_prob(g.instance, r, PolicySlot::Old));
    g.logp_new = g.logp_old;
    const std::vector<GroupRollout> batch = {g};
    const auto ref_before = p.ref();
    grpo_step(p, batch, c, step);
    CHECK(p.old() == p.parameters());
    if ((step + 1) % 2 == 0) CHECK(p.ref() == p.parameters());
    else CHECK(p.ref() == ref_before);
  }

  GrpoConfig never;
  SoftmaxPolicy q({"a", "b"});
  for (std::int64_t step = 0; step < 3; ++step) {
    g.logp_old = {q.log_prob(g.instance, "a", PolicySlot::Old), q.log_prob(g.instance, "b", PolicySlot::Old)};
    g.logp_new = g.logp_old;
    const std::vector<GroupRollout> batch = {g};
    grpo_step(q, batch, never, step);
  }
  CHECK(q.ref() == std::vector<double>{0, 0});
}

TEST_CASE("config validation") {
  GrpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.group_size = 1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = {};
  c.adv_epsilon = 0;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  c = {};
  c.clip_epsilon = -0.1;
  CHECK_THROWS_AS(c.validate(), ArgumentError);
  CHECK(parse_kl_mode("sampled") == KlMode::Sampled);
  CHECK_THROWS(parse_kl_mode("approx"));
}

TEST_CASE("grpo_step rejects an empty batch") {
  SoftmaxPolicy p({"a", "b"});
  CHECK_THROWS_AS(grpo_step(p, {}, GrpoConfig{}, 0), ArgumentError);
}
