#include "tvgrl/interface/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"

namespace tvgrl::interface {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_real(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

int to_int(std::string_view key, std::string_view v) {
  const auto u = to_uint(key, v);
  if (u > 1'000'000'000ULL) throw ConfigError("'" + std::string(key) + "' is out of range");
  return static_cast<int>(u);
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "' expects true or false");
}

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void apply_setting(AppConfig& c, std::string_view key, std::string_view raw) {
  const auto v = trim(raw);
  auto& g = c.train.grpo;
  if (key == "group_size") g.group_size = to_int(key, v);
  else if (key == "kl_coeff") g.kl_coeff = to_real(key, v);
  else if (key == "clip_epsilon") {
    if (v == "none") g.clip_epsilon.reset();
    else g.clip_epsilon = to_real(key, v);
  }
  else if (key == "adv_epsilon") g.adv_epsilon = to_real(key, v);
  else if (key == "learning_rate") g.learning_rate = to_real(key, v);
  else if (key == "ref_refresh_every") g.ref_refresh_every = to_int(key, v);
  else if (key == "kl_mode") {
    try {
      g.kl_mode = grpo::parse_kl_mode(v);
    } catch (const Error& e) {
      throw ConfigError("'kl_mode': " + std::string(e.what()));
    }
  }
  else if (key == "tvg_prob") c.train.tvg_prob = to_real(key, v);
  else if (key == "seed") c.train.seed = g.seed = to_uint(key, v);
  else if (key == "iterations") c.train.iterations = to_uint(key, v);
  else if (key == "hidden") c.train.hidden = to_uint(key, v);
  else if (key == "bins") c.train.bins = to_uint(key, v);
  else if (key == "temperature") c.train.temperature = to_real(key, v);
  else if (key == "isolated_heads") c.train.isolated_heads = to_bool(key, v);
  else if (key == "warm_start_epochs") c.train.warm_start_epochs = to_uint(key, v);
  else if (key == "warm_start_lr") c.train.warm_start_lr = to_real(key, v);
  else if (key == "init_scale") c.train.init_scale = to_real(key, v);
  else if (key == "n_videos") c.corpus.n_videos = to_uint(key, v);
  else if (key == "timesteps") c.corpus.timesteps = to_uint(key, v);
  else if (key == "n_actions") c.corpus.n_actions = to_uint(key, v);
  else if (key == "feature_dim") c.corpus.feature_dim = to_uint(key, v);
  else if (key == "noise_sigma") c.corpus.noise_sigma = to_real(key, v);
  else if (key == "span_min") c.corpus.span_min = to_uint(key, v);
  else if (key == "span_max") c.corpus.span_max = to_uint(key, v);
  else if (key == "corpus_seed") c.corpus.seed = to_uint(key, v);
  else if (key == "n_heldout") c.n_heldout = to_uint(key, v);
  else if (key == "miou_margin") c.miou_margin = to_real(key, v);
  else if (key == "lexicon_path") c.lexicon_path = std::string(v);
  else if (key == "max_body_bytes") c.max_body_bytes = to_uint(key, v);
  else if (key == "rollout_parallelism") c.rollout_parallelism = to_int(key, v);
  else if (key == "rollout_attempts") c.rollout_attempts = to_int(key, v);
  else if (key == "backoff_ms") c.backoff_ms = to_int(key, v);
  else if (key == "request_timeout_s") c.request_timeout_s = to_real(key, v);
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

void apply_assignment(AppConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
  }
  apply_setting(config, trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

void AppConfig::validate() const {
  auto wrap = [](const char* what, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string(what) + ": " + e.what());
    }
  };
  wrap("corpus", [&] { corpus.validate(); });
  wrap("training", [&] { train.validate(); });
  if (n_heldout >= corpus.n_videos) throw ConfigError("'n_heldout' must be below n_videos");
  if (!(miou_margin >= 0.0)) throw ConfigError("'miou_margin' must be non-negative");
  if (max_body_bytes == 0) throw ConfigError("'max_body_bytes' must be positive");
  if (rollout_parallelism < 1) throw ConfigError("'rollout_parallelism' must be at least 1");
  if (rollout_attempts < 1) throw ConfigError("'rollout_attempts' must be at least 1");
  if (!(request_timeout_s > 0.0)) throw ConfigError("'request_timeout_s' must be positive");
}

toylab::DegradationConfig AppConfig::degradation() const {
  toylab::DegradationConfig d;
  d.corpus = corpus;
  d.train = train;
  d.n_heldout = n_heldout;
  d.grounding_prob = train.tvg_prob;
  d.miou_margin = miou_margin;
  return d;
}

AppConfig parse_config(std::string_view text) {
  AppConfig config;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      apply_assignment(config, t);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

AppConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

AppConfig resolve_config(const std::optional<std::string>& path,
                         const std::vector<std::string>& overrides) {
  AppConfig config;
  if (path) {
    config = load_config(*path);
  } else if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    config = load_config(env);
  }
  for (const auto& o : overrides) apply_assignment(config, o);
  config.validate();
  return config;
}

std::string to_text(const AppConfig& c) {
  const auto& g = c.train.grpo;
  std::ostringstream o;
  o << "group_size=" << g.group_size << '\n'
    << "kl_coeff=" << real_text(g.kl_coeff) << '\n'
    << "clip_epsilon=" << (g.clip_epsilon ? real_text(*g.clip_epsilon) : "none") << '\n'
    << "adv_epsilon=" << real_text(g.adv_epsilon) << '\n'
    << "learning_rate=" << real_text(g.learning_rate) << '\n'
    << "ref_refresh_every=" << g.ref_refresh_every << '\n'
    << "kl_mode=" << grpo::to_string(g.kl_mode) << '\n'
    << "tvg_prob=" << real_text(c.train.tvg_prob) << '\n'
    << "seed=" << c.train.seed << '\n'
    << "iterations=" << c.train.iterations << '\n'
    << "hidden=" << c.train.hidden << '\n'
    << "bins=" << c.train.bins << '\n'
    << "temperature=" << real_text(c.train.temperature) << '\n'
    << "isolated_heads=" << (c.train.isolated_heads ? "true" : "false") << '\n'
    << "warm_start_epochs=" << c.train.warm_start_epochs << '\n'
    << "warm_start_lr=" << real_text(c.train.warm_start_lr) << '\n'
    << "init_scale=" << real_text(c.train.init_scale) << '\n'
    << "n_videos=" << c.corpus.n_videos << '\n'
    << "timesteps=" << c.corpus.timesteps << '\n'
    << "n_actions=" << c.corpus.n_actions << '\n'
    << "feature_dim=" << c.corpus.feature_dim << '\n'
    << "noise_sigma=" << real_text(c.corpus.noise_sigma) << '\n'
    << "span_min=" << c.corpus.span_min << '\n'
    << "span_max=" << c.corpus.span_max << '\n'
    << "corpus_seed=" << c.corpus.seed << '\n'
    << "n_heldout=" << c.n_heldout << '\n'
    << "miou_margin=" << real_text(c.miou_margin) << '\n'
    << "lexicon_path=" << c.lexicon_path << '\n'
    << "max_body_bytes=" << c.max_body_bytes << '\n'
    << "rollout_parallelism=" << c.rollout_parallelism << '\n'
    << "rollout_attempts=" << c.rollout_attempts << '\n'
    << "backoff_ms=" << c.backoff_ms << '\n'
    << "request_timeout_s=" << real_text(c.request_timeout_s) << '\n';
  return o.str();
}

}  // namespace tvgrl::interface
