#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tvgrl/toylab.hpp"

namespace tvgrl::interface {

/// Environment variable naming a config file; used when no path is given on
/// the command line.
inline constexpr const char* kConfigEnvVar = "TVGRL_CONFIG";

/// Every tunable of the command-line tools.
///
/// Keys (key=value, '#' comments):
///   group_size kl_coeff clip_epsilon ("none" disables clipping) adv_epsilon
///   learning_rate ref_refresh_every kl_mode tvg_prob seed iterations hidden
///   bins temperature isolated_heads warm_start_epochs warm_start_lr
///   init_scale n_videos timesteps n_actions feature_dim noise_sigma span_min
///   span_max corpus_seed n_heldout miou_margin lexicon_path max_body_bytes
///   rollout_parallelism rollout_attempts backoff_ms request_timeout_s
struct AppConfig {
  toylab::SyntheticCorpusConfig corpus;
  toylab::TrainConfig train;  // carries the GRPO settings, tvg_prob and seed
  std::size_t n_heldout = 120;
  double miou_margin = 0.05;
  std::string lexicon_path;
  std::size_t max_body_bytes = 1 << 20;
  int rollout_parallelism = 4;
  int rollout_attempts = 3;
  int backoff_ms = 200;
  double request_timeout_s = 30.0;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  toylab::DegradationConfig degradation() const;
};

/// Applies one key=value setting. Throws ConfigError on unknown keys or
/// unparsable values.
void apply_setting(AppConfig& config, std::string_view key, std::string_view value);

/// "key=value" form of apply_setting.
void apply_assignment(AppConfig& config, std::string_view assignment);

AppConfig parse_config(std::string_view text);
AppConfig load_config(const std::string& path);

/// Defaults, then the file (explicit path, else $TVGRL_CONFIG when set), then
/// the overrides in order. The result is validated.
AppConfig resolve_config(const std::optional<std::string>& path,
                         const std::vector<std::string>& overrides);

/// Canonical key=value dump; parse_config(to_text(c)) reproduces c.
std::string to_text(const AppConfig& config);

}  // namespace tvgrl::interface
