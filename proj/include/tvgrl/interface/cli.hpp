#pragma once

#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tvgrl/interface/config.hpp"

namespace tvgrl::interface {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;

/// IoError -> 1, any other failure -> 2.
int exit_code_for(const std::exception& e);

struct InvertArgs {
  std::string input;
  std::string output = "-";  // "-" writes to the output stream
  std::string format = "native";
  std::string verb_choice = "first";
  std::string kinds = "tvg,vc,ar,vd";
  bool strict = false;
  std::string durations;  // optional durations CSV for Charades input
  std::string prompts;    // optional prompt override file
};

struct ScoreArgs {
  std::string instances;
  std::string responses;
  std::string breakdowns;  // per-sample reward file, optional
  std::string report;      // JSON report, optional
  std::string table;       // aligned text report, optional
  std::string csv;         // CSV report, optional
  bool inclusive = false;
};

struct TrainToyArgs {
  std::string out_dir;
  bool study = false;  // also run the p = 1 comparison
};

struct RolloutArgs {
  std::string endpoint;
  std::string instances;
  std::string output = "-";
};

struct SampleTasksArgs {
  std::size_t n = 100000;
  std::optional<double> p;
  std::optional<std::uint64_t> seed;
  std::string output = "-";
};

// Each command reports problems on err and returns an exit code; nothing
// throws past these functions.
int cli_invert(const InvertArgs& args, const AppConfig& config, std::ostream& out,
               std::ostream& err);
int cli_score(const ScoreArgs& args, const AppConfig& config, std::ostream& out,
              std::ostream& err);
int cli_train_toy(const TrainToyArgs& args, const AppConfig& config, std::ostream& out,
                  std::ostream& err);
int cli_rollout(const RolloutArgs& args, const AppConfig& config, std::ostream& out,
                std::ostream& err);
int cli_sample_tasks(const SampleTasksArgs& args, const AppConfig& config, std::ostream& out,
                     std::ostream& err);
/// Blocks until the process is stopped.
int cli_serve_rewards(const std::string& bind, const AppConfig& config, std::ostream& out,
                      std::ostream& err);

/// Full command line: global --config / --set, then a subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tvgrl::interface
