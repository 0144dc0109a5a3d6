#include "tvgrl/interface/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "tvgrl/errors.hpp"
#include "tvgrl/evalharness.hpp"
#include "tvgrl/interface/bridge.hpp"
#include "tvgrl/interface/service.hpp"
#include "tvgrl/invertgen.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/rewards.hpp"
#include "tvgrl/toylab.hpp"

namespace tvgrl::interface {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
  return dynamic_cast<const IoError*>(&e) ? kExitIo : kExitInvalid;
}

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) err << "  - " << v << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::string read_input(const std::string& path) {
  if (!fs::exists(path)) throw IoError("cannot open '" + path + "': no such file");
  return read_text_file(path);
}

std::optional<verbtext::Lexicon> custom_lexicon(const AppConfig& config) {
  if (config.lexicon_path.empty()) return std::nullopt;
  if (!fs::exists(config.lexicon_path)) {
    throw IoError("cannot open lexicon '" + config.lexicon_path + "'");
  }
  return verbtext::Lexicon::load(config.lexicon_path);
}

std::set<TaskKind> parse_kinds(const std::string& text) {
  std::set<TaskKind> kinds;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) kinds.insert(parse_task_kind(item));
  }
  if (kinds.empty()) throw ArgumentError("no task kinds selected");
  return kinds;
}

std::string fnv_hex(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_report(const evalharness::EvalReport& report, const std::string& json_path,
                  const std::string& table_path, const std::string& csv_path, std::ostream& out) {
  if (!json_path.empty()) emit(json_path, report.to_json().dump() + "\n", out);
  if (!table_path.empty()) emit(table_path, report.to_table(), out);
  if (!csv_path.empty()) emit(csv_path, report.to_csv(), out);
}

struct ResponseRecord {
  std::optional<std::string> id;
  std::string response;
};

std::vector<ResponseRecord> parse_responses(std::string_view text) {
  std::vector<ResponseRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception&) {
      throw ParseError("response record is not valid JSON", line_no);
    }
    if (!j.is_object() || !j.contains("response") || !j["response"].is_string()) {
      throw ParseError("response record needs a string field 'response'", line_no);
    }
    ResponseRecord r;
    r.response = j["response"].get<std::string>();
    if (j.contains("id")) {
      if (!j["id"].is_string()) throw ParseError("field 'id' must be a string", line_no);
      r.id = j["id"].get<std::string>();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

int cli_invert(const InvertArgs& args, const AppConfig& config, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    LoadOptions load;
    load.format = parse_annotation_format(args.format);
    load.strict = args.strict;
    if (!args.durations.empty()) load.durations = load_durations_csv(args.durations);
    if (!fs::exists(args.input)) throw IoError("cannot open '" + args.input + "': no such file");
    const auto loaded = load_annotations(args.input, load);
    for (const auto& s : loaded.skipped) {
      err << "skipped record " << s.line << ": " << s.reason << '\n';
    }

    const auto lexicon = custom_lexicon(config);
    invertgen::InvertOptions opts;
    opts.verb_choice = invertgen::VerbChoice::parse(args.verb_choice);
    opts.kinds = parse_kinds(args.kinds);
    if (!args.prompts.empty()) opts.prompts = invertgen::PromptTemplates::load(args.prompts);
    if (lexicon) opts.lexicon = &*lexicon;

    std::string text;
    const auto summary =
        invertgen::invert_dataset(loaded.annotations, opts, [&](const TaskInstance& inst) {
          text += to_json(inst).dump();
          text += '\n';
        });
    emit(args.output, text, out);
    err << "records skipped at load: " << loaded.skipped.size() << '\n' << summary.to_text();
    return kExitOk;
  });
}

int cli_score(const ScoreArgs& args, const AppConfig& config, std::ostream& out,
              std::ostream& err) {
  return guarded(err, [&] {
    const auto instances = parse_instance_lines(read_input(args.instances));
    const auto records = parse_responses(read_input(args.responses));
    if (records.empty()) throw ValidationError("responses file is empty", {});
    if (instances.empty()) throw ValidationError("instances file is empty", {});

    std::vector<std::string> responses;
    const bool by_id = std::all_of(records.begin(), records.end(),
                                   [](const ResponseRecord& r) { return r.id.has_value(); });
    if (by_id) {
      std::map<std::string, const std::string*> index;
      for (const auto& r : records) {
        if (!index.emplace(*r.id, &r.response).second) {
          throw ValidationError("duplicate response id '" + *r.id + "'", {});
        }
      }
      for (const auto& inst : instances) {
        const auto it = index.find(inst.id);
        if (it == index.end()) throw ValidationError("no response for id '" + inst.id + "'", {});
        responses.push_back(*it->second);
      }
      if (index.size() != instances.size()) {
        std::set<std::string> known;
        for (const auto& inst : instances) known.insert(inst.id);
        for (const auto& [id, _] : index) {
          if (!known.contains(id)) throw ValidationError("response id '" + id + "' matches no instance", {});
        }
      }
    } else {
      if (records.size() != instances.size()) {
        throw ValidationError("expected " + std::to_string(instances.size()) +
                                  " responses, got " + std::to_string(records.size()),
                              {});
      }
      for (const auto& r : records) responses.push_back(r.response);
    }

    const auto lexicon = custom_lexicon(config);
    const auto& lex = lexicon ? *lexicon : verbtext::Lexicon::builtin();
    if (!args.breakdowns.empty()) {
      std::string text;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        auto j = rewards::to_json(rewards::combined_reward(instances[i], responses[i], lex));
        Json rec;
        rec["id"] = instances[i].id;
        for (auto& [k, v] : j.items()) rec[k] = v;
        text += rec.dump() + "\n";
      }
      emit(args.breakdowns, text, out);
    }

    evalharness::ScoreOptions opts;
    opts.inclusive = args.inclusive;
    opts.lexicon = &lex;
    auto report = evalharness::score_run(instances, responses, opts);
    report.metadata["run_id"] = fs::path(args.responses).stem().string();
    report.metadata["instances_hash"] = fnv_hex(read_input(args.instances));
    write_report(report, args.report, args.table, args.csv, out);
    if (args.table.empty()) err << report.to_table();
    return kExitOk;
  });
}

int cli_train_toy(const TrainToyArgs& args, const AppConfig& config, std::ostream&,
                  std::ostream& err) {
  return guarded(err, [&] {
    if (args.out_dir.empty()) throw ArgumentError("an output directory is required");
    std::error_code ec;
    fs::create_directories(args.out_dir, ec);
    if (ec) throw IoError("cannot create '" + args.out_dir + "': " + ec.message());
    const fs::path dir(args.out_dir);
    const auto config_hash = fnv_hex(to_text(config));
    write_text_file((dir / "config.txt").string(), to_text(config));

    const auto corpus = toylab::gen_synthetic_corpus(config.corpus);
    const auto [train_corpus, heldout] = toylab::split_corpus(corpus, config.n_heldout);
    auto policy = toylab::make_initial_policy(train_corpus, config.train);
    policy.add_videos(heldout);
    const auto start = policy.parameters();

    const auto log = toylab::train(policy, train_corpus, config.train);
    write_text_file((dir / "training_log.jsonl").string(), log.to_jsonl());

    Json params;
    const auto& s = policy.shape();
    params["shape"] = {{"feature_dim", s.feature_dim}, {"hidden", s.hidden},
                       {"bins", s.bins},               {"n_actions", s.n_actions},
                       {"timesteps", s.timesteps},     {"temperature", s.temperature},
                       {"isolated_heads", s.isolated_heads}};
    params["theta"] = policy.parameters();
    write_text_file((dir / "params.json").string(), params.dump() + "\n");

    auto result = toylab::probe(policy, heldout);
    auto& report = result.report;
    report.metadata["run_id"] = "train-toy";
    report.metadata["seed"] = std::to_string(config.train.seed);
    report.metadata["config_hash"] = config_hash;
    write_report(report, (dir / "probe_report.json").string(),
                 (dir / "probe_report.txt").string(), (dir / "probe_report.csv").string(), err);
    err << "trained " << log.records.size() << " steps; probe on " << heldout.videos.size()
        << " held-out videos\n"
        << report.to_table();

    if (args.study) {
      toylab::ToyPolicy baseline = policy;
      baseline.reset(start);
      auto cfg = config.train;
      cfg.tvg_prob = 1.0;
      const auto base_log = toylab::train(baseline, train_corpus, cfg);
      write_text_file((dir / "training_log_tvg_only.jsonl").string(), base_log.to_jsonl());
      const auto base = toylab::probe(baseline, heldout);
      Json study;
      study["tvg_prob"] = config.train.tvg_prob;
      study["mixed"] = {{"miou", result.miou},
                        {"verb_accuracy", result.mean_verb_accuracy()}};
      study["tvg_only"] = {{"miou", base.miou}, {"verb_accuracy", base.mean_verb_accuracy()}};
      study["verb_accuracy_lower"] = base.mean_verb_accuracy() < result.mean_verb_accuracy();
      study["miou_within_margin"] = result.miou >= base.miou - config.miou_margin;
      study["miou_margin"] = config.miou_margin;
      write_text_file((dir / "study.json").string(), study.dump(2) + "\n");
      err << "tvg-only run: miou " << evalharness::format_fixed4(base.miou) << ", verb accuracy "
          << evalharness::format_fixed4(base.mean_verb_accuracy()) << '\n';
    }
    return kExitOk;
  });
}

int cli_rollout(const RolloutArgs& args, const AppConfig& config, std::ostream& out,
                std::ostream& err) {
  return guarded(err, [&] {
    const auto instances = parse_instance_lines(read_input(args.instances));
    RolloutOptions opts;
    opts.group_size = config.train.grpo.group_size;
    opts.adv_epsilon = config.train.grpo.adv_epsilon;
    opts.attempts = config.rollout_attempts;
    opts.base_backoff = std::chrono::milliseconds(config.backoff_ms);
    opts.parallelism = config.rollout_parallelism;
    const auto result =
        run_rollout(instances, http_transport(args.endpoint, config.request_timeout_s), opts);
    std::string text;
    for (const auto& e : result.entries) text += to_json(e).dump() + "\n";
    emit(args.output, text, out);
    const auto& s = result.summary;
    err << "instances: " << s.instances << ", succeeded: " << s.succeeded
        << ", failures: " << (s.transport_failures + s.protocol_failures)
        << " (transport " << s.transport_failures << ", protocol " << s.protocol_failures
        << ")\n";
    return kExitOk;
  });
}

int cli_sample_tasks(const SampleTasksArgs& args, const AppConfig& config, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const double p = args.p.value_or(config.train.tvg_prob);
    Rng rng(args.seed.value_or(config.train.seed));
    std::string text;
    text.reserve(args.n * 4);
    std::map<TaskKind, std::size_t> counts;
    for (std::size_t i = 0; i < args.n; ++i) {
      const auto kind = rewards::sample_task_kind(rng, p);
      ++counts[kind];
      text += to_string(kind);
      text += '\n';
    }
    emit(args.output, text, out);
    for (const auto& [kind, n] : counts) err << to_string(kind) << ": " << n << '\n';
    return kExitOk;
  });
}

int cli_serve_rewards(const std::string& bind, const AppConfig& config, std::ostream& out,
                      std::ostream& err) {
  return guarded(err, [&] {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw ArgumentError("bind address must be host:port");
    const auto host = bind.substr(0, colon);
    int port = 0;
    try {
      port = std::stoi(bind.substr(colon + 1));
    } catch (const std::exception&) {
      throw ArgumentError("invalid port in '" + bind + "'");
    }
    const auto lexicon = custom_lexicon(config);
    ServiceOptions opts;
    opts.max_body_bytes = config.max_body_bytes;
    opts.adv_epsilon = config.train.grpo.adv_epsilon;
    if (lexicon) opts.lexicon = &*lexicon;
    RewardService service(opts);
    const int bound = service.bind(host, port);
    out << "listening on " << host << ':' << bound << std::endl;
    service.listen();
    return kExitOk;
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Grounding and verb-inversion reward tooling", "tvgrl"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "Config file (key=value); defaults to $TVGRL_CONFIG");
  app.add_option("--set", overrides, "Override one config key (key=value)")->allow_extra_args(false);

  InvertArgs invert;
  auto* c_invert = app.add_subcommand("invert", "Turn grounding annotations into task instances");
  c_invert->add_option("--in", invert.input, "Annotation file")->required();
  c_invert->add_option("--out", invert.output, "Instance file ('-' for stdout)");
  c_invert->add_option("--format", invert.format, "native | charades | activitynet | qvhighlight");
  c_invert->add_option("--verb-choice", invert.verb_choice, "first | all | <index>");
  c_invert->add_option("--kinds", invert.kinds, "Comma-separated task kinds");
  c_invert->add_flag("--strict", invert.strict, "Abort on the first malformed record");
  c_invert->add_option("--durations", invert.durations, "Durations CSV (Charades)");
  c_invert->add_option("--prompts", invert.prompts, "Prompt override file");

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "Score responses against task instances");
  c_score->add_option("--instances", score.instances)->required();
  c_score->add_option("--responses", score.responses)->required();
  c_score->add_option("--breakdowns", score.breakdowns, "Per-sample reward file");
  c_score->add_option("--report", score.report, "JSON report file");
  c_score->add_option("--table", score.table, "Text table report file");
  c_score->add_option("--csv", score.csv, "CSV report file");
  c_score->add_flag("--inclusive", score.inclusive, "Count IoU == m as a hit");

  TrainToyArgs train;
  auto* c_train = app.add_subcommand("train-toy", "Train the toy policy on synthetic clips");
  c_train->add_option("--out-dir", train.out_dir)->required();
  c_train->add_flag("--study", train.study, "Also train a grounding-only baseline");

  RolloutArgs rollout;
  auto* c_rollout = app.add_subcommand("rollout", "Collect scored groups from a remote policy");
  c_rollout->add_option("--endpoint", rollout.endpoint, "http://host:port/path")->required();
  c_rollout->add_option("--instances", rollout.instances)->required();
  c_rollout->add_option("--out", rollout.output, "Group file ('-' for stdout)");

  std::string bind = "127.0.0.1:8080";
  auto* c_serve = app.add_subcommand("serve-rewards", "Serve the reward functions over HTTP");
  c_serve->add_option("--bind", bind, "host:port");

  SampleTasksArgs sample;
  auto* c_sample = app.add_subcommand("sample-tasks", "Print a seeded stream of task kinds");
  c_sample->add_option("--n", sample.n, "Number of draws");
  c_sample->add_option("--p", sample.p, "Probability of the grounding task");
  c_sample->add_option("--seed", sample.seed);
  c_sample->add_option("--out", sample.output, "Output file ('-' for stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }

  AppConfig config;
  try {
    config = resolve_config(config_path, overrides);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }

  if (*c_invert) return cli_invert(invert, config, out, err);
  if (*c_score) return cli_score(score, config, out, err);
  if (*c_train) return cli_train_toy(train, config, out, err);
  if (*c_rollout) return cli_rollout(rollout, config, out, err);
  if (*c_serve) return cli_serve_rewards(bind, config, out, err);
  if (*c_sample) return cli_sample_tasks(sample, config, out, err);
  return kExitInvalid;
}

}  // namespace tvgrl::interface
