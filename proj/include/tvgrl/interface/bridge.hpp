#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvgrl/grpo.hpp"
#include "tvgrl/json_types.hpp"
#include "tvgrl/types.hpp"

namespace tvgrl::interface {

/// Generation request sent to an external policy. Carries the video
/// reference and clip bounds; the remote side owns media access.
struct BridgeRequest {
  std::string id;
  TaskKind kind = TaskKind::Tvg;
  std::string prompt;
  std::string video_ref;
  Segment clip;
  int n_samples = 1;

  friend bool operator==(const BridgeRequest&, const BridgeRequest&) = default;
};

struct BridgeResponse {
  std::string id;
  std::vector<std::string> samples;
  std::optional<std::vector<double>> logprobs;

  friend bool operator==(const BridgeResponse&, const BridgeResponse&) = default;
};

Json encode(const BridgeRequest& request);
Json encode(const BridgeResponse& response);
/// Throw ProtocolError on missing or mistyped fields and broken invariants.
BridgeRequest decode_request(const Json& j);
BridgeResponse decode_response(const Json& j);

BridgeRequest make_request(const TaskInstance& instance, int n_samples);

/// Result of one transport attempt.
struct TransportResult {
  bool delivered = false;  // false: connection-level failure, worth retrying
  int status = 0;
  std::string body;
  std::string error;
};

/// Sends one request body and returns the reply. Must be safe to call from
/// several threads at once.
using Transport = std::function<TransportResult(const std::string& body)>;

/// POSTs to an http://host:port/path endpoint.
Transport http_transport(const std::string& endpoint, double timeout_s);

struct RolloutOptions {
  int group_size = 8;
  double adv_epsilon = 1e-6;
  int attempts = 3;
  std::chrono::milliseconds base_backoff{200};  // doubled after every failed attempt
  int parallelism = 4;
};

/// Per-instance outcome. Exactly one of rollout / error is set.
struct RolloutEntry {
  std::string instance_id;
  std::optional<grpo::GroupRollout> rollout;
  std::string error_code;  // "transport" or "protocol"
  std::string error_message;
  int attempts = 0;
};

struct RolloutSummary {
  std::size_t instances = 0;
  std::size_t succeeded = 0;
  std::size_t transport_failures = 0;
  std::size_t protocol_failures = 0;
};

struct RolloutResult {
  std::vector<RolloutEntry> entries;  // ordered by instance id
  RolloutSummary summary;
};

/// Requests group_size samples per instance and scores them with the combined
/// reward. Transport failures are retried with exponential backoff up to the
/// attempt budget; malformed replies are not retried.
RolloutResult run_rollout(std::span<const TaskInstance> instances, const Transport& transport,
                          const RolloutOptions& options);

Json to_json(const RolloutEntry& entry);

}  // namespace tvgrl::interface
