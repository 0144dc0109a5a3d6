#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <thread>

#include "tvgrl/verbtext.hpp"

namespace tvgrl::interface {

struct ServiceOptions {
  std::size_t max_body_bytes = 1 << 20;
  double adv_epsilon = 1e-6;
  const verbtext::Lexicon* lexicon = nullptr;  // null: builtin lexicon
};

/// Status and JSON body of one handled request.
struct HttpReply {
  int status = 200;
  std::string body;
};

/// Request handlers, independent of the HTTP server so they can be called
/// directly.
///   score:       {"instance": <record>, "response": "<text>"} -> breakdown
///   score-group: {"instance": <record>, "responses": [...]}
///                -> {"rewards": [breakdowns], "advantages": [...]}
/// Errors come back as {"error": {"code": ..., "message": ...}} with a
/// 4xx status.
HttpReply handle_score(std::string_view body, const ServiceOptions& options);
HttpReply handle_score_group(std::string_view body, const ServiceOptions& options);

std::string error_body(std::string_view code, std::string_view message);

/// HTTP shell around the handlers: POST /score, POST /score-group,
/// GET /health.
class RewardService {
 public:
  explicit RewardService(ServiceOptions options);
  ~RewardService();
  RewardService(const RewardService&) = delete;
  RewardService& operator=(const RewardService&) = delete;

  /// Binds host:port (port 0 picks a free port) and returns the bound port.
  /// Throws IoError when the address cannot be bound.
  int bind(const std::string& host, int port);

  /// Serves until stop(); requires a prior bind.
  void listen();

  /// bind + listen on a background thread. Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tvgrl::interface
