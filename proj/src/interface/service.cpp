#include "tvgrl/interface/service.hpp"

#include <httplib.h>

#include "tvgrl/errors.hpp"
#include "tvgrl/grpo.hpp"
#include "tvgrl/json_types.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/rewards.hpp"

namespace tvgrl::interface {

namespace {

const verbtext::Lexicon& lexicon_of(const ServiceOptions& o) {
  return o.lexicon ? *o.lexicon : verbtext::Lexicon::builtin();
}

struct BadRequest {
  std::string code;
  std::string message;
};

Json parse_body(std::string_view body) {
  try {
    auto j = Json::parse(body);
    if (!j.is_object()) throw BadRequest{"malformed_body", "body must be a JSON object"};
    return j;
  } catch (const Json::exception&) {
    throw BadRequest{"malformed_body", "body is not valid JSON"};
  }
}

TaskInstance instance_of(const Json& j) {
  const auto it = j.find("instance");
  if (it == j.end()) throw BadRequest{"missing_field", "missing field 'instance'"};
  try {
    return instance_from_json(*it);
  } catch (const Error& e) {
    throw BadRequest{"invalid_instance", e.what()};
  } catch (const Json::exception& e) {
    throw BadRequest{"invalid_instance", e.what()};
  }
}

HttpReply guarded(const std::function<Json()>& fn) {
  try {
    return {200, fn().dump()};
  } catch (const BadRequest& e) {
    return {400, error_body(e.code, e.message)};
  } catch (const Error& e) {
    return {400, error_body("invalid_request", e.what())};
  } catch (const std::exception& e) {
    return {500, error_body("internal", e.what())};
  }
}

}  // namespace

std::string error_body(std::string_view code, std::string_view message) {
  Json j;
  j["error"] = {{"code", std::string(code)}, {"message", std::string(message)}};
  return j.dump(-1, ' ', false, Json::error_handler_t::replace);
}

HttpReply handle_score(std::string_view body, const ServiceOptions& options) {
  return guarded([&] {
    const auto j = parse_body(body);
    const auto inst = instance_of(j);
    const auto it = j.find("response");
    if (it == j.end() || !it->is_string()) {
      throw BadRequest{"missing_field", "field 'response' must be a string"};
    }
    return rewards::to_json(
        rewards::combined_reward(inst, it->get<std::string>(), lexicon_of(options)));
  });
}

HttpReply handle_score_group(std::string_view body, const ServiceOptions& options) {
  return guarded([&] {
    const auto j = parse_body(body);
    const auto inst = instance_of(j);
    const auto it = j.find("responses");
    if (it == j.end() || !it->is_array()) {
      throw BadRequest{"missing_field", "field 'responses' must be an array"};
    }
    if (it->size() < 2) throw BadRequest{"invalid_group", "a group needs at least two responses"};
    Json breakdowns = Json::array();
    std::vector<double> totals;
    for (const auto& r : *it) {
      if (!r.is_string()) throw BadRequest{"invalid_group", "every response must be a string"};
      const auto b = rewards::combined_reward(inst, r.get<std::string>(), lexicon_of(options));
      totals.push_back(b.r_total);
      breakdowns.push_back(rewards::to_json(b));
    }
    Json out;
    out["rewards"] = std::move(breakdowns);
    out["advantages"] = grpo::normalize_advantages(totals, options.adv_epsilon);
    return out;
  });
}

struct RewardService::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::thread thread;
  int port = -1;
};

RewardService::RewardService(ServiceOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = options;
  auto& srv = impl_->server;
  srv.set_payload_max_length(options.max_body_bytes);

  auto route = [this](HttpReply (*handler)(std::string_view, const ServiceOptions&)) {
    return [this, handler](const httplib::Request& req, httplib::Response& res) {
      const auto reply = handler(req.body, impl_->options);
      res.status = reply.status;
      res.set_content(reply.body, "application/json");
    };
  };
  srv.Post("/score", route(&handle_score));
  srv.Post("/score-group", route(&handle_score_group));
  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    std::string code = "http_error";
    if (res.status == 404) code = "not_found";
    else if (res.status == 405) code = "method_not_allowed";
    else if (res.status == 413) code = "payload_too_large";
    res.set_content(error_body(code, httplib::status_message(res.status)), "application/json");
  });
  srv.set_exception_handler(
      [](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
        res.status = 500;
        res.set_content(error_body("internal", "unhandled error"), "application/json");
      });
}

RewardService::~RewardService() { stop(); }

int RewardService::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  impl_->port = bound;
  return bound;
}

void RewardService::listen() {
  if (impl_->port < 0) throw ArgumentError("service is not bound");
  impl_->server.listen_after_bind();
}

int RewardService::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void RewardService::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace tvgrl::interface
