#include "tvgrl/interface/bridge.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "tvgrl/errors.hpp"
#include "tvgrl/records.hpp"
#include "tvgrl/rewards.hpp"

namespace tvgrl::interface {

namespace {

const Json& field(const Json& j, const char* name) {
  if (!j.is_object()) throw ProtocolError("record must be an object");
  const auto it = j.find(name);
  if (it == j.end()) throw ProtocolError(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const Json& j, const char* name) {
  const auto& v = field(j, name);
  if (!v.is_string()) throw ProtocolError(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

Json encode(const BridgeRequest& r) {
  Json j;
  j["id"] = r.id;
  j["kind"] = to_string(r.kind);
  j["prompt"] = r.prompt;
  j["video"] = r.video_ref;
  j["clip"] = Json::array({r.clip.start_s, r.clip.end_s});
  j["n_samples"] = r.n_samples;
  return j;
}

Json encode(const BridgeResponse& r) {
  Json j;
  j["id"] = r.id;
  j["samples"] = r.samples;
  if (r.logprobs) j["logprobs"] = *r.logprobs;
  return j;
}

BridgeRequest decode_request(const Json& j) {
  BridgeRequest r;
  r.id = string_field(j, "id");
  try {
    r.kind = parse_task_kind(string_field(j, "kind"));
    r.clip = segment_from_json(field(j, "clip"));
  } catch (const ProtocolError&) {
    throw;
  } catch (const Error& e) {
    throw ProtocolError(e.what());
  }
  r.prompt = string_field(j, "prompt");
  r.video_ref = string_field(j, "video");
  const auto& n = field(j, "n_samples");
  if (!n.is_number_integer() || n.get<long long>() < 1 || n.get<long long>() > 1'000'000) {
    throw ProtocolError("n_samples must be a positive integer");
  }
  r.n_samples = n.get<int>();
  return r;
}

BridgeResponse decode_response(const Json& j) {
  BridgeResponse r;
  r.id = string_field(j, "id");
  const auto& samples = field(j, "samples");
  if (!samples.is_array()) throw ProtocolError("field 'samples' must be an array");
  for (const auto& s : samples) {
    if (!s.is_string()) throw ProtocolError("every sample must be a string");
    r.samples.push_back(s.get<std::string>());
  }
  if (const auto it = j.find("logprobs"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ProtocolError("field 'logprobs' must be an array");
    std::vector<double> lp;
    for (const auto& v : *it) {
      if (!v.is_number()) throw ProtocolError("every logprob must be a number");
      lp.push_back(v.get<double>());
    }
    if (lp.size() != r.samples.size()) {
      throw ProtocolError("logprobs length does not match samples length");
    }
    r.logprobs = std::move(lp);
  }
  return r;
}

BridgeRequest make_request(const TaskInstance& instance, int n_samples) {
  return {instance.id, instance.kind, instance.prompt, instance.video_ref, instance.clip,
          n_samples};
}

Transport http_transport(const std::string& endpoint, double timeout_s) {
  const auto scheme = endpoint.find("://");
  if (endpoint.rfind("http://", 0) != 0) {
    throw ArgumentError("endpoint must start with http://");
  }
  const auto slash = endpoint.find('/', scheme + 3);
  const std::string host = endpoint.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : endpoint.substr(slash);
  const auto sec = static_cast<time_t>(timeout_s);
  const auto usec = static_cast<time_t>((timeout_s - static_cast<double>(sec)) * 1e6);

  return [host, path, sec, usec](const std::string& body) {
    httplib::Client client(host);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);
    TransportResult out;
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.delivered = true;
    out.status = res->status;
    out.body = res->body;
    return out;
  };
}

namespace {

RolloutEntry roll_one(const TaskInstance& inst, const Transport& transport,
                      const RolloutOptions& options) {
  RolloutEntry entry;
  entry.instance_id = inst.id;
  const auto body = encode(make_request(inst, options.group_size)).dump();

  auto delay = options.base_backoff;
  TransportResult res;
  for (int attempt = 1; attempt <= options.attempts; ++attempt) {
    entry.attempts = attempt;
    res = transport(body);
    if (res.delivered) break;
    if (attempt < options.attempts) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  if (!res.delivered) {
    entry.error_code = "transport";
    entry.error_message = res.error.empty() ? "request failed" : res.error;
    return entry;
  }

  try {
    if (res.status != 200) {
      throw ProtocolError("endpoint answered with status " + std::to_string(res.status));
    }
    Json j;
    try {
      j = Json::parse(res.body);
    } catch (const Json::exception&) {
      throw ProtocolError("reply is not valid JSON");
    }
    const auto reply = decode_response(j);
    if (reply.id != inst.id) throw ProtocolError("reply id '" + reply.id + "' does not match");
    if (reply.samples.size() != static_cast<std::size_t>(options.group_size)) {
      throw ProtocolError("expected " + std::to_string(options.group_size) + " samples, got " +
                          std::to_string(reply.samples.size()));
    }
    grpo::GroupRollout group;
    group.instance = inst;
    group.responses = reply.samples;
    for (const auto& s : reply.samples) {
      group.rewards.push_back(rewards::combined_reward(inst, s).r_total);
    }
    group.advantages = grpo::normalize_advantages(group.rewards, options.adv_epsilon);
    if (reply.logprobs) group.logp_old = *reply.logprobs;
    entry.rollout = std::move(group);
  } catch (const ProtocolError& e) {
    entry.error_code = "protocol";
    entry.error_message = e.what();
  }
  return entry;
}

}  // namespace

RolloutResult run_rollout(std::span<const TaskInstance> instances, const Transport& transport,
                          const RolloutOptions& options) {
  if (options.group_size < 2) throw ArgumentError("group_size must be at least 2");
  if (options.attempts < 1) throw ArgumentError("attempts must be at least 1");
  if (options.parallelism < 1) throw ArgumentError("parallelism must be at least 1");

  RolloutResult result;
  result.entries.resize(instances.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next.fetch_add(1); i < instances.size(); i = next.fetch_add(1)) {
      result.entries[i] = roll_one(instances[i], transport, options);
    }
  };
  const auto n_threads =
      std::min<std::size_t>(static_cast<std::size_t>(options.parallelism), instances.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 1; t < n_threads; ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();

  std::stable_sort(result.entries.begin(), result.entries.end(),
                   [](const RolloutEntry& a, const RolloutEntry& b) {
                     return a.instance_id < b.instance_id;
                   });
  result.summary.instances = instances.size();
  for (const auto& e : result.entries) {
    if (e.rollout) ++result.summary.succeeded;
    else if (e.error_code == "transport") ++result.summary.transport_failures;
    else ++result.summary.protocol_failures;
  }
  return result;
}

Json to_json(const RolloutEntry& entry) {
  if (entry.rollout) return grpo::to_json(*entry.rollout);
  Json j;
  j["instance_id"] = entry.instance_id;
  j["error"] = {{"code", entry.error_code}, {"message", entry.error_message}};
  j["attempts"] = entry.attempts;
  return j;
}

}  // namespace tvgrl::interface
