#include "rmfs/protocol.hpp"

#include "rmfs/datagen.hpp"
#include "rmfs/server.hpp"

#include <unistd.h>

#include <cmath>

namespace rmfs {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int int_field(const json& req, const char* key, int fallback, int lo, int hi) {
  if (!req.contains(key)) return fallback;
  const auto& v = req.at(key);
  if (!v.is_number_integer()) throw InputError(std::string("'") + key + "' must be an integer");
  const auto x = v.get<long long>();
  if (x < lo || x > hi) throw InputError(std::string("'") + key + "' out of range");
  return static_cast<int>(x);
}

double number_field(const json& req, const char* key, double fallback) {
  if (!req.contains(key)) return fallback;
  const auto& v = req.at(key);
  if (!v.is_number()) throw InputError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

std::string string_field(const json& req, const char* key, const std::string& fallback) {
  if (!req.contains(key)) return fallback;
  const auto& v = req.at(key);
  if (!v.is_string()) throw InputError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

Dataset dataset_from_request(const json& req) {
  if (req.contains("dataset_text")) return dataset_from_text(string_field(req, "dataset_text", ""));
  if (req.contains("dataset")) return load_dataset(string_field(req, "dataset", ""));
  const json gen = req.contains("generate") ? req.at("generate") : json::object();
  if (!gen.is_object()) throw InputError("'generate' must be an object");
  const int seed = int_field(gen, "seed", 0, 0, 1 << 30);
  auto cfg = ScenarioConfig::preset(string_field(gen, "scenario", "synth"),
                                    string_field(gen, "scale", "desk"), static_cast<std::uint64_t>(seed));
  return gen_instance(cfg);
}

}  // namespace

std::vector<double> target_bias(const Simulation& sim, const std::vector<int>& targets) {
  const auto all = action_bias(sim);
  std::vector<double> out;
  out.reserve(targets.size());
  for (int a : targets) out.push_back(all[static_cast<std::size_t>(a)]);
  return out;
}

std::vector<int> target_mask(const Simulation& sim, const std::vector<int>& targets) {
  const auto legal = sim.legal_mask();
  std::vector<int> out;
  out.reserve(targets.size());
  for (int a : targets) out.push_back(legal[static_cast<std::size_t>(a)]);
  return out;
}

json decision_payload(const Simulation& sim, int k1, int k2) {
  const Decision& d = sim.current();
  const HeteroGraph g = observe(sim, k1, k2);
  const auto v = value_features(sim);
  const auto useful = sim.useful_mask();
  json p;
  p["t"] = d.time;
  p["event"] = {{"kind", to_string(d.kind)}, {"robot", d.robot}, {"phase", static_cast<int>(sim.phase())}};
  p["value"] = {v.remaining, v.completed_soft, v.completed_tasks};
  p["mask"] = target_mask(sim, g.targets);
  std::vector<int> hint;
  for (int a : g.targets) hint.push_back(useful[static_cast<std::size_t>(a)]);
  p["useful"] = std::move(hint);
  p["bias"] = target_bias(sim, g.targets);
  p["obs"] = graph_to_json(g);
  return p;
}

json metrics_json(const EpisodeMetrics& m) {
  return {{"makespan", m.makespan},
          {"mean_completion", m.mean_completion},
          {"throughput", m.throughput},
          {"workstation_throughput", m.workstation_throughput},
          {"hit_rate", m.hit_rate},
          {"mean_travel", m.mean_travel},
          {"decisions", m.decisions},
          {"orders", m.orders},
          {"completed", m.completed},
          {"infeasible", m.infeasible},
          {"deliveries", m.deliveries},
          {"items_picked", m.items_picked}};
}

int bias_policy_action(const json& state) {
  const auto& targets = state.at("obs").at("targets");
  const auto& mask = state.at("mask");
  const auto& useful = state.at("useful");
  const auto& bias = state.at("bias");
  bool any_useful = false;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    any_useful |= mask.at(i).get<int>() && useful.at(i).get<int>();
  }
  int best = -1;
  double best_bias = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (!mask.at(i).get<int>() || (any_useful && !useful.at(i).get<int>())) continue;
    const double b = bias.at(i).is_number() ? bias.at(i).get<double>() : -1e300;
    const int a = targets.at(i).get<int>();
    if (best < 0 || b > best_bias || (b == best_bias && a < best)) {
      best = a;
      best_bias = b;
    }
  }
  return best;
}

// Session -----------------------------------------------------------------------------------

Session::Session(std::string id) : id_(std::move(id)) {}

std::string Session::reply(json frame) {
  frame["session"] = id_;
  frame["seq"] = seq_++;
  return frame.dump(-1, ' ', false, json::error_handler_t::replace);
}

json Session::error_frame(const std::string& code, const std::string& message, bool with_state) {
  json e{{"type", "error"}, {"code", code}, {"message", message}};
  if (with_state && sim_) e["state"] = state_frame();
  return e;
}

json Session::state_frame() {
  json s;
  s["type"] = "state";
  s["reward"] = finite_or_null(last_.reward);
  s["dtau"] = last_.dtau;
  s["done"] = sim_->done();
  if (!sim_->done()) {
    json p = decision_payload(*sim_, k1_, k2_);
    for (auto& [k, v] : p.items()) s[k] = std::move(v);
  } else {
    s["t"] = sim_->metrics().makespan;
  }
  return s;
}

std::string Session::handle(std::string_view line) {
  json req;
  try {
    req = json::parse(line.begin(), line.end());
  } catch (const std::exception& e) {
    return reply(error_frame("malformed", std::string("not a JSON document: ") + e.what(), false));
  }
  try {
    if (!req.is_object()) throw InputError("frame must be a JSON object");
    if (!req.contains("type") || !req.at("type").is_string()) throw InputError("frame needs a string 'type'");
    const std::string type = req.at("type").get<std::string>();
    if (type == "hello") return reply(on_hello(req));
    if (!greeted_) return reply(error_frame("protocol", "send hello first", false));
    if (type == "reset") return reply(on_reset(req));
    if (type == "action") return reply(on_action(req));
    if (type == "result") return reply(on_result(req));
    if (type == "bye") {
      closed_ = true;
      return reply(json{{"type", "bye"}});
    }
    return reply(error_frame("bad_request", "unknown frame type '" + type + "'", true));
  } catch (const InputError& e) {
    return reply(error_frame("bad_request", e.what(), true));
  } catch (const json::exception& e) {
    return reply(error_frame("bad_request", e.what(), true));
  } catch (const std::exception& e) {
    sim_.reset();
    return reply(error_frame("internal", std::string("episode dropped: ") + e.what(), false));
  }
}

json Session::on_hello(const json& req) {
  const int version = int_field(req, "version", kProtocolVersion, 0, 1 << 20);
  if (version != kProtocolVersion) {
    return error_frame("version", "server speaks protocol version " + std::to_string(kProtocolVersion), false);
  }
  greeted_ = true;
  return {{"type", "hello"}, {"version", kProtocolVersion}};
}

json Session::on_reset(const json& req) {
  SimConfig cfg;
  cfg.allocator = allocator_from_string(string_field(req, "allocator", "soft"));
  cfg.top_k = int_field(req, "k", cfg.top_k, 1, 1 << 20);
  cfg.seed = static_cast<std::uint64_t>(int_field(req, "seed", 0, 0, 1 << 30));
  const int k1 = int_field(req, "k1", 50, 1, 1 << 20);
  const int k2 = int_field(req, "k2", 50, 1, 1 << 20);
  if (req.contains("reward")) {
    const auto& r = req.at("reward");
    if (!r.is_object()) throw InputError("'reward' must be an object");
    cfg.shaping.p = number_field(r, "p", cfg.shaping.p);
    cfg.shaping.gamma = number_field(r, "gamma", cfg.shaping.gamma);
    if (r.contains("literal_gamma")) {
      if (!r.at("literal_gamma").is_boolean()) throw InputError("'literal_gamma' must be a boolean");
      cfg.shaping.literal_gamma = r.at("literal_gamma").get<bool>();
    }
    if (!(cfg.shaping.p >= 1.0) || !(cfg.shaping.gamma > 0.0 && cfg.shaping.gamma <= 1.0)) {
      throw InputError("reward p must be >= 1 and gamma in (0, 1]");
    }
  }
  Dataset d = dataset_from_request(req);
  auto sim = std::make_unique<Simulation>(d, cfg);
  sim_ = std::move(sim);
  k1_ = k1;
  k2_ = k2;
  last_ = {};
  return state_frame();
}

json Session::on_action(const json& req) {
  if (!sim_) return error_frame("protocol", "no episode; send reset first", false);
  if (sim_->done()) return error_frame("protocol", "episode is over; send result or reset", true);
  if (!req.contains("action") || !req.at("action").is_number_integer()) {
    return error_frame("bad_request", "'action' must be an integer", true);
  }
  const auto a = req.at("action").get<long long>();
  if (a < 0 || a >= sim_->num_actions()) {
    return error_frame("invalid_action", "action " + std::to_string(a) + " out of range", true);
  }
  try {
    last_ = sim_->step(static_cast<int>(a));
  } catch (const InvalidAction& e) {
    return error_frame("invalid_action", e.what(), true);
  }
  return state_frame();
}

json Session::on_result(const json& req) {
  if (!sim_) return error_frame("protocol", "no episode; send reset first", false);
  if (!sim_->done()) return error_frame("protocol", "episode still running", true);
  json r{{"type", "result"}, {"metrics", metrics_json(sim_->metrics())},
         {"log_digest", content_digest(sim_->log_text())}};
  if (req.contains("include_log") && req.at("include_log").is_boolean() && req.at("include_log").get<bool>()) {
    r["log"] = sim_->log();
  }
  return r;
}

// Remote scheduler --------------------------------------------------------------------------

RemoteScheduler::RemoteScheduler(const std::string& endpoint, int k1, int k2)
    : fd_(connect_tcp(parse_endpoint(endpoint))), k1_(k1), k2_(k2) {}

RemoteScheduler::~RemoteScheduler() {
  if (fd_ >= 0) ::close(fd_);
}

int RemoteScheduler::choose(const Simulation& sim) {
  json frame = decision_payload(sim, k1_, k2_);
  frame["type"] = "state";
  frame["seq"] = seq_++;
  frame["done"] = false;
  write_all(fd_, frame.dump() + "\n");
  std::string line;
  if (!read_line(fd_, buffer_, line, kMaxFrameBytes)) throw StateError("remote policy closed the connection");
  const json reply = json::parse(line);
  if (reply.value("type", "") != "action" || !reply.contains("action") ||
      !reply.at("action").is_number_integer()) {
    throw StateError("remote policy sent a non-action frame: " + line.substr(0, 200));
  }
  return reply.at("action").get<int>();
}

}  // namespace rmfs
