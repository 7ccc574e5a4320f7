#include "rmfs/episode.hpp"

#include <json.hpp>

#include <sstream>

namespace rmfs {

EpisodeResult run_episode(const Dataset& dataset, const SimConfig& config, Scheduler& scheduler,
                          const StepObserver& observer) {
  Simulation sim(dataset, config);
  EpisodeResult res;
  res.initial_potential = sim.potential();
  while (!sim.done()) {
    int action = -1;
    try {
      action = scheduler.choose(sim);
    } catch (const std::exception& e) {
      throw EpisodeAborted(std::string("scheduler '") + scheduler.name() + "' failed at t=" +
                           std::to_string(sim.now()) + ": " + e.what());
    }
    StepResult step;
    try {
      step = sim.step(action);
    } catch (const InvalidAction& e) {
      throw EpisodeAborted(std::string("scheduler '") + scheduler.name() +
                           "' chose an illegal action: " + e.what());
    }
    res.shaped_return += step.reward;
    res.actions.push_back(action);
    if (observer) observer(sim, action, step);
  }
  res.final_potential = sim.potential();
  res.metrics = sim.metrics();
  res.log = sim.log();
  return res;
}

SimConfig config_from_header(const std::string& header_line) {
  const auto h = nlohmann::json::parse(header_line);
  if (h.value("ev", "") != "header") throw InputError("first log line is not a header");
  if (h.value("version", 0) != 1) throw InputError("unsupported log version");
  SimConfig c;
  c.allocator = allocator_from_string(h.at("allocator").get<std::string>());
  c.top_k = h.at("k").get<int>();
  c.seed = h.at("seed").get<std::uint64_t>();
  c.shaping.p = h.at("p").get<double>();
  c.shaping.gamma = h.at("gamma").get<double>();
  c.shaping.literal_gamma = h.at("literal_gamma").get<bool>();
  c.pool_threshold = h.at("pool").at(0).get<int>();
  c.pool_interval = h.at("pool").at(1).get<double>();
  c.cp.node_budget = h.at("cp_budget").get<long>();
  return c;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

ReplayReport replay_log(const Dataset& dataset, const std::vector<std::string>& log_lines) {
  ReplayReport rep;
  if (log_lines.empty()) {
    rep.line = 1;
    rep.message = "empty log";
    return rep;
  }
  SimConfig config;
  std::vector<int> actions;
  try {
    config = config_from_header(log_lines.front());
    const auto h = nlohmann::json::parse(log_lines.front());
    if (h.at("digest").get<std::string>() != content_digest(to_text(dataset))) {
      rep.line = 1;
      rep.message = "dataset digest does not match the log header";
      return rep;
    }
  } catch (const std::exception& e) {
    rep.line = 1;
    rep.message = std::string("bad header: ") + e.what();
    return rep;
  }
  for (std::size_t i = 1; i < log_lines.size(); ++i) {
    try {
      const auto j = nlohmann::json::parse(log_lines[i]);
      if (j.value("ev", "") == "decision") actions.push_back(j.at("a").get<int>());
    } catch (const std::exception&) {
      // Left for the line comparison to report.
    }
  }

  std::vector<std::string> regenerated;
  std::string failure;
  try {
    ReplayScheduler sched(actions);
    regenerated = run_episode(dataset, config, sched).log;
  } catch (const std::exception& e) {
    failure = e.what();
  }
  if (!failure.empty()) {
    // Re-run step by step to find how far the log stayed consistent.
    Simulation sim(dataset, config);
    std::size_t next = 0;
    try {
      while (!sim.done() && next < actions.size()) sim.step(actions[next++]);
    } catch (const std::exception&) {
    }
    regenerated = sim.log();
  }
  const std::size_t n = std::max(regenerated.size(), log_lines.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::string* a = i < log_lines.size() ? &log_lines[i] : nullptr;
    const std::string* b = i < regenerated.size() ? &regenerated[i] : nullptr;
    if (a && b && *a == *b) continue;
    rep.line = i + 1;
    rep.expected = a ? *a : "<end of log>";
    rep.actual = b ? *b : "<end of replay>";
    rep.message = failure.empty() ? "replay diverges from the log" : "replay failed: " + failure;
    return rep;
  }
  if (!failure.empty()) {
    rep.line = n + 1;
    rep.message = "replay failed: " + failure;
    return rep;
  }
  rep.ok = true;
  return rep;
}

}  // namespace rmfs
