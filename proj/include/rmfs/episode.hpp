#pragma once

#include "rmfs/policies.hpp"
#include "rmfs/simulation.hpp"

#include <functional>
#include <string>
#include <vector>

namespace rmfs {

struct EpisodeResult {
  EpisodeMetrics metrics;
  std::vector<std::string> log;
  double shaped_return = 0.0;
  double initial_potential = 0.0;
  double final_potential = 0.0;
  std::vector<int> actions;
};

/// Called after every step with (simulation, chosen action, step result).
using StepObserver = std::function<void(const Simulation&, int, const StepResult&)>;

/// Drives one episode to completion. Scheduler exceptions and illegal actions become
/// EpisodeAborted with the decision that failed.
EpisodeResult run_episode(const Dataset& dataset, const SimConfig& config, Scheduler& scheduler,
                          const StepObserver& observer = {});

/// Reads the run configuration back out of a log header line.
SimConfig config_from_header(const std::string& header_line);

struct ReplayReport {
  bool ok = false;
  std::size_t line = 0;  // 1-based first divergent line, 0 when ok
  std::string expected;
  std::string actual;
  std::string message;
};

/// Re-executes the logged actions against `dataset` and compares the regenerated log line by
/// line. Corrupt or truncated logs are reported as a divergence, never thrown.
ReplayReport replay_log(const Dataset& dataset, const std::vector<std::string>& log_lines);

std::vector<std::string> split_lines(const std::string& text);

}  // namespace rmfs
