#pragma once

#include "rmfs/dataset.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>

namespace rmfs {

using Rng = std::mt19937_64;

/// Parameters of a generated scenario. Defaults are the synthetic warehouse at small scale.
struct ScenarioConfig {
  std::string scenario = "synth";
  std::string scale = "small";
  int height = 100;
  int width = 80;
  int num_shelves = 1600;
  int num_workstations = 23;
  int num_robots = 15;
  int num_orders = 200;
  int num_items = 200;
  Seconds c_shelf = 10.0;
  Seconds c_item = 4.0;
  int wave_size = 50;          // S_wave
  Seconds wave_interval = 60;  // T_wave
  int wave_jitter = 3;         // epsilon ~ U{-3, 3}
  double pareto_alpha = 2.0;
  int max_lines = 4;           // L_max
  int max_quantity = 4;        // Q_max
  int shelf_max_types = 6;     // distinct item types stocked per shelf, U{1..n}
  int shelf_max_quantity = 10; // stock per stocked type, U{1..n}
  double spare_location_ratio = 0.1;
  std::uint64_t seed = 0;

  /// scenario in {synth, real}; scale in {small, medium, large, desk, micro}.
  /// `desk` is a scaled synthetic-small (20x16 grid, 80 shelves, 4 workstations, 5 robots,
  /// 50 orders); `micro` is 10x8, 2 robots, 20 orders.
  static ScenarioConfig preset(const std::string& scenario, const std::string& scale,
                               std::uint64_t seed = 0);

  void validate() const;
};

/// One arrival time t = max(0, k*T_wave + eps), k ~ U{0, N_waves-1}, eps ~ U{-j, j}.
Seconds gen_arrival_time(const ScenarioConfig& config, Rng& rng);

/// X = min(floor(P + 1), x_max) with P = (1-u)^(-1/alpha) - 1 (zero-based Pareto), u in [0,1).
int truncated_pareto_from_uniform(double alpha, int x_max, double u);
int truncated_pareto(double alpha, int x_max, Rng& rng);

/// Builds a full, seed-reproducible instance. Throws InputError when the layout cannot hold
/// the requested shelves.
Dataset gen_instance(const ScenarioConfig& config);

/// Inverse of the generated dataset name "<scenario>-<scale>-s<seed>"; nullopt for names that
/// are not of that form or name an unknown preset.
std::optional<ScenarioConfig> scenario_from_name(const std::string& name);

}  // namespace rmfs
