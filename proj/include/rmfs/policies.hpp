#pragma once

// Robot schedulers. Heuristic schedulers choose among Simulation::policy_mask(); the random
// scheduler samples the full legal mask.

#include "rmfs/datagen.hpp"
#include "rmfs/simulation.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rmfs {

using Mask = std::vector<std::uint8_t>;

/// argmin distance over masked targets, ties to the lower index. Throws InputError on an
/// empty mask.
int nearest_choice(Position from, std::span<const Position> targets, std::span<const std::uint8_t> mask);

/// argmax over masked entries, ties to the lower index.
int argmax_masked(std::span<const double> values, std::span<const std::uint8_t> mask);

/// Per-action bias of the pending decision: occupied location -> log(h^S + eps),
/// workstation -> -log(u_w + eps), empty location -> -log(dist + eps). Zero elsewhere.
std::vector<double> action_bias(const Simulation& sim, double eps = 1e-6);

/// Index of the smallest key (lexicographic), ties to the lower index.
int earliest_choice(std::span<const double> order_times, std::span<const int> distances,
                    std::span<const std::uint8_t> mask);

/// Uniform over masked entries.
int random_choice(std::span<const std::uint8_t> mask, Rng& rng);

class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual std::string name() const = 0;
  /// Returns an action id of the pending decision.
  virtual int choose(const Simulation& sim) = 0;
};

class NearestScheduler : public Scheduler {
 public:
  std::string name() const override { return "nearest"; }
  int choose(const Simulation& sim) override;
};

class EarliestScheduler : public Scheduler {
 public:
  std::string name() const override { return "earliest"; }
  int choose(const Simulation& sim) override;
};

/// Re-plans an open tour over the robot's candidate stops at every event and takes the first
/// leg. Idle events plan over the `idle_stops` nearest candidate shelves.
class TspScheduler : public Scheduler {
 public:
  explicit TspScheduler(int idle_stops = 12) : idle_stops_(idle_stops) {}
  std::string name() const override { return "tsp"; }
  int choose(const Simulation& sim) override;

 private:
  int idle_stops_;
};

class BiasScheduler : public Scheduler {
 public:
  std::string name() const override { return "bias"; }
  int choose(const Simulation& sim) override;
};

class RandomScheduler : public Scheduler {
 public:
  explicit RandomScheduler(std::uint64_t seed) : rng_(seed ^ 0x7a11'd0c5'0000'0003ull) {}
  std::string name() const override { return "random"; }
  int choose(const Simulation& sim) override;

 private:
  Rng rng_;
};

/// Plays back a fixed action sequence.
class ReplayScheduler : public Scheduler {
 public:
  explicit ReplayScheduler(std::vector<int> actions) : actions_(std::move(actions)) {}
  std::string name() const override { return "replay"; }
  int choose(const Simulation& sim) override;
  std::size_t consumed() const { return next_; }

 private:
  std::vector<int> actions_;
  std::size_t next_ = 0;
};

/// nearest, earliest, tsp, bias or random. `remote` is built by the protocol module.
std::unique_ptr<Scheduler> make_scheduler(const std::string& name, std::uint64_t seed);

}  // namespace rmfs
