#include "rmfs/policies.hpp"

#include "rmfs/rl_math.hpp"
#include "rmfs/tsp.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

namespace rmfs {

namespace {

void require_nonempty(std::span<const std::uint8_t> mask, const char* who) {
  if (std::find(mask.begin(), mask.end(), 1) == mask.end()) {
    throw InputError(std::string(who) + ": empty action mask");
  }
}

std::vector<Position> all_action_positions(const Simulation& sim) {
  std::vector<Position> out;
  out.reserve(static_cast<std::size_t>(sim.num_actions()));
  for (int a = 0; a < sim.num_actions(); ++a) out.push_back(sim.action_position(a));
  return out;
}

Position decision_robot_pos(const Simulation& sim) {
  return sim.world().robots[sim.current().robot].pos;
}

int nearest_in(const Simulation& sim, const Mask& mask) {
  return nearest_choice(decision_robot_pos(sim), all_action_positions(sim), mask);
}

}  // namespace

int nearest_choice(Position from, std::span<const Position> targets,
                   std::span<const std::uint8_t> mask) {
  if (targets.size() != mask.size()) throw InputError("nearest_choice: mask length mismatch");
  require_nonempty(mask, "nearest_choice");
  int best = -1;
  int best_d = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const int d = manhattan_dist(from, targets[i]);
    if (best < 0 || d < best_d) {
      best = static_cast<int>(i);
      best_d = d;
    }
  }
  return best;
}

int argmax_masked(std::span<const double> values, std::span<const std::uint8_t> mask) {
  if (values.size() != mask.size()) throw InputError("argmax_masked: mask length mismatch");
  require_nonempty(mask, "argmax_masked");
  int best = -1;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && (best < 0 || values[i] > values[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

std::vector<double> action_bias(const Simulation& sim, double eps) {
  const auto& world = sim.world();
  const Position from = decision_robot_pos(sim);
  std::vector<double> b(static_cast<std::size_t>(sim.num_actions()), 0.0);
  for (WorkstationId w = 0; w < world.num_workstations(); ++w) {
    b[static_cast<std::size_t>(sim.workstation_action(w))] =
        rl::phase_bias(rl::Phase::Delivery, static_cast<double>(world.workstations[w].workload), eps);
  }
  for (const auto& l : world.locations) {
    const auto a = static_cast<std::size_t>(sim.location_action(l.site.id));
    if (l.site.occupant) {
      b[a] = rl::phase_bias(rl::Phase::Pickup, sim.soft().shelf_heat()[*l.site.occupant], eps);
    } else {
      b[a] = rl::phase_bias(rl::Phase::Return,
                            static_cast<double>(manhattan_dist(from, l.site.pos)), eps);
    }
  }
  return b;
}

int earliest_choice(std::span<const double> order_times, std::span<const int> distances,
                    std::span<const std::uint8_t> mask) {
  if (order_times.size() != mask.size() || distances.size() != mask.size()) {
    throw InputError("earliest_choice: length mismatch");
  }
  require_nonempty(mask, "earliest_choice");
  int best = -1;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto b = static_cast<std::size_t>(best);
    if (best < 0 || std::tie(order_times[i], distances[i]) < std::tie(order_times[b], distances[b])) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

int random_choice(std::span<const std::uint8_t> mask, Rng& rng) {
  require_nonempty(mask, "random_choice");
  std::vector<int> valid;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) valid.push_back(static_cast<int>(i));
  }
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  return valid[pick(rng)];
}

int NearestScheduler::choose(const Simulation& sim) { return nearest_in(sim, sim.policy_mask()); }

int EarliestScheduler::choose(const Simulation& sim) {
  const Mask mask = sim.policy_mask();
  if (sim.in_return_phase()) return nearest_in(sim, mask);
  const auto& world = sim.world();
  const Decision& d = sim.current();
  const Position from = decision_robot_pos(sim);
  std::vector<double> times(mask.size(), std::numeric_limits<double>::infinity());
  std::vector<int> dist(mask.size(), 0);
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (!mask[a]) continue;
    const int action = static_cast<int>(a);
    dist[a] = manhattan_dist(from, sim.action_position(action));
    if (sim.is_workstation_action(action)) {
      const auto& robot = world.robots[d.robot];
      if (robot.shelf) times[a] = sim.shelf_earliest_order(*robot.shelf, action);
    } else {
      const auto& occ = world.locations[sim.action_location(action)].site.occupant;
      if (occ) times[a] = sim.shelf_earliest_order(*occ);
    }
  }
  return earliest_choice(times, dist, mask);
}

int TspScheduler::choose(const Simulation& sim) {
  const Mask mask = sim.policy_mask();
  if (sim.in_return_phase()) return nearest_in(sim, mask);
  const Position from = decision_robot_pos(sim);
  std::vector<std::pair<int, int>> cands;  // (distance, action)
  for (std::size_t a = 0; a < mask.size(); ++a) {
    if (mask[a]) cands.emplace_back(manhattan_dist(from, sim.action_position(static_cast<int>(a))),
                                    static_cast<int>(a));
  }
  std::sort(cands.begin(), cands.end());
  if (sim.current().kind == EventKind::Idle && static_cast<int>(cands.size()) > idle_stops_) {
    cands.resize(static_cast<std::size_t>(idle_stops_));
  }
  std::sort(cands.begin(), cands.end(), [](const auto& x, const auto& y) { return x.second < y.second; });
  std::vector<Position> stops;
  for (const auto& c : cands) stops.push_back(sim.action_position(c.second));
  const Tour tour = plan_path(from, stops);
  return cands[static_cast<std::size_t>(tour.order.front())].second;
}

int BiasScheduler::choose(const Simulation& sim) {
  return argmax_masked(action_bias(sim), sim.policy_mask());
}

int RandomScheduler::choose(const Simulation& sim) { return random_choice(sim.legal_mask(), rng_); }

int ReplayScheduler::choose(const Simulation&) {
  if (next_ >= actions_.size()) throw StateError("replay: action log exhausted");
  return actions_[next_++];
}

std::unique_ptr<Scheduler> make_scheduler(const std::string& name, std::uint64_t seed) {
  if (name == "nearest") return std::make_unique<NearestScheduler>();
  if (name == "earliest") return std::make_unique<EarliestScheduler>();
  if (name == "tsp") return std::make_unique<TspScheduler>();
  if (name == "bias") return std::make_unique<BiasScheduler>();
  if (name == "random") return std::make_unique<RandomScheduler>(seed);
  throw InputError("unknown scheduler '" + name +
                   "' (expected nearest, earliest, tsp, bias, random or remote)");
}

}  // namespace rmfs
