#pragma once

#include "rmfs/allocation.hpp"
#include "rmfs/dataset.hpp"
#include "rmfs/datagen.hpp"
#include "rmfs/rl_math.hpp"
#include "rmfs/soft_alloc.hpp"
#include "rmfs/warehouse.hpp"

#include <cstdint>
#include <optional>
#include <queue>
#include <string>
#include <vector>

namespace rmfs {

enum class EventKind : std::uint8_t { Idle, PickupCompletion, DeliveryCompletion };

const char* to_string(EventKind k);

/// A decision point presented to a scheduler.
struct Decision {
  Seconds time = 0.0;
  EventKind kind = EventKind::Idle;
  RobotId robot = 0;
  long seq = 0;
};

/// The episode was aborted (deadlock watchdog, decision cap or policy failure).
class EpisodeAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected action; the simulation state is unchanged.
class InvalidAction : public InputError {
 public:
  using InputError::InputError;
};

Seconds processing_time(int num_items, Seconds c_item, Seconds c_shelf);

struct SimConfig {
  AllocatorKind allocator = AllocatorKind::Soft;
  int top_k = 10;
  rl::ShapingConfig shaping;
  CpOptions cp;
  int pool_threshold = 10;
  Seconds pool_interval = 60.0;
  std::uint64_t seed = 0;  // stream for the random allocator
  long max_decisions = 2000000;
  bool check_invariants = false;  // after every step (tests)
};

struct EpisodeMetrics {
  Seconds makespan = 0.0;
  Seconds mean_completion = 0.0;  // mean of (completion - arrival) over completed orders
  double throughput = 0.0;        // shelves per workstation per hour
  std::vector<double> workstation_throughput;
  double hit_rate = 0.0;          // picked items per shelf delivery
  double mean_travel = 0.0;       // cells per robot
  long decisions = 0;
  int orders = 0;
  int completed = 0;
  int infeasible = 0;
  int deliveries = 0;
  long items_picked = 0;
};

struct StepResult {
  double reward = 0.0;
  Seconds dtau = 0.0;
  bool done = false;
};

/// Action ids are shared by all event kinds: [0, N_w) are workstations, then N_w + l is
/// storage location l. Masks have length N_w + N_l.
class Simulation {
 public:
  Simulation(const Dataset& dataset, SimConfig config);

  bool done() const { return !pending_.has_value(); }
  /// The pending decision; throws StateError when the episode is over.
  const Decision& current() const;
  Seconds now() const { return now_; }

  const Warehouse& world() const { return world_; }
  const SoftAllocState& soft() const { return soft_; }
  const SimConfig& config() const { return config_; }
  const Dataset& dataset() const { return dataset_; }

  int num_actions() const { return world_.num_workstations() + world_.num_locations(); }
  int workstation_action(WorkstationId w) const { return w; }
  int location_action(LocationId l) const { return world_.num_workstations() + l; }
  bool is_workstation_action(int a) const { return a >= 0 && a < world_.num_workstations(); }
  LocationId action_location(int a) const { return a - world_.num_workstations(); }
  Position action_position(int a) const;

  /// Legal actions of the pending decision (reservation rule applied).
  std::vector<std::uint8_t> legal_mask() const;
  /// Legal actions that make progress: shelves with soft orders or tasks, workstations the
  /// carried shelf owes picks to, and empty locations once nothing is owed.
  std::vector<std::uint8_t> useful_mask() const;
  /// useful_mask() when it has any entry, else legal_mask(); what heuristic schedulers use.
  std::vector<std::uint8_t> policy_mask() const;
  /// Return phase: a DeliveryCompletion whose shelf owes nothing to any workstation.
  bool in_return_phase() const;
  rl::Phase phase() const;

  /// Expected time until the picker at w is free of everything queued, en route or bound.
  Seconds queue_clear_time(WorkstationId w) const;
  std::vector<Seconds> queue_clear_times() const;

  /// T_r: current time for awake robots, last-activity time for sleeping ones.
  Eigen::VectorXd active_times() const;
  double potential() const;

  StepResult step(int action);

  EpisodeMetrics metrics() const;
  /// JSON-lines event log, header first.
  const std::vector<std::string>& log() const { return log_; }
  std::string log_text() const;

  // Counters for the value features.
  int arrived_orders() const { return arrived_; }
  int resolved_orders() const { return completed_ + infeasible_; }
  int completed_soft_orders() const { return completed_soft_; }
  int completed_tasks() const { return completed_tasks_; }
  int completed_orders() const { return completed_; }

  /// Earliest arrival among orders associated with shelf s (soft set or tasks); +inf if none.
  Seconds shelf_earliest_order(ShelfId s) const;
  /// Earliest arrival among orders whose tasks on shelf s are bound for w; +inf if none.
  Seconds shelf_earliest_order(ShelfId s, WorkstationId w) const;
  /// Shelf has soft orders or pending tasks.
  bool shelf_has_work(ShelfId s) const;

 private:
  enum class Internal : std::uint8_t {
    OrderArrival,
    PoolFlush,
    ArriveWorkstation,
    ArriveReturn,
    Delivery,  // decisions from here on
    Pickup,
    Idle,
  };
  struct QueuedEvent {
    Seconds time;
    Internal kind;
    int subject;  // order, robot or -1
    long seq;
    bool operator>(const QueuedEvent& o) const;
  };

  void push(Seconds t, Internal kind, int subject);
  void advance();  // process events until a decision is pending or the episode ends
  bool process(const QueuedEvent& e);  // true if it produced a pending decision

  void on_arrival(OrderId o);
  void flush_pool();
  void on_arrive_workstation(RobotId r);
  void on_arrive_return(RobotId r);
  void complete_job(RobotState& robot);
  void wake_all();
  void sleep(RobotState& robot);
  bool all_resolved() const;
  void log_event(const std::string& line);
  void finish();

  void apply_idle(RobotState& robot, int action);
  void apply_pickup(RobotState& robot, int action);
  void apply_delivery(RobotState& robot, int action);
  Seconds move_robot(RobotState& robot, Position target);
  void allocate_committed(OrderId o, WorkstationId w);
  void resolve_infeasible(OrderId o);
  void complete_order(OrderState& os);
  bool useful_idle_exists() const;
  std::vector<std::uint8_t> idle_mask(bool useful) const;

  Dataset dataset_;
  SimConfig config_;
  Warehouse world_;
  SoftAllocState soft_;
  Rng alloc_rng_;

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, std::greater<>> queue_;
  long seq_ = 0;
  Seconds now_ = 0.0;
  Seconds last_event_time_ = 0.0;
  std::optional<Decision> pending_;
  double pending_potential_ = 0.0;

  std::vector<OrderId> pool_;
  Seconds last_flush_ = 0.0;
  bool flush_scheduled_ = false;
  long flush_generation_ = 0;
  int arrivals_left_ = 0;
  ItemVector uncommitted_demand_;  // soft or pooled demand not yet reserved

  int arrived_ = 0;
  int completed_ = 0;
  int infeasible_ = 0;
  int completed_soft_ = 0;
  int completed_tasks_ = 0;
  long decisions_ = 0;
  long progress_ = 0;
  long watchdog_mark_ = -1;

  std::vector<std::string> log_;
};

}  // namespace rmfs
