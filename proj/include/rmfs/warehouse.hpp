#pragma once

#include "rmfs/core.hpp"
#include "rmfs/dataset.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace rmfs {

/// A (shelf -> workstation, pick-list) obligation for a single order.
///
/// `from_soft` marks pick-list lines of orders that a shelf satisfied entirely at pick-up;
/// all other tasks come from remainder handling or the default allocator.
struct Task {
  ShelfId shelf = 0;
  WorkstationId workstation = 0;
  ItemVector items;
  OrderId order = 0;
  bool from_soft = false;
};

enum class OrderStatus : std::uint8_t {
  Pending,      // not yet arrived
  Soft,         // present in soft order sets
  Pooled,       // waiting for a batch allocation
  Finalizing,   // split at pick-up, awaiting the delivery choice
  Allocated,    // every item reserved on some shelf
  Completed,
  Infeasible,
};

struct OrderState {
  Order order;
  OrderStatus status = OrderStatus::Pending;
  int unpicked = 0;
  int unreserved = 0;
  WorkstationId workstation = -1;
  bool via_soft = false;
};

struct ShelfPlace {
  enum class Kind : std::uint8_t { Location, Robot };
  Kind kind = Kind::Location;
  int index = 0;
};

struct ShelfState {
  ShelfId id = 0;
  ShelfPlace place;
  std::vector<Task> tasks;

  int task_count() const;
};

enum class Reservation : std::uint8_t { None, Pickup, Return };

struct LocationState {
  StorageLocation site;
  Reservation reservation = Reservation::None;
  RobotId reserved_by = -1;
};

struct WorkstationState {
  WorkstationSite site;
  int workload = 0;          // u_w
  Seconds free_at = 0.0;     // picker busy until
  int deliveries = 0;
  int items_picked = 0;
};

struct Job {
  WorkstationId workstation = -1;
  ShelfId shelf = -1;
  Seconds start = 0.0;
  Seconds finish = 0.0;
  std::vector<Task> lines;
};

struct RobotState {
  RobotId id = 0;
  Position pos;
  std::optional<ShelfId> shelf;
  RobotStatus status = RobotStatus::Idle;
  bool asleep = false;
  Seconds last_activity = 0.0;  // T_r
  long travel = 0;
  int target = -1;              // world target index while moving
  std::optional<Job> job;
};

/// The physical and bookkeeping state shared by allocators, finalizer and simulator.
///
/// Inventories are N_k x N_s matrices. `physical` is what is on the shelf; `available` is
/// physical minus everything already reserved by tasks or pick-lists.
class Warehouse {
 public:
  explicit Warehouse(const Dataset& d);

  GridMap grid;
  int num_items = 0;
  Seconds c_shelf = 0.0;
  Seconds c_item = 0.0;

  std::vector<LocationState> locations;
  std::vector<ShelfState> shelves;
  std::vector<WorkstationState> workstations;
  std::vector<RobotState> robots;
  std::vector<OrderState> orders;

  Eigen::MatrixXi physical;
  Eigen::MatrixXi available;
  ItemVector picked;          // items removed at workstations so far
  ItemVector initial_total;

  int num_shelves() const { return static_cast<int>(shelves.size()); }
  int num_workstations() const { return static_cast<int>(workstations.size()); }
  int num_locations() const { return static_cast<int>(locations.size()); }
  int num_robots() const { return static_cast<int>(robots.size()); }

  Position shelf_position(ShelfId s) const;
  std::vector<Position> shelf_positions() const;
  std::vector<Position> workstation_positions() const;

  /// Reserves `items` of shelf s for order o and appends the task; u_w grows accordingly.
  void add_task(Task t);
  /// Returns a reservation (used when an order is abandoned as infeasible).
  void release_task(const Task& t);

  /// Throws InvariantError on negative inventories or a broken conservation identity.
  void check_invariants() const;
};

}  // namespace rmfs
