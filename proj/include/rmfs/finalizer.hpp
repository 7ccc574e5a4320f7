#pragma once

#include "rmfs/soft_alloc.hpp"
#include "rmfs/warehouse.hpp"

#include <utility>
#include <vector>

namespace rmfs {

/// Order cannot be covered by the warehouse's unreserved inventory.
class InfeasibleOrder : public InputError {
 public:
  using InputError::InputError;
};

struct PickList {
  ShelfId shelf = -1;
  WorkstationId workstation = -1;  // unset until the delivery choice
  std::vector<std::pair<OrderId, ItemVector>> entries;
};

struct PickupResult {
  std::vector<OrderId> feasible;   // O_feas
  std::vector<OrderId> remainder;  // O_rem
  PickList picklist;
};

struct DeliveryResult {
  PickList picklist;
  std::vector<Task> new_tasks;
  std::vector<OrderId> infeasible;
};

/// Splits O_{s*} (ascending order id) into orders the lifted shelf fully covers and the rest,
/// reserves the covered demand on s*, then retracts every order of O_{s*} from the soft state.
/// Throws StateError if s* is not on a robot.
PickupResult finalize_pickup(Warehouse& world, SoftAllocState& soft, ShelfId shelf);

/// Binds the pick-list to w* and covers every remainder order from other shelves, ranked by
/// live matching degree toward w*. The lifted shelf itself is used only as a last resort.
/// Uncoverable orders are released and reported as infeasible.
DeliveryResult finalize_delivery(Warehouse& world, ShelfId shelf, WorkstationId workstation,
                                 const PickupResult& pickup, double epsilon = kMatchEpsilon);

/// Default allocation loop: repeatedly take from the argmax-matching shelf for workstation w
/// until the order's unreserved demand is zero. Throws InfeasibleOrder if it cannot finish.
std::vector<Task> default_allocate(Warehouse& world, OrderId order, WorkstationId workstation,
                                   double epsilon = kMatchEpsilon);

}  // namespace rmfs
