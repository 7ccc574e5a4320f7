#include "rmfs/finalizer.hpp"

#include <algorithm>

namespace rmfs {

namespace {

// Items the order still needs reserved: its full demand if nothing is reserved yet.
ItemVector open_demand(const Warehouse& world, OrderId o) {
  const auto& os = world.orders[o];
  if (os.unreserved != os.order.demand.sum()) {
    throw InvariantError("order " + std::to_string(o) + " is partially reserved");
  }
  return os.order.demand;
}

void cover_from_shelves(Warehouse& world, OrderId o, WorkstationId w, ShelfId exclude,
                        ItemVector& demand, std::vector<Task>& out, double epsilon) {
  const Position wpos = world.workstations[w].site.pos;
  const Eigen::VectorXi overlap = overlap_per_shelf(demand, world.available);
  std::vector<std::pair<double, ShelfId>> ranked;
  for (ShelfId s = 0; s < world.num_shelves(); ++s) {
    if (s == exclude || overlap[s] == 0) continue;
    const int d = manhattan_dist(world.shelf_position(s), wpos);
    ranked.emplace_back(overlap[s] / (d + epsilon), s);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (const auto& [v, s] : ranked) {
    if (demand.sum() == 0) break;
    auto take = partial_take(world.available.col(s), demand);
    if (take.taken.sum() == 0) continue;
    demand = take.demand;
    Task t{s, w, take.taken, o, false};
    world.add_task(t);
    out.push_back(std::move(t));
  }
}

}  // namespace

PickupResult finalize_pickup(Warehouse& world, SoftAllocState& soft, ShelfId shelf) {
  const auto& place = world.shelves.at(shelf).place;
  if (place.kind != ShelfPlace::Kind::Robot) {
    throw StateError("finalize_pickup: shelf " + std::to_string(shelf) + " is not being carried");
  }
  PickupResult res;
  res.picklist.shelf = shelf;
  const auto members = soft.soft_orders(shelf);
  for (OrderId o : members) {
    auto& os = world.orders[o];
    const ItemVector& demand = os.order.demand;
    auto col = world.available.col(shelf);
    if (can_fulfill(col, demand)) {
      col = subtract_demand(col, demand);
      os.unreserved = 0;
      os.via_soft = true;
      res.feasible.push_back(o);
      res.picklist.entries.emplace_back(o, demand);
    } else {
      res.remainder.push_back(o);
    }
    os.status = OrderStatus::Finalizing;
  }
  for (OrderId o : members) soft.retract_order(o);
  return res;
}

DeliveryResult finalize_delivery(Warehouse& world, ShelfId shelf, WorkstationId workstation,
                                 const PickupResult& pickup, double epsilon) {
  if (workstation < 0 || workstation >= world.num_workstations()) {
    throw InputError("finalize_delivery: unknown workstation");
  }
  DeliveryResult res;
  res.picklist = pickup.picklist;
  res.picklist.workstation = workstation;
  for (const auto& [o, items] : pickup.picklist.entries) {
    world.add_task({shelf, workstation, items, o, true});
    auto& os = world.orders[o];
    os.workstation = workstation;
    os.status = OrderStatus::Allocated;
  }

  for (OrderId o : pickup.remainder) {
    ItemVector demand = open_demand(world, o);
    std::vector<Task> tasks;
    cover_from_shelves(world, o, workstation, shelf, demand, tasks, epsilon);
    if (demand.sum() > 0) {
      cover_from_shelves(world, o, workstation, -1, demand, tasks, epsilon);
    }
    auto& os = world.orders[o];
    if (demand.sum() > 0) {
      for (const auto& t : tasks) {
        world.release_task(t);
        auto& list = world.shelves[t.shelf].tasks;
        for (auto it = list.begin(); it != list.end(); ++it) {
          if (it->order == o && !it->from_soft && it->items == t.items) {
            list.erase(it);
            break;
          }
        }
      }
      os.status = OrderStatus::Infeasible;
      res.infeasible.push_back(o);
      continue;
    }
    os.workstation = workstation;
    os.status = OrderStatus::Allocated;
    res.new_tasks.insert(res.new_tasks.end(), tasks.begin(), tasks.end());
  }
  return res;
}

std::vector<Task> default_allocate(Warehouse& world, OrderId order, WorkstationId workstation,
                                   double epsilon) {
  if (workstation < 0 || workstation >= world.num_workstations()) {
    throw InputError("default_allocate: unknown workstation");
  }
  ItemVector demand = open_demand(world, order);
  const ItemVector stock = world.available.rowwise().sum();
  if (!can_fulfill(stock, demand)) {
    throw InfeasibleOrder("order " + std::to_string(order) + " exceeds unreserved inventory");
  }
  const Position wpos = world.workstations[workstation].site.pos;
  std::vector<Task> tasks;
  while (demand.sum() > 0) {
    const Eigen::VectorXi overlap = overlap_per_shelf(demand, world.available);
    ShelfId best = -1;
    double best_v = 0.0;
    for (ShelfId s = 0; s < world.num_shelves(); ++s) {
      if (overlap[s] == 0) continue;
      const double v = overlap[s] / (manhattan_dist(world.shelf_position(s), wpos) + epsilon);
      if (v > best_v) {
        best_v = v;
        best = s;
      }
    }
    if (best < 0) throw InvariantError("default_allocate: no shelf overlaps a feasible demand");
    auto take = partial_take(world.available.col(best), demand);
    demand = take.demand;
    Task t{best, workstation, take.taken, order, false};
    world.add_task(t);
    tasks.push_back(std::move(t));
  }
  auto& os = world.orders[order];
  os.workstation = workstation;
  os.status = OrderStatus::Allocated;
  return tasks;
}

}  // namespace rmfs
