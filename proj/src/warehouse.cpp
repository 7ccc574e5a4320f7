#include "rmfs/warehouse.hpp"

namespace rmfs {

int ShelfState::task_count() const {
  int n = 0;
  for (const auto& t : tasks) n += t.from_soft ? 0 : 1;
  return n;
}

Warehouse::Warehouse(const Dataset& d)
    : grid(d.grid()), num_items(d.num_items), c_shelf(d.c_shelf), c_item(d.c_item) {
  d.validate();
  for (const auto& l : d.locations) locations.push_back({l, Reservation::None, -1});

  const auto where = d.initial_shelf_locations();
  physical.resize(num_items, static_cast<Eigen::Index>(d.shelves.size()));
  for (std::size_t s = 0; s < d.shelves.size(); ++s) {
    shelves.push_back({static_cast<ShelfId>(s), {ShelfPlace::Kind::Location, where[s]}, {}});
    physical.col(static_cast<Eigen::Index>(s)) = d.shelves[s];
  }
  available = physical;

  for (const auto& w : d.workstations) workstations.push_back({w, 0, 0.0, 0, 0});
  for (std::size_t r = 0; r < d.robots.size(); ++r) {
    RobotState rs;
    rs.id = static_cast<RobotId>(r);
    rs.pos = d.robots[r];
    robots.push_back(std::move(rs));
  }
  for (const auto& o : d.orders) {
    OrderState os;
    os.order = o;
    os.unpicked = o.demand.sum();
    os.unreserved = os.unpicked;
    orders.push_back(std::move(os));
  }
  picked = ItemVector::Zero(num_items);
  initial_total = d.total_inventory();
}

Position Warehouse::shelf_position(ShelfId s) const {
  const auto& place = shelves.at(s).place;
  if (place.kind == ShelfPlace::Kind::Location) return locations[place.index].site.pos;
  return robots[place.index].pos;
}

std::vector<Position> Warehouse::shelf_positions() const {
  std::vector<Position> out;
  out.reserve(shelves.size());
  for (const auto& s : shelves) out.push_back(shelf_position(s.id));
  return out;
}

std::vector<Position> Warehouse::workstation_positions() const {
  std::vector<Position> out;
  out.reserve(workstations.size());
  for (const auto& w : workstations) out.push_back(w.site.pos);
  return out;
}

void Warehouse::add_task(Task t) {
  auto col = available.col(t.shelf);
  if (!t.from_soft) {
    if (!can_fulfill(col, t.items)) {
      throw InvariantError("add_task: shelf " + std::to_string(t.shelf) +
                           " cannot cover the reserved items");
    }
    col -= t.items;
    orders[t.order].unreserved -= t.items.sum();
  }
  workstations[t.workstation].workload += t.items.sum();
  shelves[t.shelf].tasks.push_back(std::move(t));
}

void Warehouse::release_task(const Task& t) {
  available.col(t.shelf) += t.items;
  orders[t.order].unreserved += t.items.sum();
  workstations[t.workstation].workload -= t.items.sum();
}

void Warehouse::check_invariants() const {
  if ((physical.array() < 0).any()) throw InvariantError("negative physical inventory");
  if ((available.array() < 0).any()) throw InvariantError("negative available inventory");
  if ((available.array() > physical.array()).any()) {
    throw InvariantError("available inventory exceeds physical inventory");
  }
  const ItemVector on_shelves = physical.rowwise().sum();
  if (on_shelves + picked != initial_total) throw InvariantError("item conservation violated");
  for (const auto& w : workstations) {
    if (w.workload < 0) throw InvariantError("negative workstation workload");
  }
}

}  // namespace rmfs
