#include "rmfs/core.hpp"

#include <cstdlib>

namespace rmfs {

namespace {

void require_same_length(const ItemVector& a, const ItemVector& b, const char* what) {
  if (a.size() != b.size()) {
    throw InputError(std::string(what) + ": item vector length mismatch (" +
                     std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace

GridMap::GridMap(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw InputError("grid dimensions must be positive");
  }
  cells_.assign(static_cast<std::size_t>(height) * width, CellKind::Aisle);
}

CellKind GridMap::at(Position p) const {
  if (!in_bounds(p)) throw InputError("grid position out of bounds");
  return cells_[static_cast<std::size_t>(p.y) * width_ + p.x];
}

void GridMap::place(Position p, CellKind kind) {
  if (!in_bounds(p)) {
    throw InputError("fixed entity at (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                     ") is outside the grid");
  }
  auto& cell = cells_[static_cast<std::size_t>(p.y) * width_ + p.x];
  if (cell != CellKind::Aisle) {
    throw InputError("two fixed entities share cell (" + std::to_string(p.x) + "," +
                     std::to_string(p.y) + ")");
  }
  cell = kind;
}

int manhattan_dist(Position a, Position b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

int manhattan_dist(const GridMap& grid, Position a, Position b) {
  if (!grid.in_bounds(a) || !grid.in_bounds(b)) {
    throw InputError("manhattan_dist: position out of bounds");
  }
  return manhattan_dist(a, b);
}

bool can_fulfill(const ItemVector& inventory, const ItemVector& demand) {
  require_same_length(inventory, demand, "can_fulfill");
  return (inventory.array() >= demand.array()).all();
}

ItemVector subtract_demand(const ItemVector& inventory, const ItemVector& demand) {
  if (!can_fulfill(inventory, demand)) {
    throw InvariantError("subtract_demand: demand exceeds inventory");
  }
  return inventory - demand;
}

PartialTake partial_take(const ItemVector& inventory, const ItemVector& demand) {
  require_same_length(inventory, demand, "partial_take");
  PartialTake r;
  r.taken = inventory.cwiseMin(demand);
  r.inventory = inventory - r.taken;
  r.demand = demand - r.taken;
  return r;
}

const char* to_string(RobotStatus s) {
  switch (s) {
    case RobotStatus::Idle: return "IDLE";
    case RobotStatus::MovingToPick: return "MOVING_TO_PICK";
    case RobotStatus::MovingToWorkstation: return "MOVING_TO_WS";
    case RobotStatus::Queued: return "QUEUED";
    case RobotStatus::MovingToReturn: return "MOVING_TO_RETURN";
  }
  return "?";
}

}  // namespace rmfs
