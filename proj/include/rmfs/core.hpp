#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmfs {

// Errors ------------------------------------------------------------------

/// Caller supplied malformed or inconsistent input.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An internal invariant would be broken (never silently repaired).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Operation not allowed in the current simulation state.
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ids are dense indices into the owning vectors.
using ShelfId = int;
using LocationId = int;
using WorkstationId = int;
using RobotId = int;
using OrderId = int;

using Seconds = double;

/// Integer quantity per item type (demand d_o or inventory q_s).
using ItemVector = Eigen::VectorXi;

struct Position {
  int x = 0;
  int y = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

enum class CellKind : std::uint8_t { Aisle, Storage, Workstation };

/// H x W grid with a fixed-entity classification per cell.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  bool in_bounds(Position p) const {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }
  CellKind at(Position p) const;
  /// Marks a fixed entity; throws InputError if out of bounds or already taken.
  void place(Position p, CellKind kind);

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<CellKind> cells_;
};

/// |x_a - x_b| + |y_a - y_b|.
int manhattan_dist(Position a, Position b);
/// Bounds-checked variant; throws InputError if either position is outside the grid.
int manhattan_dist(const GridMap& grid, Position a, Position b);

bool can_fulfill(const ItemVector& inventory, const ItemVector& demand);

/// inventory - demand; throws InvariantError when the demand cannot be met.
ItemVector subtract_demand(const ItemVector& inventory, const ItemVector& demand);

struct PartialTake {
  ItemVector taken;
  ItemVector inventory;
  ItemVector demand;
};

/// Takes min(demand, inventory) per item (one step of the default allocator).
PartialTake partial_take(const ItemVector& inventory, const ItemVector& demand);

inline int total_items(const ItemVector& v) { return v.sum(); }

// Domain entities ---------------------------------------------------------

struct Order {
  OrderId id = 0;
  Seconds arrival = 0.0;
  ItemVector demand;
  std::optional<Seconds> completion;
};

struct StorageLocation {
  LocationId id = 0;
  Position pos;
  std::optional<ShelfId> occupant;
};

struct WorkstationSite {
  WorkstationId id = 0;
  Position pos;
};

enum class RobotStatus : std::uint8_t {
  Idle = 0,
  MovingToPick = 1,
  MovingToWorkstation = 2,
  Queued = 3,
  MovingToReturn = 4,
};

const char* to_string(RobotStatus s);

}  // namespace rmfs
