#pragma once

// Open-path tours (no return leg) from a start cell through a set of stops, Manhattan metric.

#include "rmfs/core.hpp"

#include <span>
#include <vector>

namespace rmfs {

struct Tour {
  std::vector<int> order;  // indices into the stop list, visiting order
  long cost = 0;
};

long path_cost(Position start, std::span<const Position> stops, std::span<const int> order);

/// Exact minimum path by Held-Karp DP; ties resolve toward lexicographically smaller orders.
/// Throws InputError above 16 stops.
Tour held_karp_path(Position start, std::span<const Position> stops);

/// Nearest-neighbour construction (ties to the lower index) followed by 2-opt to a local optimum.
Tour nearest_neighbor_path(Position start, std::span<const Position> stops);
Tour two_opt_path(Position start, std::span<const Position> stops, Tour tour);

/// Exact when there are at most `exact_limit` stops, otherwise nearest neighbour + 2-opt.
Tour plan_path(Position start, std::span<const Position> stops, int exact_limit = 10);

}  // namespace rmfs
