#include "rmfs/tsp.hpp"

#include <algorithm>
#include <limits>

namespace rmfs {

long path_cost(Position start, std::span<const Position> stops, std::span<const int> order) {
  long cost = 0;
  Position at = start;
  for (int i : order) {
    cost += manhattan_dist(at, stops[static_cast<std::size_t>(i)]);
    at = stops[static_cast<std::size_t>(i)];
  }
  return cost;
}

Tour held_karp_path(Position start, std::span<const Position> stops) {
  const int n = static_cast<int>(stops.size());
  if (n > 16) throw InputError("held_karp_path: too many stops for the exact solver");
  Tour tour;
  if (n == 0) return tour;
  const long inf = std::numeric_limits<long>::max() / 4;
  const std::size_t full = (std::size_t{1} << n);
  // best[mask][j]: cheapest path from `start` covering `mask`, ending at j, and the
  // cheapest completion cost from that state (computed backwards so the forward
  // reconstruction can take the lowest index among optimal continuations).
  std::vector<long> rest(full * n, inf);
  auto dist = [&](int a, int b) { return static_cast<long>(manhattan_dist(stops[a], stops[b])); };
  for (int j = 0; j < n; ++j) rest[(full - 1) * n + j] = 0;
  for (std::size_t mask = full - 1; mask-- > 1;) {
    for (int j = 0; j < n; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      long best = inf;
      for (int k = 0; k < n; ++k) {
        if (mask & (std::size_t{1} << k)) continue;
        best = std::min(best, dist(j, k) + rest[(mask | (std::size_t{1} << k)) * n + k]);
      }
      rest[mask * n + j] = best;
    }
  }
  long best = inf;
  int first = -1;
  for (int j = 0; j < n; ++j) {
    const long c = manhattan_dist(start, stops[j]) + rest[(std::size_t{1} << j) * n + j];
    if (c < best) {
      best = c;
      first = j;
    }
  }
  tour.cost = best;
  std::size_t mask = std::size_t{1} << first;
  int at = first;
  tour.order.push_back(first);
  while (mask != full - 1) {
    for (int k = 0; k < n; ++k) {
      if (mask & (std::size_t{1} << k)) continue;
      const std::size_t next = mask | (std::size_t{1} << k);
      if (dist(at, k) + rest[next * n + k] == rest[mask * n + at]) {
        tour.order.push_back(k);
        mask = next;
        at = k;
        break;
      }
    }
  }
  return tour;
}

Tour nearest_neighbor_path(Position start, std::span<const Position> stops) {
  const int n = static_cast<int>(stops.size());
  Tour tour;
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  Position at = start;
  for (int step = 0; step < n; ++step) {
    int pick = -1;
    int pick_d = 0;
    for (int j = 0; j < n; ++j) {
      if (seen[j]) continue;
      const int d = manhattan_dist(at, stops[j]);
      if (pick < 0 || d < pick_d) {
        pick = j;
        pick_d = d;
      }
    }
    seen[pick] = 1;
    tour.order.push_back(pick);
    tour.cost += pick_d;
    at = stops[pick];
  }
  return tour;
}

Tour two_opt_path(Position start, std::span<const Position> stops, Tour tour) {
  const int n = static_cast<int>(tour.order.size());
  auto pos = [&](int i) { return i < 0 ? start : stops[tour.order[i]]; };
  bool improved = true;
  while (improved) {
    improved = false;
    // Reverse order[i..j]; the path is open, so reversing a suffix removes only one edge.
    for (int i = 0; i < n - 1 && !improved; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const long before = manhattan_dist(pos(i - 1), pos(i)) +
                            (j + 1 < n ? manhattan_dist(pos(j), pos(j + 1)) : 0);
        const long after = manhattan_dist(pos(i - 1), pos(j)) +
                           (j + 1 < n ? manhattan_dist(pos(i), pos(j + 1)) : 0);
        if (after < before) {
          std::reverse(tour.order.begin() + i, tour.order.begin() + j + 1);
          improved = true;
          break;
        }
      }
    }
  }
  tour.cost = path_cost(start, stops, tour.order);
  return tour;
}

Tour plan_path(Position start, std::span<const Position> stops, int exact_limit) {
  if (static_cast<int>(stops.size()) <= exact_limit) return held_karp_path(start, stops);
  return two_opt_path(start, stops, nearest_neighbor_path(start, stops));
}

}  // namespace rmfs
