#include "rmfs/tsp.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace rmfs;

namespace {

long brute_force_path(Position start, const std::vector<Position>& stops) {
  std::vector<int> perm(stops.size());
  std::iota(perm.begin(), perm.end(), 0);
  long best = -1;
  do {
    const long c = path_cost(start, stops, perm);
    if (best < 0 || c < best) best = c;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

std::vector<Position> random_stops(std::mt19937& rng, int n) {
  std::uniform_int_distribution<int> c(0, 30);
  std::vector<Position> out;
  for (int i = 0; i < n; ++i) out.push_back({c(rng), c(rng)});
  return out;
}

bool is_permutation_of(const std::vector<int>& order, std::size_t n) {
  std::vector<int> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != static_cast<int>(i)) return false;
  }
  return sorted.size() == n;
}

}  // namespace

TEST_CASE("path cost sums Manhattan legs") {
  const std::vector<Position> stops{{0, 2}, {3, 2}};
  CHECK(path_cost({0, 0}, stops, std::vector<int>{0, 1}) == 5);
  CHECK(path_cost({0, 0}, stops, std::vector<int>{1, 0}) == 8);
}

TEST_CASE("exact path beats greedy where greedy is short-sighted") {
  const std::vector<Position> stops{{1, 0}, {-2, 0}, {5, 0}};
  const auto exact = held_karp_path({0, 0}, stops);
  CHECK(exact.cost == 9);
  CHECK(exact.order.front() == 1);
  CHECK(nearest_neighbor_path({0, 0}, stops).cost >= 9);

  const std::vector<Position> line{{0, 2}, {0, -1}, {0, 3}};
  const auto t = held_karp_path({0, 0}, line);
  CHECK(t.cost == 5);
  CHECK(t.order == std::vector<int>{1, 0, 2});
}

TEST_CASE("single stop and empty stop sets") {
  const std::vector<Position> one{{4, 4}};
  CHECK(held_karp_path({0, 0}, one).order == std::vector<int>{0});
  CHECK(plan_path({0, 0}, one).cost == 8);
  CHECK(plan_path({0, 0}, std::vector<Position>{}).order.empty());
}

TEST_CASE("ties resolve toward the lexicographically smaller order") {
  const std::vector<Position> sym{{1, 0}, {-1, 0}};
  CHECK(held_karp_path({0, 0}, sym).order == std::vector<int>{0, 1});
}

TEST_CASE("Held-Karp equals brute force on random instances") {
  std::mt19937 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto stops = random_stops(rng, 1 + i % 7);
    const Position start{static_cast<int>(rng() % 31), static_cast<int>(rng() % 31)};
    const auto t = held_karp_path(start, stops);
    REQUIRE(is_permutation_of(t.order, stops.size()));
    REQUIRE(t.cost == path_cost(start, stops, t.order));
    REQUIRE(t.cost == brute_force_path(start, stops));
  }
  CHECK_THROWS_AS(held_karp_path({0, 0}, random_stops(rng, 17)), InputError);
}

TEST_CASE("exact tours are never worse than nearest neighbour + 2-opt") {
  std::mt19937 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto stops = random_stops(rng, 2 + i % 9);
    const Position start{0, 0};
    const auto exact = held_karp_path(start, stops);
    const auto heuristic = nearest_neighbor_path(start, stops);
    REQUIRE(is_permutation_of(heuristic.order, stops.size()));
    REQUIRE(heuristic.cost == path_cost(start, stops, heuristic.order));
    REQUIRE(exact.cost <= heuristic.cost);
  }
}

TEST_CASE("plan switches to the heuristic above the exact limit") {
  std::mt19937 rng(6);
  const auto stops = random_stops(rng, 40);
  const auto t = plan_path({0, 0}, stops);
  CHECK(is_permutation_of(t.order, 40));
  CHECK(t.cost == path_cost({0, 0}, stops, t.order));
  const auto improved = two_opt_path({0, 0}, stops, t);
  CHECK(improved.cost == t.cost);  // already 2-opt optimal
}
