#include "rmfs/soft_alloc.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>

using namespace rmfs;
using rmfs::testing::items;

using namespace rmfs::testing;

TEST_CASE("matching degree examples") {
  CHECK(matching_degree(items({0, 0}), items({9, 9}), 5) == 0.0);
  CHECK(matching_degree(items({2, 0, 1}), items({1, 5, 4}), 3) == doctest::Approx(2.0 / 3.000001).epsilon(1e-12));
  CHECK(matching_degree(items({1}), items({1}), 0) == doctest::Approx(1e6));
  CHECK_THROWS_AS(matching_degree(items({1}), items({1, 1}), 1), InputError);
}

TEST_CASE("matching degree is monotone in relevant inventory") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> q(0, 5);
  for (int i = 0; i < 500; ++i) {
    ItemVector d(3), inv(3);
    for (int k = 0; k < 3; ++k) {
      d[k] = q(rng);
      inv[k] = q(rng);
    }
    ItemVector more = inv;
    more[q(rng) % 3] += 1;
    CHECK(matching_degree(d, more, 4) >= matching_degree(d, inv, 4));
  }
}

TEST_CASE("matching matrix column per shelf") {
  Eigen::MatrixXi inv(1, 2);
  inv << 1, 1;
  std::vector<Position> shelves{{1, 0}, {3, 0}};
  std::vector<Position> ws{{0, 0}};
  const auto m = build_matching_matrix(items({1}), inv, shelves, ws);
  CHECK(m(0, 0) == 1.0 / (1 + 1e-6));
  CHECK(m(1, 0) == 1.0 / (3 + 1e-6));
  Eigen::MatrixXi none(1, 1);
  none << 0;
  std::vector<Position> one{{2, 2}};
  CHECK(build_matching_matrix(items({1}), none, one, ws).isZero());
}

TEST_CASE("top-k examples") {
  Eigen::VectorXd a(4);
  a << 0.5, 0.9, 0.9, 0.1;
  CHECK(topk_candidates(a, 2) == std::vector<ShelfId>{1, 2});
  CHECK(topk_candidates(Eigen::VectorXd::Zero(3), 3).empty());
  Eigen::VectorXd b(1);
  b << 0.2;
  CHECK(topk_candidates(b, 5) == std::vector<ShelfId>{0});
  CHECK_THROWS_AS(topk_candidates(b, 0), InputError);
}

TEST_CASE("top-k equals a brute-force sort on random columns") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> len(1, 500), kk(1, 40);
  for (int trial = 0; trial < 300; ++trial) {
    const auto m = random_matching(rng, len(rng), 1);
    const int k = kk(rng);
    REQUIRE(topk_candidates(m.col(0), k) == brute_topk(m.col(0), k));
  }
}

TEST_CASE("arrival adds the hand-computed contributions") {
  SoftAllocState st(3, 1);
  Eigen::MatrixXd m(3, 1);
  m << 0.9, 0.5, 0.0;
  const auto& rec = st.apply_arrival(7, m, 2);
  CHECK(rec.per_workstation[0].size() == 2);
  CHECK(st.shelf_heat()[0] == 0.9);
  CHECK(st.shelf_heat()[1] == 0.5);
  CHECK(st.shelf_heat()[2] == 0.0);
  CHECK(st.workstation_heat()[0] == doctest::Approx(1.4));
  CHECK(st.soft_orders(0) == std::vector<OrderId>{7});
  CHECK(st.soft_orders(2).empty());
  CHECK_THROWS_AS(st.apply_arrival(7, m, 2), InputError);

  SoftAllocState two(1, 2);
  Eigen::MatrixXd shared(1, 2);
  shared << 0.3, 0.4;
  two.apply_arrival(0, shared, 1);
  CHECK(two.shelf_heat()[0] == doctest::Approx(0.7));
}

TEST_CASE("order with no overlap leaves the state unchanged") {
  SoftAllocState st(2, 2);
  const auto& rec = st.apply_arrival(1, Eigen::MatrixXd::Zero(2, 2), 3);
  CHECK(rec.empty());
  CHECK(st.shelf_heat().isZero());
  CHECK(st.workstation_heat().isZero());
  st.retract_order(1);
  CHECK(st.live_count() == 0);
  CHECK_THROWS_AS(st.retract_order(1), InputError);
}

TEST_CASE("immediate retraction is bit exact") {
  std::mt19937 rng(3);
  SoftAllocState st(40, 3);
  for (int o = 0; o < 20; ++o) st.apply_arrival(o, random_matching(rng, 40, 3), 5);
  const Eigen::VectorXd hs = st.shelf_heat(), hw = st.workstation_heat();
  std::vector<std::vector<OrderId>> sets;
  for (int s = 0; s < 40; ++s) sets.push_back(st.soft_orders(s));
  for (int o = 100; o < 150; ++o) {
    st.apply_arrival(o, random_matching(rng, 40, 3), 5);
    st.retract_order(o);
    for (int s = 0; s < 40; ++s) {
      REQUIRE(st.shelf_heat()[s] == hs[s]);
      REQUIRE(st.soft_orders(s) == sets[static_cast<std::size_t>(s)]);
    }
    for (int w = 0; w < 3; ++w) REQUIRE(st.workstation_heat()[w] == hw[w]);
  }
}

TEST_CASE("retracting the middle of three orders equals applying the other two") {
  std::mt19937 rng(9);
  const auto m1 = random_matching(rng, 12, 2), m2 = random_matching(rng, 12, 2),
             m3 = random_matching(rng, 12, 2);
  SoftAllocState a(12, 2), b(12, 2);
  a.apply_arrival(1, m1, 3);
  a.apply_arrival(2, m2, 3);
  a.apply_arrival(3, m3, 3);
  a.retract_order(2);
  b.apply_arrival(1, m1, 3);
  b.apply_arrival(3, m3, 3);
  CHECK((a.shelf_heat() - b.shelf_heat()).cwiseAbs().maxCoeff() <= 1e-9);
  CHECK((a.workstation_heat() - b.workstation_heat()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("random apply/retract sequences match a from-scratch recomputation") {
  std::mt19937 rng(21);
  for (int seq = 0; seq < 100; ++seq) {
    const int ns = 5 + static_cast<int>(rng() % 60), nw = 1 + static_cast<int>(rng() % 4);
    const int k = 1 + static_cast<int>(rng() % 8);
    SoftAllocState st(ns, nw);
    std::map<OrderId, Eigen::MatrixXd> live;
    OrderId next = 0;
    for (int op = 0; op < 40; ++op) {
      if (live.empty() || rng() % 3 != 0) {
        auto m = random_matching(rng, ns, nw);
        st.apply_arrival(next, m, k);
        live.emplace(next++, std::move(m));
      } else {
        auto it = live.begin();
        std::advance(it, static_cast<long>(rng() % live.size()));
        st.retract_order(it->first);
        live.erase(it);
      }
    }
    const auto r = recompute(live, ns, nw, k);
    REQUIRE((st.shelf_heat() - r.hs).cwiseAbs().maxCoeff() <= 1e-9);
    REQUIRE((st.workstation_heat() - r.hw).cwiseAbs().maxCoeff() <= 1e-9);
    for (int s = 0; s < ns; ++s) {
      const auto got = st.soft_orders(s);
      REQUIRE(std::set<OrderId>(got.begin(), got.end()) == r.sets[static_cast<std::size_t>(s)]);
    }
    // Each live order sits in at most N_w * K soft sets.
    for (const auto& [o, rec] : st.records()) {
      REQUIRE(rec.all_candidates().size() <= static_cast<std::size_t>(nw * k));
    }
  }
}
