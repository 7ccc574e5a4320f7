#pragma once

// Independent reference for the batch allocation model: brute-force enumeration of every
// assignment and visit set, with pick feasibility decided by Hall's condition per item type.

#include "rmfs/allocation.hpp"

#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rmfs::testing {

// For one item, the visit pattern is feasible iff every subset A of demanding orders can be
// served: sum of demand over A <= stock of shelves reachable from A.
inline bool hall_feasible(const CpProblem& p, const std::vector<int>& y,
                          const std::vector<std::vector<bool>>& z) {
  const int no = p.num_orders(), ns = p.num_shelves();
  for (Eigen::Index k = 0; k < p.demand.rows(); ++k) {
    for (int a = 1; a < (1 << no); ++a) {
      long need = 0;
      long have = 0;
      for (int o = 0; o < no; ++o) {
        if (a >> o & 1) need += p.demand(k, o);
      }
      if (need == 0) continue;
      for (int s = 0; s < ns; ++s) {
        bool reach = false;
        for (int o = 0; o < no && !reach; ++o) reach = (a >> o & 1) && z[s][y[o]];
        if (reach) have += p.inventory(k, s);
      }
      if (need > have) return false;
    }
  }
  return true;
}

/// Minimum objective over all (y, z), or nullopt if nothing is feasible.
inline std::optional<long> brute_force_objective(const CpProblem& p) {
  const int no = p.num_orders(), ns = p.num_shelves(), nw = p.num_workstations();
  std::optional<long> best;
  std::vector<int> y(no, 0);
  while (true) {
    // Only pairs whose workstation is used can matter.
    std::vector<std::pair<int, int>> pairs;
    for (int w = 0; w < nw; ++w) {
      bool used = false;
      for (int o = 0; o < no; ++o) used |= y[o] == w;
      if (!used) continue;
      for (int s = 0; s < ns; ++s) pairs.emplace_back(s, w);
    }
    const int m = static_cast<int>(pairs.size());
    const int lo_bits = m / 2;
    std::vector<long> lo(1u << lo_bits, 0), hi(1u << (m - lo_bits), 0);
    for (unsigned mask = 0; mask < lo.size(); ++mask) {
      for (int i = 0; i < lo_bits; ++i) {
        if (mask >> i & 1) lo[mask] += p.distance(pairs[i].first, pairs[i].second);
      }
    }
    for (unsigned mask = 0; mask < hi.size(); ++mask) {
      for (int i = 0; i < m - lo_bits; ++i) {
        if (mask >> i & 1) hi[mask] += p.distance(pairs[lo_bits + i].first, pairs[lo_bits + i].second);
      }
    }
    std::vector<std::vector<bool>> z(ns, std::vector<bool>(nw, false));
    for (unsigned long mask = 0; mask < (1ul << m); ++mask) {
      const long cost = lo[mask & ((1ul << lo_bits) - 1)] + hi[mask >> lo_bits];
      if (best && cost >= *best) continue;
      for (int i = 0; i < m; ++i) z[pairs[i].first][pairs[i].second] = mask >> i & 1;
      if (hall_feasible(p, y, z)) best = cost;
    }
    int i = 0;
    while (i < no && ++y[i] == nw) y[i++] = 0;
    if (i == no) break;
  }
  return best;
}

/// Empty string when `sol` satisfies every constraint family and its objective is consistent.
inline std::string check_cp_solution(const CpProblem& p, const CpSolution& sol) {
  const int no = p.num_orders(), ns = p.num_shelves(), nw = p.num_workstations();
  const auto nk = p.demand.rows();
  if (static_cast<int>(sol.assignment.size()) != no) return "assignment length";
  for (int w : sol.assignment) {
    if (w < 0 || w >= nw) return "order assigned to no valid workstation";
  }
  if (sol.visits.rows() != ns || sol.visits.cols() != nw) return "visit matrix shape";
  Eigen::MatrixXi served = Eigen::MatrixXi::Zero(nk, no);
  Eigen::MatrixXi drawn = Eigen::MatrixXi::Zero(nk, ns);
  for (const auto& x : sol.picks) {
    if (x.order < 0 || x.order >= no || x.shelf < 0 || x.shelf >= ns) return "pick index";
    if ((x.items.array() < 0).any()) return "negative pick";
    if (x.items.sum() > 0 && sol.visits(x.shelf, sol.assignment[x.order]) != 1) {
      return "pick from a shelf that does not visit the order's workstation";
    }
    served.col(x.order) += x.items;
    drawn.col(x.shelf) += x.items;
  }
  if (served != p.demand) return "picks do not equal demand";
  if ((drawn.array() > p.inventory.array()).any()) return "picks exceed inventory";
  long obj = 0;
  for (int s = 0; s < ns; ++s) {
    for (int w = 0; w < nw; ++w) {
      if (sol.visits(s, w) != 0 && sol.visits(s, w) != 1) return "visit not binary";
      obj += static_cast<long>(sol.visits(s, w)) * p.distance(s, w);
    }
  }
  if (obj != sol.objective) return "objective mismatch";
  return {};
}

/// Random batch with |O| <= 4, |S| <= 6, |W| <= 3; feasible by construction when `feasible`.
inline CpProblem random_cp_problem(std::mt19937_64& rng, bool feasible = true) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int no = uni(1, 4), ns = uni(1, 6), nw = uni(1, 3), nk = uni(1, 3);
  CpProblem p;
  p.inventory = Eigen::MatrixXi::Zero(nk, ns);
  for (int s = 0; s < ns; ++s) {
    for (int k = 0; k < nk; ++k) p.inventory(k, s) = uni(0, 1) ? uni(1, 3) : 0;
  }
  p.demand = Eigen::MatrixXi::Zero(nk, no);
  Eigen::VectorXi left = p.inventory.rowwise().sum();
  for (int o = 0; o < no; ++o) {
    const int k = uni(0, nk - 1);
    int q = uni(1, 3);
    if (feasible) {
      if (left[k] == 0) {
        p.inventory(k, uni(0, ns - 1)) += q;
        left[k] += q;
      }
      q = std::min(q, left[k]);
      left[k] -= q;
    }
    p.demand(k, o) = q;
    if (uni(0, 3) == 0 && nk > 1) {
      const int k2 = (k + 1) % nk;
      if (!feasible || left[k2] > 0) {
        p.demand(k2, o) += 1;
        left[k2] -= feasible ? 1 : 0;
      }
    }
  }
  p.distance.resize(ns, nw);
  for (int s = 0; s < ns; ++s) {
    for (int w = 0; w < nw; ++w) p.distance(s, w) = uni(0, 12);
  }
  return p;
}

}  // namespace rmfs::testing
