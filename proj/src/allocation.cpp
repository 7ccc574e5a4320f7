#include "rmfs/allocation.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>

namespace rmfs {

const char* to_string(AllocatorKind k) {
  switch (k) {
    case AllocatorKind::Soft: return "soft";
    case AllocatorKind::SQF: return "sqf";
    case AllocatorKind::WLB: return "wlb";
    case AllocatorKind::CP: return "cp";
    case AllocatorKind::Random: return "random";
  }
  return "?";
}

AllocatorKind allocator_from_string(const std::string& s) {
  if (s == "soft") return AllocatorKind::Soft;
  if (s == "sqf") return AllocatorKind::SQF;
  if (s == "wlb") return AllocatorKind::WLB;
  if (s == "cp") return AllocatorKind::CP;
  if (s == "random") return AllocatorKind::Random;
  throw InputError("unknown allocator '" + s + "' (expected soft, sqf, wlb, cp or random)");
}

WorkstationId sqf_allocate(std::span<const double> clear_times) {
  if (clear_times.empty()) throw InputError("sqf_allocate: no workstations");
  return static_cast<WorkstationId>(std::min_element(clear_times.begin(), clear_times.end()) -
                                    clear_times.begin());
}

WorkstationId wlb_allocate(std::span<const int> workloads) {
  if (workloads.empty()) throw InputError("wlb_allocate: no workstations");
  return static_cast<WorkstationId>(std::min_element(workloads.begin(), workloads.end()) -
                                    workloads.begin());
}

std::vector<Task> random_allocate(Warehouse& world, OrderId order, Rng& rng) {
  auto& os = world.orders.at(order);
  ItemVector demand = os.order.demand;
  if (!can_fulfill(world.available.rowwise().sum(), demand)) {
    throw InfeasibleOrder("order " + std::to_string(order) + " exceeds unreserved inventory");
  }
  std::uniform_int_distribution<int> pick_ws(0, world.num_workstations() - 1);
  const WorkstationId w = pick_ws(rng);
  std::vector<Task> tasks;
  while (demand.sum() > 0) {
    const Eigen::VectorXi overlap = overlap_per_shelf(demand, world.available);
    std::vector<ShelfId> useful;
    for (ShelfId s = 0; s < world.num_shelves(); ++s) {
      if (overlap[s] > 0) useful.push_back(s);
    }
    std::uniform_int_distribution<std::size_t> pick(0, useful.size() - 1);
    const ShelfId s = useful[pick(rng)];
    auto take = partial_take(world.available.col(s), demand);
    demand = take.demand;
    Task t{s, w, take.taken, order, false};
    world.add_task(t);
    tasks.push_back(std::move(t));
  }
  os.workstation = w;
  os.status = OrderStatus::Allocated;
  return tasks;
}

// CP ---------------------------------------------------------------------------------------

void CpProblem::validate() const {
  if (demand.rows() != inventory.rows()) throw InputError("cp: item dimensions differ");
  if (distance.rows() != inventory.cols()) throw InputError("cp: distance rows != shelves");
  if (distance.cols() < 1) throw InputError("cp: no workstations");
  if ((demand.array() < 0).any() || (inventory.array() < 0).any() ||
      (distance.array() < 0).any()) {
    throw InputError("cp: negative entries");
  }
}

namespace {

// Edmonds-Karp on a dense capacity matrix; returns the flow matrix.
class MaxFlow {
 public:
  explicit MaxFlow(int n) : n_(n), cap_(n, n), flow_(n, n) {
    cap_.setZero();
    flow_.setZero();
  }
  void add(int u, int v, int c) { cap_(u, v) += c; }
  int run(int s, int t) {
    int total = 0;
    std::vector<int> parent(n_);
    while (true) {
      std::fill(parent.begin(), parent.end(), -1);
      parent[s] = s;
      std::deque<int> q{s};
      while (!q.empty() && parent[t] < 0) {
        const int u = q.front();
        q.pop_front();
        for (int v = 0; v < n_; ++v) {
          if (parent[v] < 0 && cap_(u, v) - flow_(u, v) > 0) {
            parent[v] = u;
            q.push_back(v);
          }
        }
      }
      if (parent[t] < 0) return total;
      int push = std::numeric_limits<int>::max();
      for (int v = t; v != s; v = parent[v]) push = std::min(push, cap_(parent[v], v) - flow_(parent[v], v));
      for (int v = t; v != s; v = parent[v]) {
        flow_(parent[v], v) += push;
        flow_(v, parent[v]) -= push;
      }
      total += push;
    }
  }
  int flow(int u, int v) const { return flow_(u, v); }

 private:
  int n_;
  Eigen::MatrixXi cap_;
  Eigen::MatrixXi flow_;
};

long visit_cost(const CpProblem& p, const Eigen::MatrixXi& visits) {
  return (p.distance.array() * visits.array()).sum();
}

bool picks_exist(const CpProblem& p, std::span<const int> assignment,
                 const Eigen::MatrixXi& visits, std::vector<CpPick>* out) {
  const int no = p.num_orders();
  const int ns = p.num_shelves();
  if (out) out->clear();
  std::vector<ItemVector> acc;  // per (order, shelf) when `out` is requested
  if (out) acc.assign(static_cast<std::size_t>(no) * ns, ItemVector::Zero(p.demand.rows()));
  std::vector<int> os;
  std::vector<int> ss;
  for (Eigen::Index k = 0; k < p.demand.rows(); ++k) {
    os.clear();
    ss.clear();
    int need = 0;
    for (int o = 0; o < no; ++o) {
      if (p.demand(k, o) > 0) {
        os.push_back(o);
        need += p.demand(k, o);
      }
    }
    if (need == 0) continue;
    int supply = 0;
    for (int s = 0; s < ns; ++s) {
      if (p.inventory(k, s) > 0) {
        ss.push_back(s);
        supply += p.inventory(k, s);
      }
    }
    if (supply < need) return false;
    // Nodes: 0 source, 1 sink, then the orders and shelves that touch item k.
    const int n_o = static_cast<int>(os.size());
    const int n_s = static_cast<int>(ss.size());
    MaxFlow mf(2 + n_o + n_s);
    for (int i = 0; i < n_o; ++i) {
      const int o = os[i];
      mf.add(0, 2 + i, p.demand(k, o));
      for (int j = 0; j < n_s; ++j) {
        if (visits(ss[j], assignment[o])) mf.add(2 + i, 2 + n_o + j, p.demand(k, o));
      }
    }
    for (int j = 0; j < n_s; ++j) mf.add(2 + n_o + j, 1, p.inventory(k, ss[j]));
    if (mf.run(0, 1) != need) return false;
    if (out) {
      for (int i = 0; i < n_o; ++i) {
        for (int j = 0; j < n_s; ++j) {
          const int f = mf.flow(2 + i, 2 + n_o + j);
          if (f > 0) acc[static_cast<std::size_t>(os[i]) * ns + ss[j]][k] = f;
        }
      }
    }
  }
  if (out) {
    for (int o = 0; o < no; ++o) {
      for (int s = 0; s < ns; ++s) {
        const auto& v = acc[static_cast<std::size_t>(o) * ns + s];
        if (v.sum() > 0) out->push_back({o, s, v});
      }
    }
  }
  return true;
}

// Overlap of order o's demand with shelf s's full inventory.
int overlap(const CpProblem& p, int o, int s) {
  return p.demand.col(o).cwiseMin(p.inventory.col(s)).sum();
}

class Search {
 public:
  Search(const CpProblem& p, const CpOptions& opt, CpSolution incumbent)
      : p_(p), opt_(opt), best_(std::move(incumbent)) {
    assignment_.assign(p.num_orders(), 0);
    useful_.resize(p.num_orders());
    for (int o = 0; o < p.num_orders(); ++o) {
      for (int s = 0; s < p.num_shelves(); ++s) {
        if (overlap(p, o, s) > 0) useful_[o].push_back(s);
      }
    }
  }

  CpSolution run() {
    ws_shelves_.assign(p_.num_workstations(), std::vector<int>(p_.num_shelves(), 0));
    assign(0);
    best_.optimal = !out_of_budget_;
    best_.nodes = nodes_;
    return best_;
  }

 private:
  bool tick() {
    if (++nodes_ > opt_.node_budget) out_of_budget_ = true;
    return !out_of_budget_;
  }

  // Lower bound of the visits implied by the partial assignment: every used workstation needs
  // at least one visit from a shelf that overlaps one of its orders, and those pairs differ.
  long assignment_bound() const {
    long lb = 0;
    for (int w = 0; w < p_.num_workstations(); ++w) {
      int best = -1;
      for (int s = 0; s < p_.num_shelves(); ++s) {
        if (ws_shelves_[w][s] > 0 && (best < 0 || p_.distance(s, w) < best)) best = p_.distance(s, w);
      }
      if (best > 0) lb += best;
    }
    return lb;
  }

  void assign(int o) {
    if (!tick()) return;
    if (assignment_bound() >= best_.objective) return;
    if (o == p_.num_orders()) {
      visits_search();
      return;
    }
    for (int w = 0; w < p_.num_workstations() && !out_of_budget_; ++w) {
      assignment_[o] = w;
      for (int s : useful_[o]) ++ws_shelves_[w][s];
      assign(o + 1);
      for (int s : useful_[o]) --ws_shelves_[w][s];
    }
  }

  void visits_search() {
    pairs_.clear();
    for (int w = 0; w < p_.num_workstations(); ++w) {
      for (int s = 0; s < p_.num_shelves(); ++s) {
        if (ws_shelves_[w][s] > 0) pairs_.emplace_back(s, w);
      }
    }
    std::sort(pairs_.begin(), pairs_.end(), [&](const auto& a, const auto& b) {
      const int da = p_.distance(a.first, a.second);
      const int db = p_.distance(b.first, b.second);
      if (da != db) return da < db;
      return a < b;
    });
    used_.assign(p_.num_workstations(), 0);
    for (int o = 0; o < p_.num_orders(); ++o) {
      if (p_.demand.col(o).sum() > 0) used_[assignment_[o]] = 1;
    }
    covered_.assign(p_.num_workstations(), 0);
    visits_ = Eigen::MatrixXi::Zero(p_.num_shelves(), p_.num_workstations());
    choose(0, 0);
  }

  bool feasible_with_rest(std::size_t from) {
    Eigen::MatrixXi all = visits_;
    for (std::size_t j = from; j < pairs_.size(); ++j) all(pairs_[j].first, pairs_[j].second) = 1;
    return picks_exist(p_, assignment_, all, nullptr);
  }

  void choose(std::size_t i, long cost) {
    if (!tick()) return;
    long lb = cost;
    for (int w = 0; w < p_.num_workstations(); ++w) {
      if (!used_[w] || covered_[w] > 0) continue;
      int best = -1;
      for (std::size_t j = i; j < pairs_.size(); ++j) {
        if (pairs_[j].second == w) {
          best = p_.distance(pairs_[j].first, w);
          break;  // pairs are sorted by distance
        }
      }
      if (best < 0) return;
      lb += best;
    }
    if (lb >= best_.objective) return;
    if (picks_exist(p_, assignment_, visits_, nullptr)) {
      best_.objective = cost;
      best_.assignment = assignment_;
      best_.visits = visits_;
      return;
    }
    if (i == pairs_.size() || !feasible_with_rest(i)) return;
    const auto [s, w] = pairs_[i];
    visits_(s, w) = 1;
    ++covered_[w];
    choose(i + 1, cost + p_.distance(s, w));
    visits_(s, w) = 0;
    --covered_[w];
    choose(i + 1, cost);
  }

  const CpProblem& p_;
  const CpOptions& opt_;
  CpSolution best_;
  std::vector<int> assignment_;
  std::vector<std::vector<int>> useful_;
  std::vector<std::vector<int>> ws_shelves_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> used_;
  std::vector<int> covered_;
  Eigen::MatrixXi visits_;
  long nodes_ = 0;
  bool out_of_budget_ = false;
};

}  // namespace

std::optional<std::vector<CpPick>> cp_picks_for(const CpProblem& p, std::span<const int> assignment,
                                                const Eigen::MatrixXi& visits) {
  if (static_cast<int>(assignment.size()) != p.num_orders()) {
    throw InputError("cp_picks_for: assignment length mismatch");
  }
  std::vector<CpPick> out;
  if (!picks_exist(p, assignment, visits, &out)) return std::nullopt;
  return out;
}

std::optional<CpSolution> cp_greedy(const CpProblem& p) {
  p.validate();
  const int ns = p.num_shelves();
  const int nw = p.num_workstations();
  Eigen::MatrixXi avail = p.inventory;
  CpSolution sol;
  sol.visits = Eigen::MatrixXi::Zero(ns, nw);
  for (int o = 0; o < p.num_orders(); ++o) {
    long best_cost = std::numeric_limits<long>::max();
    int best_w = -1;
    std::vector<CpPick> best_picks;
    Eigen::MatrixXi best_avail;
    for (int w = 0; w < nw; ++w) {
      Eigen::MatrixXi av = avail;
      ItemVector demand = p.demand.col(o);
      std::vector<CpPick> picks;
      long cost = 0;
      while (demand.sum() > 0) {
        const Eigen::VectorXi ov = overlap_per_shelf(demand, av);
        int pick = -1;
        double pick_v = 0.0;
        for (int s = 0; s < ns; ++s) {
          if (ov[s] == 0) continue;
          const int d = sol.visits(s, w) ? 0 : p.distance(s, w);
          const double v = ov[s] / (d + kMatchEpsilon);
          if (v > pick_v) {
            pick_v = v;
            pick = s;
          }
        }
        if (pick < 0) break;
        auto take = partial_take(av.col(pick), demand);
        av.col(pick) = take.inventory;
        demand = take.demand;
        bool seen = false;
        for (const auto& pk : picks) seen = seen || pk.shelf == pick;
        if (!seen && !sol.visits(pick, w)) cost += p.distance(pick, w);
        picks.push_back({o, pick, take.taken});
      }
      if (demand.sum() > 0) return std::nullopt;
      if (cost < best_cost) {
        best_cost = cost;
        best_w = w;
        best_picks = std::move(picks);
        best_avail = std::move(av);
      }
    }
    sol.assignment.push_back(best_w);
    for (const auto& pk : best_picks) sol.visits(pk.shelf, best_w) = 1;
    avail = std::move(best_avail);
    for (auto& pk : best_picks) sol.picks.push_back(std::move(pk));
  }
  sol.objective = visit_cost(p, sol.visits);
  return sol;
}

std::optional<CpSolution> cp_solve(const CpProblem& p, const CpOptions& options) {
  p.validate();
  auto greedy = cp_greedy(p);
  if (!greedy) {
    // The greedy cover fails only when some item is short in aggregate.
    const ItemVector need = p.demand.rowwise().sum();
    const ItemVector have = p.inventory.rowwise().sum();
    if (!can_fulfill(have, need)) return std::nullopt;
    throw InvariantError("cp_solve: greedy cover failed on a coverable batch");
  }
  const long greedy_objective = greedy->objective;
  Search search(p, options, *greedy);
  CpSolution sol = search.run();
  if (sol.objective < greedy_objective) {
    auto picks = cp_picks_for(p, sol.assignment, sol.visits);
    if (!picks) throw InvariantError("cp_solve: accepted visit set has no pick plan");
    sol.picks = std::move(*picks);
  }
  return sol;
}

CpBatchResult cp_allocate(Warehouse& world, std::span<const OrderId> batch,
                          const CpOptions& options) {
  CpBatchResult res;
  if (batch.empty()) return res;
  const int nk = world.num_items;
  Eigen::MatrixXi demand(nk, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& os = world.orders.at(batch[i]);
    if (os.unreserved != os.order.demand.sum()) {
      throw InvariantError("cp_allocate: order " + std::to_string(batch[i]) + " partially reserved");
    }
    demand.col(static_cast<Eigen::Index>(i)) = os.order.demand;
  }
  const ItemVector total = demand.rowwise().sum();
  std::vector<ShelfId> shelves;
  for (ShelfId s = 0; s < world.num_shelves(); ++s) {
    if (world.available.col(s).cwiseMin(total).sum() > 0) shelves.push_back(s);
  }
  CpProblem p;
  p.demand = demand;
  p.inventory.resize(nk, static_cast<Eigen::Index>(shelves.size()));
  p.distance.resize(static_cast<Eigen::Index>(shelves.size()), world.num_workstations());
  for (std::size_t j = 0; j < shelves.size(); ++j) {
    p.inventory.col(static_cast<Eigen::Index>(j)) = world.available.col(shelves[j]);
    const Position sp = world.shelf_position(shelves[j]);
    for (WorkstationId w = 0; w < world.num_workstations(); ++w) {
      p.distance(static_cast<Eigen::Index>(j), w) = manhattan_dist(sp, world.workstations[w].site.pos);
    }
  }

  auto sol = cp_solve(p, options);
  if (!sol) {
    // Aggregate shortfall: allocate order by order, least-loaded workstation first.
    for (OrderId o : batch) {
      std::vector<int> loads;
      for (const auto& w : world.workstations) loads.push_back(w.workload);
      try {
        auto tasks = default_allocate(world, o, wlb_allocate(loads));
        res.tasks.insert(res.tasks.end(), tasks.begin(), tasks.end());
      } catch (const InfeasibleOrder&) {
        world.orders[o].status = OrderStatus::Infeasible;
      }
      res.fallback.push_back(o);
    }
    return res;
  }
  for (const auto& pk : sol->picks) {
    const OrderId o = batch[static_cast<std::size_t>(pk.order)];
    Task t{shelves[static_cast<std::size_t>(pk.shelf)], sol->assignment[pk.order], pk.items, o, false};
    world.add_task(t);
    res.tasks.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& os = world.orders[batch[i]];
    os.workstation = sol->assignment[i];
    os.status = OrderStatus::Allocated;
  }
  res.solution = std::move(*sol);
  return res;
}

}  // namespace rmfs
