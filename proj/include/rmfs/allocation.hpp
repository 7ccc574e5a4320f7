#pragma once

// Order allocators that commit an order to a workstation and shelves at arrival (or, for the
// batch solver, at pool flush). The soft mechanism lives in soft_alloc/finalizer.

#include "rmfs/datagen.hpp"
#include "rmfs/finalizer.hpp"
#include "rmfs/warehouse.hpp"

#include <Eigen/Core>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rmfs {

enum class AllocatorKind : std::uint8_t { Soft, SQF, WLB, CP, Random };

const char* to_string(AllocatorKind k);
/// Accepts soft, sqf, wlb, cp, random; throws InputError otherwise.
AllocatorKind allocator_from_string(const std::string& s);

/// argmin of the queue-clear times, ties to the lower id.
WorkstationId sqf_allocate(std::span<const double> clear_times);
/// argmin of the workloads u_w, ties to the lower id.
WorkstationId wlb_allocate(std::span<const int> workloads);

/// Uniform workstation, then uniformly chosen shelves with positive overlap until covered.
std::vector<Task> random_allocate(Warehouse& world, OrderId order, Rng& rng);

// Batch (rolling-horizon) allocation -------------------------------------------------------

/// Static batch model: demand R (N_k x |O|), inventory I (N_k x |S|), distances D (|S| x |W|).
struct CpProblem {
  Eigen::MatrixXi demand;
  Eigen::MatrixXi inventory;
  Eigen::MatrixXi distance;

  int num_orders() const { return static_cast<int>(demand.cols()); }
  int num_shelves() const { return static_cast<int>(inventory.cols()); }
  int num_workstations() const { return static_cast<int>(distance.cols()); }
  void validate() const;
};

struct CpPick {
  int order = 0;
  int shelf = 0;
  ItemVector items;
};

struct CpSolution {
  std::vector<int> assignment;  // y: order -> workstation
  Eigen::MatrixXi visits;       // z: |S| x |W| in {0,1}
  std::vector<CpPick> picks;    // x, nonzero entries only
  long objective = 0;
  bool optimal = false;         // search finished within the node budget
  long nodes = 0;
};

struct CpOptions {
  long node_budget = 50000;
};

/// Pick quantities x for fixed (y, z) by per-item max-flow, or nullopt if none exists.
std::optional<std::vector<CpPick>> cp_picks_for(const CpProblem& p, std::span<const int> assignment,
                                                const Eigen::MatrixXi& visits);

/// Greedy incumbent: orders in index order, each to the workstation with the cheapest
/// incremental visit cost under argmax-matching shelf selection. nullopt if the batch is
/// not coverable.
std::optional<CpSolution> cp_greedy(const CpProblem& p);

/// Branch-and-bound over assignments y and visit sets z (pairs in ascending distance),
/// seeded by the greedy incumbent. `optimal` is false when the budget ran out; the best
/// solution found is still returned. nullopt only if the batch is infeasible.
std::optional<CpSolution> cp_solve(const CpProblem& p, const CpOptions& options = {});

struct CpBatchResult {
  std::vector<Task> tasks;
  CpSolution solution;
  std::vector<OrderId> fallback;  // orders handed to default_allocate
};

/// Solves the pooled batch against the live world and reserves the resulting tasks. Only
/// shelves holding at least one demanded item enter the model.
CpBatchResult cp_allocate(Warehouse& world, std::span<const OrderId> batch,
                          const CpOptions& options = {});

}  // namespace rmfs
