#pragma once

#include "rmfs/core.hpp"

#include <Eigen/Core>

#include <map>
#include <span>
#include <vector>

namespace rmfs {

inline constexpr double kMatchEpsilon = 1e-6;

/// Retrievable overlap per unit distance: sum_i min(d[i], q[i]) / (distance + eps).
double matching_degree(const ItemVector& demand, const ItemVector& inventory, double distance,
                       double epsilon = kMatchEpsilon);

/// Overlap sum_i min(d[i], Q(i, s)) for every shelf column of `inventories` (N_k x N_s).
Eigen::VectorXi overlap_per_shelf(const ItemVector& demand, const Eigen::MatrixXi& inventories);

/// N_s x N_w matrix of matching degrees for one order.
Eigen::MatrixXd build_matching_matrix(const ItemVector& demand, const Eigen::MatrixXi& inventories,
                                      std::span<const Position> shelf_positions,
                                      std::span<const Position> workstation_positions,
                                      double epsilon = kMatchEpsilon);

/// Shelves with the K largest strictly positive scores, descending, ties to the lower id.
std::vector<ShelfId> topk_candidates(const Eigen::Ref<const Eigen::VectorXd>& column, int k);

struct Candidate {
  ShelfId shelf = 0;
  double degree = 0.0;
};

/// Everything one order contributed to the soft state, kept so it can be removed exactly.
struct OrderSoftRecord {
  OrderId order = 0;
  /// C_w per workstation, in rank order, with the degree V_{s,w} frozen at arrival.
  std::vector<std::vector<Candidate>> per_workstation;
  /// Contribution to h^S per shelf of C_all, sorted by shelf id.
  std::vector<Candidate> shelf_contribution;
  /// Contribution to h^W per workstation (sum over C_w of V).
  std::vector<double> workstation_contribution;

  bool empty() const { return shelf_contribution.empty(); }
  std::vector<ShelfId> all_candidates() const;
};

/// Heat vectors, soft order sets and the per-order records behind them.
///
/// Heats are a pure function of the live record set: every affected entry is re-summed from
/// its live contributions in ascending order id, so an arrival followed by its retraction
/// restores the previous doubles bit for bit.
class SoftAllocState {
 public:
  SoftAllocState() = default;
  SoftAllocState(int num_shelves, int num_workstations);

  int num_shelves() const { return static_cast<int>(shelf_heat_.size()); }
  int num_workstations() const { return static_cast<int>(workstation_heat_.size()); }

  const OrderSoftRecord& apply_arrival(OrderId order, const Eigen::MatrixXd& matching, int k);
  const OrderSoftRecord& apply_arrival(const Order& order, const Eigen::MatrixXi& inventories,
                                       std::span<const Position> shelf_positions,
                                       std::span<const Position> workstation_positions, int k,
                                       double epsilon = kMatchEpsilon);

  void retract_order(OrderId order);

  const Eigen::VectorXd& shelf_heat() const { return shelf_heat_; }
  const Eigen::VectorXd& workstation_heat() const { return workstation_heat_; }

  /// O_s in ascending order id.
  std::vector<OrderId> soft_orders(ShelfId shelf) const;
  std::size_t soft_set_size(ShelfId shelf) const { return shelf_terms_.at(shelf).size(); }

  bool is_live(OrderId order) const { return records_.count(order) != 0; }
  const OrderSoftRecord* record(OrderId order) const;
  std::size_t live_count() const { return records_.size(); }
  const std::map<OrderId, OrderSoftRecord>& records() const { return records_; }

 private:
  void resum_shelf(ShelfId s);
  void resum_workstation(WorkstationId w);

  Eigen::VectorXd shelf_heat_;
  Eigen::VectorXd workstation_heat_;
  std::vector<std::map<OrderId, double>> shelf_terms_;
  std::vector<std::map<OrderId, double>> workstation_terms_;
  std::map<OrderId, OrderSoftRecord> records_;
};

}  // namespace rmfs
