#include "rmfs/soft_alloc.hpp"

#include <algorithm>
#include <numeric>

namespace rmfs {

double matching_degree(const ItemVector& demand, const ItemVector& inventory, double distance,
                       double epsilon) {
  if (demand.size() != inventory.size()) {
    throw InputError("matching_degree: item vector length mismatch");
  }
  if (distance < 0.0 || epsilon <= 0.0) {
    throw InputError("matching_degree: distance must be >= 0 and epsilon > 0");
  }
  const int overlap = demand.cwiseMin(inventory).sum();
  return overlap / (distance + epsilon);
}

Eigen::VectorXi overlap_per_shelf(const ItemVector& demand, const Eigen::MatrixXi& inventories) {
  if (demand.size() != inventories.rows()) {
    throw InputError("overlap_per_shelf: item vector length mismatch");
  }
  Eigen::VectorXi overlap = Eigen::VectorXi::Zero(inventories.cols());
  for (Eigen::Index i = 0; i < demand.size(); ++i) {
    if (demand[i] > 0) {
      overlap += inventories.row(i).transpose().cwiseMin(demand[i]);
    }
  }
  return overlap;
}

Eigen::MatrixXd build_matching_matrix(const ItemVector& demand, const Eigen::MatrixXi& inventories,
                                      std::span<const Position> shelf_positions,
                                      std::span<const Position> workstation_positions,
                                      double epsilon) {
  if (static_cast<Eigen::Index>(shelf_positions.size()) != inventories.cols()) {
    throw InputError("build_matching_matrix: shelf count mismatch");
  }
  if (epsilon <= 0.0) throw InputError("build_matching_matrix: epsilon must be positive");
  const Eigen::VectorXd overlap = overlap_per_shelf(demand, inventories).cast<double>();
  const auto num_shelves = static_cast<Eigen::Index>(shelf_positions.size());
  const auto num_ws = static_cast<Eigen::Index>(workstation_positions.size());
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(num_shelves, num_ws);
  for (Eigen::Index s = 0; s < num_shelves; ++s) {
    if (overlap[s] == 0.0) continue;
    for (Eigen::Index w = 0; w < num_ws; ++w) {
      const int d = manhattan_dist(shelf_positions[s], workstation_positions[w]);
      v(s, w) = overlap[s] / (d + epsilon);
    }
  }
  return v;
}

std::vector<ShelfId> topk_candidates(const Eigen::Ref<const Eigen::VectorXd>& column, int k) {
  if (k < 1) throw InputError("topk_candidates: K must be >= 1");
  std::vector<ShelfId> positive;
  positive.reserve(column.size());
  for (Eigen::Index s = 0; s < column.size(); ++s) {
    if (column[s] > 0.0) positive.push_back(static_cast<ShelfId>(s));
  }
  const auto better = [&](ShelfId a, ShelfId b) {
    if (column[a] != column[b]) return column[a] > column[b];
    return a < b;
  };
  const auto keep = std::min<std::size_t>(positive.size(), static_cast<std::size_t>(k));
  std::partial_sort(positive.begin(), positive.begin() + keep, positive.end(), better);
  positive.resize(keep);
  return positive;
}

std::vector<ShelfId> OrderSoftRecord::all_candidates() const {
  std::vector<ShelfId> out;
  out.reserve(shelf_contribution.size());
  for (const auto& c : shelf_contribution) out.push_back(c.shelf);
  return out;
}

SoftAllocState::SoftAllocState(int num_shelves, int num_workstations)
    : shelf_heat_(Eigen::VectorXd::Zero(num_shelves)),
      workstation_heat_(Eigen::VectorXd::Zero(num_workstations)),
      shelf_terms_(num_shelves),
      workstation_terms_(num_workstations) {}

const OrderSoftRecord& SoftAllocState::apply_arrival(OrderId order, const Eigen::MatrixXd& matching,
                                                     int k) {
  if (records_.count(order) != 0) {
    throw InputError("apply_arrival: order " + std::to_string(order) + " already recorded");
  }
  if (matching.rows() != num_shelves() || matching.cols() != num_workstations()) {
    throw InputError("apply_arrival: matching matrix has wrong shape");
  }

  OrderSoftRecord rec;
  rec.order = order;
  rec.per_workstation.resize(num_workstations());
  rec.workstation_contribution.assign(num_workstations(), 0.0);

  std::map<ShelfId, double> per_shelf;
  for (int w = 0; w < num_workstations(); ++w) {
    double ws_sum = 0.0;
    for (ShelfId s : topk_candidates(matching.col(w), k)) {
      const double v = matching(s, w);
      rec.per_workstation[w].push_back({s, v});
      ws_sum += v;
    }
    rec.workstation_contribution[w] = ws_sum;
  }
  // Shelf heat sums over workstations in id order.
  for (int w = 0; w < num_workstations(); ++w) {
    for (const auto& c : rec.per_workstation[w]) per_shelf[c.shelf] += c.degree;
  }
  for (const auto& [s, v] : per_shelf) rec.shelf_contribution.push_back({s, v});

  auto [it, inserted] = records_.emplace(order, std::move(rec));
  const OrderSoftRecord& stored = it->second;
  if (stored.empty()) return stored;

  for (const auto& c : stored.shelf_contribution) {
    shelf_terms_[c.shelf][order] = c.degree;
    resum_shelf(c.shelf);
  }
  for (int w = 0; w < num_workstations(); ++w) {
    if (stored.per_workstation[w].empty()) continue;
    workstation_terms_[w][order] = stored.workstation_contribution[w];
    resum_workstation(w);
  }
  return stored;
}

const OrderSoftRecord& SoftAllocState::apply_arrival(const Order& order,
                                                     const Eigen::MatrixXi& inventories,
                                                     std::span<const Position> shelf_positions,
                                                     std::span<const Position> workstation_positions,
                                                     int k, double epsilon) {
  if (records_.count(order.id) != 0) {
    throw InputError("apply_arrival: order " + std::to_string(order.id) + " already recorded");
  }
  const Eigen::MatrixXd v = build_matching_matrix(order.demand, inventories, shelf_positions,
                                                  workstation_positions, epsilon);
  return apply_arrival(order.id, v, k);
}

void SoftAllocState::retract_order(OrderId order) {
  auto it = records_.find(order);
  if (it == records_.end()) {
    throw InputError("retract_order: order " + std::to_string(order) + " has no live record");
  }
  const OrderSoftRecord rec = std::move(it->second);
  records_.erase(it);
  for (const auto& c : rec.shelf_contribution) {
    shelf_terms_[c.shelf].erase(order);
    resum_shelf(c.shelf);
  }
  for (int w = 0; w < num_workstations(); ++w) {
    if (workstation_terms_[w].erase(order) != 0) resum_workstation(w);
  }
}

std::vector<OrderId> SoftAllocState::soft_orders(ShelfId shelf) const {
  std::vector<OrderId> out;
  const auto& terms = shelf_terms_.at(shelf);
  out.reserve(terms.size());
  for (const auto& [o, v] : terms) out.push_back(o);
  return out;
}

const OrderSoftRecord* SoftAllocState::record(OrderId order) const {
  auto it = records_.find(order);
  return it == records_.end() ? nullptr : &it->second;
}

void SoftAllocState::resum_shelf(ShelfId s) {
  double sum = 0.0;
  for (const auto& [o, v] : shelf_terms_[s]) sum += v;
  shelf_heat_[s] = sum;
}

void SoftAllocState::resum_workstation(WorkstationId w) {
  double sum = 0.0;
  for (const auto& [o, v] : workstation_terms_[w]) sum += v;
  workstation_heat_[w] = sum;
}

}  // namespace rmfs
