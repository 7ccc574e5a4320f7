#pragma once

// Heterogeneous observation of a pending decision: per-entity features, the distance-weighted
// graph over robots / workstations / storage locations plus a phase node, entity pruning, and
// the value-function features.

#include "rmfs/simulation.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <array>
#include <string>
#include <vector>

namespace rmfs {

enum class LocationStatus : std::uint8_t { Empty = 0, Occupied = 1, ReservedPickup = 2, ReservedReturn = 3 };

inline constexpr int kRobotStatusCount = 5;
inline constexpr int kLocationStatusCount = 4;

// Raw features, in cells / seconds / counts.
struct RobotFeatures {
  RobotId id = 0;
  double x = 0, y = 0;
  int task = 0;
  double heat = 0;
  int soft = 0;
  RobotStatus status = RobotStatus::Idle;
};

struct LocationFeatures {
  LocationId id = 0;
  double x = 0, y = 0, dist = 0;
  int task = 0;
  double heat = 0;
  int soft = 0;
  LocationStatus status = LocationStatus::Empty;
};

struct WorkstationFeatures {
  WorkstationId id = 0;
  double x = 0, y = 0, dist = 0;
  int task = 0;
  double heat = 0;
  int workload = 0;
  double cost = 0;
};

struct EntityFeatures {
  RobotId decision_robot = 0;
  std::vector<RobotFeatures> robots;
  std::vector<LocationFeatures> locations;
  std::vector<WorkstationFeatures> workstations;
};

/// Features of every entity, distances measured from the decision robot.
EntityFeatures extract_features(const Simulation& sim);

struct EntitySubset {
  std::vector<RobotId> robots;
  std::vector<LocationId> locations;  // ascending id
  std::vector<WorkstationId> workstations;
};

/// K1 nearest robots (decision robot always kept), the locations of the top-K2 unreserved
/// shelves ranked by (heat desc, task count desc, id), every empty location, all workstations.
EntitySubset prune_entities(const Simulation& sim, int k1, int k2);

enum class Relation : std::uint8_t { RW, WR, RL, LR, WL, LW };
inline constexpr std::array<const char*, 6> kRelationNames{"rw", "wr", "rl", "lr", "wl", "lw"};

struct EdgeList {
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> dist;  // Manhattan distance in cells
  friend bool operator==(const EdgeList&, const EdgeList&) = default;
};

/// Node indices are positions within the per-type id lists. The single phase node has an
/// outgoing edge to every entity node; those edges are implied and not stored.
struct HeteroGraph {
  int phase = 0;  // EventKind index
  int decision_robot = 0;  // index into robot_ids
  std::vector<int> robot_ids;
  std::vector<int> workstation_ids;
  std::vector<int> location_ids;
  Eigen::MatrixXd robot_x;        // n_r x 5: x, y, task, h, soft (normalized)
  Eigen::MatrixXd location_x;     // n_l x 6: x, y, dist, task, h, soft
  Eigen::MatrixXd workstation_x;  // n_w x 7: x, y, dist, task, h, u, cost
  std::vector<int> robot_status;
  std::vector<int> location_status;
  std::array<EdgeList, 6> edges;
  /// Candidate action ids, workstations then locations in node order.
  std::vector<int> targets;

  std::size_t num_nodes() const {
    return robot_ids.size() + workstation_ids.size() + location_ids.size() + 1;
  }
  std::size_t num_entity_edges() const;
  std::size_t num_phase_edges() const { return num_nodes() - 1; }
  /// Exact equality, feature matrices compared element by element.
  bool same_as(const HeteroGraph& o) const;
};

/// Builds the graph over `subset`. Coordinates are scaled to [0, 1] by the grid extent,
/// distances and cost_w are divided by (H + W); counts and heats are passed through.
HeteroGraph build_graph(const Simulation& sim, const EntityFeatures& features,
                        const EntitySubset& subset);

/// Convenience: extract, prune and build in one go.
HeteroGraph observe(const Simulation& sim, int k1, int k2);

struct ValueFeatures {
  int remaining = 0;
  int completed_soft = 0;
  int completed_tasks = 0;
};

ValueFeatures value_features(const Simulation& sim);

nlohmann::json graph_to_json(const HeteroGraph& g);
/// Throws InputError on a malformed document.
HeteroGraph graph_from_json(const nlohmann::json& j);

}  // namespace rmfs
