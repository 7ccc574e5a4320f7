#include "rmfs/obs_graph.hpp"

#include <algorithm>
#include <tuple>

namespace rmfs {

namespace {

LocationStatus location_status(const LocationState& l) {
  if (l.reservation == Reservation::Pickup) return LocationStatus::ReservedPickup;
  if (l.reservation == Reservation::Return) return LocationStatus::ReservedReturn;
  return l.site.occupant ? LocationStatus::Occupied : LocationStatus::Empty;
}

template <typename T>
std::vector<T> vec_at(const nlohmann::json& j, const char* key) {
  return j.at(key).get<std::vector<T>>();
}

Eigen::MatrixXd matrix_from(const nlohmann::json& j, Eigen::Index cols) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) {
      throw InputError("graph: feature row has the wrong width");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = rows[i][c];
  }
  return m;
}

nlohmann::json matrix_to(const Eigen::MatrixXd& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

bool same_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

}  // namespace

EntityFeatures extract_features(const Simulation& sim) {
  const auto& world = sim.world();
  const auto& soft = sim.soft();
  const Decision& d = sim.current();
  const Position from = world.robots[d.robot].pos;
  EntityFeatures f;
  f.decision_robot = d.robot;

  for (const auto& r : world.robots) {
    RobotFeatures rf;
    rf.id = r.id;
    rf.x = r.pos.x;
    rf.y = r.pos.y;
    if (r.shelf) {
      rf.task = world.shelves[*r.shelf].task_count();
      rf.heat = soft.shelf_heat()[*r.shelf];
      rf.soft = static_cast<int>(soft.soft_set_size(*r.shelf));
    }
    rf.status = r.status;
    f.robots.push_back(rf);
  }
  for (const auto& l : world.locations) {
    LocationFeatures lf;
    lf.id = l.site.id;
    lf.x = l.site.pos.x;
    lf.y = l.site.pos.y;
    lf.dist = manhattan_dist(from, l.site.pos);
    if (l.site.occupant) {
      const ShelfId s = *l.site.occupant;
      lf.task = world.shelves[s].task_count();
      lf.heat = soft.shelf_heat()[s];
      lf.soft = static_cast<int>(soft.soft_set_size(s));
    }
    lf.status = location_status(l);
    f.locations.push_back(lf);
  }
  std::vector<int> ws_tasks(static_cast<std::size_t>(world.num_workstations()), 0);
  for (const auto& sh : world.shelves) {
    for (const auto& t : sh.tasks) {
      if (!t.from_soft) ++ws_tasks[t.workstation];
    }
  }
  const auto clear = sim.queue_clear_times();
  for (const auto& w : world.workstations) {
    WorkstationFeatures wf;
    wf.id = w.site.id;
    wf.x = w.site.pos.x;
    wf.y = w.site.pos.y;
    wf.dist = manhattan_dist(from, w.site.pos);
    wf.task = ws_tasks[w.site.id];
    wf.heat = soft.workstation_heat()[w.site.id];
    wf.workload = w.workload;
    wf.cost = clear[w.site.id];
    f.workstations.push_back(wf);
  }
  return f;
}

EntitySubset prune_entities(const Simulation& sim, int k1, int k2) {
  if (k1 < 1 || k2 < 1) throw InputError("prune_entities: K1 and K2 must be >= 1");
  const auto& world = sim.world();
  const RobotId me = sim.current().robot;
  const Position from = world.robots[me].pos;
  EntitySubset out;

  std::vector<std::pair<int, RobotId>> robots;
  for (const auto& r : world.robots) robots.emplace_back(manhattan_dist(from, r.pos), r.id);
  std::sort(robots.begin(), robots.end());
  if (static_cast<int>(robots.size()) > k1) robots.resize(static_cast<std::size_t>(k1));
  for (const auto& [d, id] : robots) out.robots.push_back(id);
  if (std::find(out.robots.begin(), out.robots.end(), me) == out.robots.end()) {
    out.robots.back() = me;
  }
  std::sort(out.robots.begin(), out.robots.end());

  std::vector<std::tuple<double, int, LocationId>> ranked;  // (-heat, -tasks, id)
  for (const auto& l : world.locations) {
    if (!l.site.occupant || l.reservation != Reservation::None) continue;
    const ShelfId s = *l.site.occupant;
    ranked.emplace_back(-sim.soft().shelf_heat()[s], -world.shelves[s].task_count(), l.site.id);
  }
  std::sort(ranked.begin(), ranked.end());
  if (static_cast<int>(ranked.size()) > k2) ranked.resize(static_cast<std::size_t>(k2));
  for (const auto& r : ranked) out.locations.push_back(std::get<2>(r));
  for (const auto& l : world.locations) {
    if (!l.site.occupant) out.locations.push_back(l.site.id);
  }
  std::sort(out.locations.begin(), out.locations.end());

  for (const auto& w : world.workstations) out.workstations.push_back(w.site.id);
  return out;
}

std::size_t HeteroGraph::num_entity_edges() const {
  std::size_t n = 0;
  for (const auto& e : edges) n += e.src.size();
  return n;
}

bool HeteroGraph::same_as(const HeteroGraph& o) const {
  return phase == o.phase && decision_robot == o.decision_robot && robot_ids == o.robot_ids &&
         workstation_ids == o.workstation_ids && location_ids == o.location_ids &&
         same_matrix(robot_x, o.robot_x) && same_matrix(location_x, o.location_x) &&
         same_matrix(workstation_x, o.workstation_x) && robot_status == o.robot_status &&
         location_status == o.location_status && edges == o.edges && targets == o.targets;
}

HeteroGraph build_graph(const Simulation& sim, const EntityFeatures& f, const EntitySubset& subset) {
  const auto& world = sim.world();
  const double W = world.grid.width() > 1 ? world.grid.width() - 1 : 1;
  const double H = world.grid.height() > 1 ? world.grid.height() - 1 : 1;
  const double span = world.grid.width() + world.grid.height();

  HeteroGraph g;
  g.phase = static_cast<int>(sim.current().kind);
  g.robot_ids = subset.robots;
  g.workstation_ids = subset.workstations;
  g.location_ids = subset.locations;

  const auto nr = static_cast<Eigen::Index>(subset.robots.size());
  const auto nw = static_cast<Eigen::Index>(subset.workstations.size());
  const auto nl = static_cast<Eigen::Index>(subset.locations.size());
  g.robot_x.resize(nr, 5);
  g.workstation_x.resize(nw, 7);
  g.location_x.resize(nl, 6);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const auto& r = f.robots[static_cast<std::size_t>(subset.robots[i])];
    g.robot_x.row(i) << r.x / W, r.y / H, r.task, r.heat, r.soft;
    g.robot_status.push_back(static_cast<int>(r.status));
    if (r.id == f.decision_robot) g.decision_robot = static_cast<int>(i);
  }
  for (Eigen::Index i = 0; i < nw; ++i) {
    const auto& w = f.workstations[static_cast<std::size_t>(subset.workstations[i])];
    g.workstation_x.row(i) << w.x / W, w.y / H, w.dist / span, w.task, w.heat, w.workload, w.cost / span;
  }
  for (Eigen::Index i = 0; i < nl; ++i) {
    const auto& l = f.locations[static_cast<std::size_t>(subset.locations[i])];
    g.location_x.row(i) << l.x / W, l.y / H, l.dist / span, l.task, l.heat, l.soft;
    g.location_status.push_back(static_cast<int>(l.status));
  }

  auto rpos = [&](int i) { return world.robots[subset.robots[i]].pos; };
  auto wpos = [&](int i) { return world.workstations[subset.workstations[i]].site.pos; };
  auto lpos = [&](int i) { return world.locations[subset.locations[i]].site.pos; };
  auto connect = [&](Relation fwd, Relation back, int na, int nb, auto pa, auto pb) {
    auto& ef = g.edges[static_cast<std::size_t>(fwd)];
    auto& eb = g.edges[static_cast<std::size_t>(back)];
    for (int a = 0; a < na; ++a) {
      for (int b = 0; b < nb; ++b) {
        const int d = manhattan_dist(pa(a), pb(b));
        ef.src.push_back(a);
        ef.dst.push_back(b);
        ef.dist.push_back(d);
        eb.src.push_back(b);
        eb.dst.push_back(a);
        eb.dist.push_back(d);
      }
    }
  };
  connect(Relation::RW, Relation::WR, static_cast<int>(nr), static_cast<int>(nw), rpos, wpos);
  connect(Relation::RL, Relation::LR, static_cast<int>(nr), static_cast<int>(nl), rpos, lpos);
  connect(Relation::WL, Relation::LW, static_cast<int>(nw), static_cast<int>(nl), wpos, lpos);

  for (WorkstationId w : subset.workstations) g.targets.push_back(sim.workstation_action(w));
  for (LocationId l : subset.locations) g.targets.push_back(sim.location_action(l));
  return g;
}

HeteroGraph observe(const Simulation& sim, int k1, int k2) {
  return build_graph(sim, extract_features(sim), prune_entities(sim, k1, k2));
}

ValueFeatures value_features(const Simulation& sim) {
  ValueFeatures v;
  v.remaining = sim.arrived_orders() - sim.resolved_orders();
  v.completed_soft = sim.completed_soft_orders();
  v.completed_tasks = sim.completed_tasks();
  return v;
}

nlohmann::json graph_to_json(const HeteroGraph& g) {
  nlohmann::json j;
  j["phase"] = g.phase;
  j["decision_robot"] = g.decision_robot;
  j["robot_ids"] = g.robot_ids;
  j["workstation_ids"] = g.workstation_ids;
  j["location_ids"] = g.location_ids;
  j["robot_x"] = matrix_to(g.robot_x);
  j["workstation_x"] = matrix_to(g.workstation_x);
  j["location_x"] = matrix_to(g.location_x);
  j["robot_status"] = g.robot_status;
  j["location_status"] = g.location_status;
  nlohmann::json edges;
  for (std::size_t r = 0; r < g.edges.size(); ++r) {
    edges[kRelationNames[r]] = {{"src", g.edges[r].src}, {"dst", g.edges[r].dst}, {"dist", g.edges[r].dist}};
  }
  j["edges"] = std::move(edges);
  j["targets"] = g.targets;
  return j;
}

HeteroGraph graph_from_json(const nlohmann::json& j) {
  try {
    HeteroGraph g;
    g.phase = j.at("phase").get<int>();
    g.decision_robot = j.at("decision_robot").get<int>();
    g.robot_ids = vec_at<int>(j, "robot_ids");
    g.workstation_ids = vec_at<int>(j, "workstation_ids");
    g.location_ids = vec_at<int>(j, "location_ids");
    g.robot_x = matrix_from(j.at("robot_x"), 5);
    g.workstation_x = matrix_from(j.at("workstation_x"), 7);
    g.location_x = matrix_from(j.at("location_x"), 6);
    g.robot_status = vec_at<int>(j, "robot_status");
    g.location_status = vec_at<int>(j, "location_status");
    for (std::size_t r = 0; r < g.edges.size(); ++r) {
      const auto& e = j.at("edges").at(kRelationNames[r]);
      g.edges[r].src = vec_at<int>(e, "src");
      g.edges[r].dst = vec_at<int>(e, "dst");
      g.edges[r].dist = vec_at<int>(e, "dist");
    }
    g.targets = vec_at<int>(j, "targets");
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("graph: ") + e.what());
  }
}

}  // namespace rmfs
