#include "rmfs/simulation.hpp"

#include "rmfs/finalizer.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <sstream>
#include <tuple>

namespace rmfs {

using ojson = nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ojson items_json(const ItemVector& v) {
  ojson out = ojson::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (v[k] != 0) out.push_back({k, v[k]});
  }
  return out;
}

}  // namespace

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Idle: return "idle";
    case EventKind::PickupCompletion: return "pickup";
    case EventKind::DeliveryCompletion: return "delivery";
  }
  return "?";
}

Seconds processing_time(int num_items, Seconds c_item, Seconds c_shelf) {
  if (num_items < 0 || c_item < 0 || c_shelf < 0) {
    throw InputError("processing_time: negative input");
  }
  return num_items * c_item + c_shelf;
}

bool Simulation::QueuedEvent::operator>(const QueuedEvent& o) const {
  return std::tie(time, kind, subject, seq) > std::tie(o.time, o.kind, o.subject, o.seq);
}

Simulation::Simulation(const Dataset& dataset, SimConfig config)
    : dataset_(dataset),
      config_(std::move(config)),
      world_(dataset_),
      soft_(world_.num_shelves(), world_.num_workstations()),
      alloc_rng_(config_.seed ^ 0x5eed'a110'c000'0001ull) {
  if (config_.top_k < 1) throw InputError("top_k must be >= 1");
  if (config_.pool_threshold < 1 || config_.pool_interval < 0) {
    throw InputError("pool threshold/interval out of range");
  }
  if (!(config_.shaping.p >= 1.0)) throw InputError("shaping p must be >= 1");
  uncommitted_demand_ = ItemVector::Zero(world_.num_items);
  for (auto& r : world_.robots) {
    r.asleep = true;
    r.last_activity = 0.0;
  }
  arrivals_left_ = static_cast<int>(world_.orders.size());
  for (const auto& os : world_.orders) push(os.order.arrival, Internal::OrderArrival, os.order.id);

  ojson h;
  h["ev"] = "header";
  h["version"] = 1;
  h["dataset"] = dataset_.name;
  h["digest"] = content_digest(to_text(dataset_));
  h["allocator"] = to_string(config_.allocator);
  h["k"] = config_.top_k;
  h["seed"] = config_.seed;
  h["p"] = config_.shaping.p;
  h["gamma"] = config_.shaping.gamma;
  h["literal_gamma"] = config_.shaping.literal_gamma;
  h["pool"] = {config_.pool_threshold, config_.pool_interval};
  h["cp_budget"] = config_.cp.node_budget;
  log_event(h.dump());

  advance();
  if (pending_) pending_potential_ = potential();
}

const Decision& Simulation::current() const {
  if (!pending_) throw StateError("episode is over");
  return *pending_;
}

Position Simulation::action_position(int a) const {
  if (a < 0 || a >= num_actions()) throw InputError("action out of range");
  if (is_workstation_action(a)) return world_.workstations[a].site.pos;
  return world_.locations[action_location(a)].site.pos;
}

void Simulation::push(Seconds t, Internal kind, int subject) {
  queue_.push({t, kind, subject, seq_++});
}

void Simulation::log_event(const std::string& line) { log_.push_back(line); }

std::string Simulation::log_text() const {
  std::string out;
  for (const auto& l : log_) {
    out += l;
    out += '\n';
  }
  return out;
}

// Masks -------------------------------------------------------------------------------------

bool Simulation::shelf_has_work(ShelfId s) const {
  return soft_.soft_set_size(s) > 0 || !world_.shelves[s].tasks.empty();
}

Seconds Simulation::shelf_earliest_order(ShelfId s) const {
  Seconds best = kInf;
  for (OrderId o : soft_.soft_orders(s)) best = std::min(best, world_.orders[o].order.arrival);
  for (const auto& t : world_.shelves[s].tasks) {
    best = std::min(best, world_.orders[t.order].order.arrival);
  }
  return best;
}

Seconds Simulation::shelf_earliest_order(ShelfId s, WorkstationId w) const {
  Seconds best = kInf;
  for (const auto& t : world_.shelves[s].tasks) {
    if (t.workstation == w) best = std::min(best, world_.orders[t.order].order.arrival);
  }
  return best;
}

std::vector<std::uint8_t> Simulation::idle_mask(bool useful) const {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(num_actions()), 0);
  for (const auto& l : world_.locations) {
    if (!l.site.occupant || l.reservation != Reservation::None) continue;
    if (useful && !shelf_has_work(*l.site.occupant)) continue;
    m[static_cast<std::size_t>(location_action(l.site.id))] = 1;
  }
  return m;
}

bool Simulation::useful_idle_exists() const {
  for (const auto& l : world_.locations) {
    if (l.site.occupant && l.reservation == Reservation::None && shelf_has_work(*l.site.occupant)) {
      return true;
    }
  }
  return false;
}

std::vector<std::uint8_t> Simulation::legal_mask() const {
  const Decision& d = current();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(num_actions()), 0);
  switch (d.kind) {
    case EventKind::Idle: return idle_mask(false);
    case EventKind::PickupCompletion:
      std::fill(m.begin(), m.begin() + world_.num_workstations(), 1);
      return m;
    case EventKind::DeliveryCompletion:
      std::fill(m.begin(), m.begin() + world_.num_workstations(), 1);
      for (const auto& l : world_.locations) {
        if (!l.site.occupant && l.reservation == Reservation::None) {
          m[static_cast<std::size_t>(location_action(l.site.id))] = 1;
        }
      }
      return m;
  }
  return m;
}

bool Simulation::in_return_phase() const {
  const Decision& d = current();
  if (d.kind != EventKind::DeliveryCompletion) return false;
  const auto& robot = world_.robots[d.robot];
  return world_.shelves[*robot.shelf].tasks.empty();
}

rl::Phase Simulation::phase() const {
  const Decision& d = current();
  if (d.kind == EventKind::Idle) return rl::Phase::Pickup;
  if (d.kind == EventKind::PickupCompletion) return rl::Phase::Delivery;
  return in_return_phase() ? rl::Phase::Return : rl::Phase::Delivery;
}

std::vector<std::uint8_t> Simulation::useful_mask() const {
  const Decision& d = current();
  if (d.kind == EventKind::Idle) return idle_mask(true);
  std::vector<std::uint8_t> m(static_cast<std::size_t>(num_actions()), 0);
  const auto& robot = world_.robots[d.robot];
  const ShelfId s = *robot.shelf;
  if (d.kind == EventKind::PickupCompletion && soft_.soft_set_size(s) > 0) {
    std::fill(m.begin(), m.begin() + world_.num_workstations(), 1);
    return m;
  }
  bool any = false;
  for (const auto& t : world_.shelves[s].tasks) {
    m[static_cast<std::size_t>(workstation_action(t.workstation))] = 1;
    any = true;
  }
  if (!any && d.kind == EventKind::DeliveryCompletion) {
    for (const auto& l : world_.locations) {
      if (!l.site.occupant && l.reservation == Reservation::None) {
        m[static_cast<std::size_t>(location_action(l.site.id))] = 1;
      }
    }
  }
  return m;
}

std::vector<std::uint8_t> Simulation::policy_mask() const {
  auto m = useful_mask();
  if (std::find(m.begin(), m.end(), 1) != m.end()) return m;
  return legal_mask();
}

// Clocks and potential ------------------------------------------------------------------------

Seconds Simulation::queue_clear_time(WorkstationId w) const { return queue_clear_times().at(w); }

std::vector<Seconds> Simulation::queue_clear_times() const {
  std::vector<Seconds> out(static_cast<std::size_t>(world_.num_workstations()), 0.0);
  for (WorkstationId w = 0; w < world_.num_workstations(); ++w) {
    out[w] = std::max(0.0, world_.workstations[w].free_at - now_);
  }
  std::vector<int> items(out.size(), 0);
  for (const auto& sh : world_.shelves) {
    if (sh.tasks.empty()) continue;
    std::fill(items.begin(), items.end(), 0);
    for (const auto& t : sh.tasks) items[t.workstation] += t.items.sum();
    for (std::size_t w = 0; w < items.size(); ++w) {
      if (items[w] > 0) out[w] += processing_time(items[w], world_.c_item, world_.c_shelf);
    }
  }
  return out;
}

Eigen::VectorXd Simulation::active_times() const {
  Eigen::VectorXd t(world_.num_robots());
  for (const auto& r : world_.robots) t[r.id] = r.asleep ? r.last_activity : now_;
  return t;
}

double Simulation::potential() const {
  if (world_.robots.empty()) return 0.0;
  return rl::potential(active_times(), config_.shaping.p);
}

// Event loop ---------------------------------------------------------------------------------

bool Simulation::all_resolved() const {
  return arrivals_left_ == 0 && completed_ + infeasible_ == static_cast<int>(world_.orders.size());
}

void Simulation::wake_all() {
  for (auto& r : world_.robots) {
    if (!r.asleep) continue;
    r.asleep = false;
    push(now_, Internal::Idle, r.id);
  }
}

void Simulation::sleep(RobotState& robot) {
  robot.asleep = true;
  robot.last_activity = now_;
}

void Simulation::advance() {
  pending_.reset();
  while (true) {
    if (queue_.empty()) {
      if (all_resolved()) {
        finish();
        return;
      }
      if (watchdog_mark_ == progress_) {
        std::ostringstream msg;
        msg << "deadlock at t=" << now_ << ": " << (completed_ + infeasible_) << '/'
            << world_.orders.size() << " orders resolved, " << arrivals_left_
            << " arrivals pending, pool " << pool_.size() << ", soft live " << soft_.live_count();
        throw EpisodeAborted(msg.str());
      }
      watchdog_mark_ = progress_;
      wake_all();
      continue;
    }
    const QueuedEvent e = queue_.top();
    queue_.pop();
    if (e.kind == Internal::PoolFlush && e.subject != flush_generation_) continue;  // stale
    now_ = e.time;
    last_event_time_ = e.time;
    if (process(e)) return;
  }
}

bool Simulation::process(const QueuedEvent& e) {
  switch (e.kind) {
    case Internal::OrderArrival:
      on_arrival(e.subject);
      return false;
    case Internal::PoolFlush:
      flush_scheduled_ = false;
      if (!pool_.empty()) flush_pool();
      return false;
    case Internal::ArriveWorkstation:
      on_arrive_workstation(e.subject);
      return false;
    case Internal::ArriveReturn:
      on_arrive_return(e.subject);
      return false;
    case Internal::Delivery: {
      auto& robot = world_.robots[e.subject];
      if (robot.job) complete_job(robot);
      pending_ = Decision{now_, EventKind::DeliveryCompletion, robot.id, e.seq};
      ++progress_;
      return true;
    }
    case Internal::Pickup: {
      auto& robot = world_.robots[e.subject];
      auto& loc = world_.locations[robot.target];
      robot.pos = loc.site.pos;
      const ShelfId s = *loc.site.occupant;
      loc.site.occupant.reset();
      loc.reservation = Reservation::None;
      loc.reserved_by = -1;
      robot.shelf = s;
      world_.shelves[s].place = {ShelfPlace::Kind::Robot, robot.id};
      ojson j{{"ev", "lift"}, {"t", now_}, {"r", robot.id}, {"s", s}, {"l", loc.site.id}};
      log_event(j.dump());
      pending_ = Decision{now_, EventKind::PickupCompletion, robot.id, e.seq};
      ++progress_;
      return true;
    }
    case Internal::Idle: {
      auto& robot = world_.robots[e.subject];
      if (!useful_idle_exists()) {
        sleep(robot);
        return false;
      }
      pending_ = Decision{now_, EventKind::Idle, robot.id, e.seq};
      ++progress_;
      return true;
    }
  }
  return false;
}

void Simulation::finish() {
  pending_.reset();
  const auto m = metrics();
  ojson j;
  j["ev"] = "end";
  j["t"] = last_event_time_;
  j["makespan"] = m.makespan;
  j["completed"] = m.completed;
  j["infeasible"] = m.infeasible;
  j["decisions"] = m.decisions;
  j["deliveries"] = m.deliveries;
  j["picked"] = items_json(world_.picked);
  j["remaining"] = items_json(world_.physical.rowwise().sum());
  log_event(j.dump());
}

// Orders ---------------------------------------------------------------------------------------

void Simulation::resolve_infeasible(OrderId o) {
  world_.orders[o].status = OrderStatus::Infeasible;
  ++infeasible_;
}

void Simulation::complete_order(OrderState& os) {
  os.status = OrderStatus::Completed;
  os.order.completion = now_;
  ++completed_;
  if (os.via_soft) ++completed_soft_;
}

void Simulation::allocate_committed(OrderId o, WorkstationId w) {
  default_allocate(world_, o, w);
}

void Simulation::on_arrival(OrderId o) {
  --arrivals_left_;
  ++arrived_;
  auto& os = world_.orders[o];
  const ItemVector& demand = os.order.demand;
  ojson j{{"ev", "arrival"}, {"t", now_}, {"o", o}};
  const ItemVector uncommitted = world_.available.rowwise().sum() - uncommitted_demand_;
  if (demand.sum() == 0) {
    complete_order(os);
    j["status"] = "empty";
  } else if (!can_fulfill(uncommitted, demand)) {
    resolve_infeasible(o);
    j["status"] = "infeasible";
  } else {
    switch (config_.allocator) {
      case AllocatorKind::Soft: {
        const auto ws = world_.workstation_positions();
        const auto sp = world_.shelf_positions();
        const auto& rec = soft_.apply_arrival(os.order, world_.available, sp, ws, config_.top_k);
        if (rec.empty()) {
          // Unreachable while the ingestion check holds: some shelf overlaps the demand.
          throw InvariantError("soft arrival produced no candidates");
        }
        os.status = OrderStatus::Soft;
        uncommitted_demand_ += demand;
        j["status"] = "soft";
        break;
      }
      case AllocatorKind::SQF: {
        const auto clear = queue_clear_times();
        const WorkstationId w = sqf_allocate(clear);
        allocate_committed(o, w);
        j["status"] = "allocated";
        j["w"] = w;
        break;
      }
      case AllocatorKind::WLB: {
        std::vector<int> loads;
        for (const auto& w : world_.workstations) loads.push_back(w.workload);
        const WorkstationId w = wlb_allocate(loads);
        allocate_committed(o, w);
        j["status"] = "allocated";
        j["w"] = w;
        break;
      }
      case AllocatorKind::Random: {
        random_allocate(world_, o, alloc_rng_);
        j["status"] = "allocated";
        j["w"] = os.workstation;
        break;
      }
      case AllocatorKind::CP: {
        os.status = OrderStatus::Pooled;
        uncommitted_demand_ += demand;
        pool_.push_back(o);
        j["status"] = "pooled";
        break;
      }
    }
  }
  log_event(j.dump());
  if (config_.allocator == AllocatorKind::CP && !pool_.empty()) {
    if (static_cast<int>(pool_.size()) >= config_.pool_threshold || arrivals_left_ == 0) {
      flush_pool();
    } else if (!flush_scheduled_) {
      flush_scheduled_ = true;
      push(std::max(now_, last_flush_ + config_.pool_interval), Internal::PoolFlush,
           static_cast<int>(flush_generation_));
    }
  }
  wake_all();
}

void Simulation::flush_pool() {
  std::vector<OrderId> batch;
  batch.swap(pool_);
  ++flush_generation_;
  flush_scheduled_ = false;
  last_flush_ = now_;
  for (OrderId o : batch) uncommitted_demand_ -= world_.orders[o].order.demand;
  const auto res = cp_allocate(world_, batch, config_.cp);
  ojson j{{"ev", "batch"}, {"t", now_}, {"orders", batch}};
  j["objective"] = res.solution.objective;
  j["optimal"] = res.solution.optimal;
  j["nodes"] = res.solution.nodes;
  j["fallback"] = res.fallback;
  for (OrderId o : batch) {
    if (world_.orders[o].status == OrderStatus::Infeasible) ++infeasible_;
  }
  log_event(j.dump());
  wake_all();
}

// Robots ---------------------------------------------------------------------------------------

Seconds Simulation::move_robot(RobotState& robot, Position target) {
  const int d = manhattan_dist(world_.grid, robot.pos, target);
  robot.travel += d;
  return now_ + d;
}

void Simulation::apply_idle(RobotState& robot, int action) {
  const LocationId l = action_location(action);
  auto& loc = world_.locations[l];
  loc.reservation = Reservation::Pickup;
  loc.reserved_by = robot.id;
  robot.status = RobotStatus::MovingToPick;
  robot.target = l;
  push(move_robot(robot, loc.site.pos), Internal::Pickup, robot.id);
}

void Simulation::apply_pickup(RobotState& robot, int action) {
  const ShelfId s = *robot.shelf;
  const WorkstationId w = action;
  const auto pickup = finalize_pickup(world_, soft_, s);
  for (OrderId o : pickup.feasible) uncommitted_demand_ -= world_.orders[o].order.demand;
  for (OrderId o : pickup.remainder) uncommitted_demand_ -= world_.orders[o].order.demand;
  const auto delivery = finalize_delivery(world_, s, w, pickup);
  infeasible_ += static_cast<int>(delivery.infeasible.size());
  if (!pickup.feasible.empty() || !pickup.remainder.empty()) {
    ojson j{{"ev", "finalize"}, {"t", now_}, {"s", s}, {"w", w}};
    j["feasible"] = pickup.feasible;
    j["remainder"] = pickup.remainder;
    j["infeasible"] = delivery.infeasible;
    ojson tasks = ojson::array();
    for (const auto& t : delivery.new_tasks) tasks.push_back({t.order, t.shelf, t.items.sum()});
    j["tasks"] = tasks;
    log_event(j.dump());
  }
  robot.status = RobotStatus::MovingToWorkstation;
  robot.target = w;
  push(move_robot(robot, world_.workstations[w].site.pos), Internal::ArriveWorkstation, robot.id);
  if (!delivery.new_tasks.empty()) wake_all();
}

void Simulation::apply_delivery(RobotState& robot, int action) {
  if (is_workstation_action(action)) {
    robot.status = RobotStatus::MovingToWorkstation;
    robot.target = action;
    push(move_robot(robot, world_.workstations[action].site.pos), Internal::ArriveWorkstation,
         robot.id);
    return;
  }
  const LocationId l = action_location(action);
  auto& loc = world_.locations[l];
  loc.reservation = Reservation::Return;
  loc.reserved_by = robot.id;
  robot.status = RobotStatus::MovingToReturn;
  robot.target = l;
  push(move_robot(robot, loc.site.pos), Internal::ArriveReturn, robot.id);
}

void Simulation::on_arrive_workstation(RobotId r) {
  auto& robot = world_.robots[r];
  const WorkstationId w = robot.target;
  auto& ws = world_.workstations[w];
  robot.pos = ws.site.pos;
  robot.status = RobotStatus::Queued;
  auto& tasks = world_.shelves[*robot.shelf].tasks;
  Job job;
  job.workstation = w;
  job.shelf = *robot.shelf;
  int items = 0;
  for (auto it = tasks.begin(); it != tasks.end();) {
    if (it->workstation == w) {
      items += it->items.sum();
      job.lines.push_back(std::move(*it));
      it = tasks.erase(it);
    } else {
      ++it;
    }
  }
  if (job.lines.empty()) {
    push(now_, Internal::Delivery, r);
    return;
  }
  job.start = std::max(now_, ws.free_at);
  job.finish = job.start + processing_time(items, world_.c_item, world_.c_shelf);
  ws.free_at = job.finish;
  ojson j{{"ev", "job"}, {"t", now_}, {"r", r}, {"s", job.shelf}, {"w", w},
          {"start", job.start}, {"finish", job.finish}, {"items", items}};
  log_event(j.dump());
  push(job.finish, Internal::Delivery, r);
  robot.job = std::move(job);
}

void Simulation::complete_job(RobotState& robot) {
  Job job = std::move(*robot.job);
  robot.job.reset();
  auto& ws = world_.workstations[job.workstation];
  std::vector<OrderId> done;
  int items = 0;
  for (const auto& t : job.lines) {
    const int n = t.items.sum();
    world_.physical.col(t.shelf) -= t.items;
    world_.picked += t.items;
    ws.workload -= n;
    ws.items_picked += n;
    items += n;
    if (!t.from_soft) ++completed_tasks_;
    auto& os = world_.orders[t.order];
    os.unpicked -= n;
    if (os.unpicked == 0) {
      complete_order(os);
      done.push_back(t.order);
    }
  }
  ++ws.deliveries;
  ojson j{{"ev", "pick"}, {"t", now_}, {"r", robot.id}, {"s", job.shelf}, {"w", job.workstation},
          {"items", items}, {"completed", done}};
  log_event(j.dump());
}

void Simulation::on_arrive_return(RobotId r) {
  auto& robot = world_.robots[r];
  auto& loc = world_.locations[robot.target];
  robot.pos = loc.site.pos;
  const ShelfId s = *robot.shelf;
  loc.site.occupant = s;
  loc.reservation = Reservation::None;
  loc.reserved_by = -1;
  world_.shelves[s].place = {ShelfPlace::Kind::Location, loc.site.id};
  robot.shelf.reset();
  robot.status = RobotStatus::Idle;
  robot.target = -1;
  ojson j{{"ev", "place"}, {"t", now_}, {"r", r}, {"s", s}, {"l", loc.site.id}};
  log_event(j.dump());
  push(now_, Internal::Idle, r);
  wake_all();
}

// Step -----------------------------------------------------------------------------------------

StepResult Simulation::step(int action) {
  const Decision d = current();
  if (action < 0 || action >= num_actions()) {
    throw InvalidAction("action " + std::to_string(action) + " out of range [0, " +
                        std::to_string(num_actions()) + ")");
  }
  if (!legal_mask()[static_cast<std::size_t>(action)]) {
    throw InvalidAction("action " + std::to_string(action) + " is not legal for this " +
                        to_string(d.kind) + " event");
  }
  if (decisions_ >= config_.max_decisions) throw EpisodeAborted("decision cap reached");
  ++decisions_;
  const double phi_now = pending_potential_;
  auto& robot = world_.robots[d.robot];
  const Position target = action_position(action);
  ojson j{{"ev", "decision"}, {"t", now_}, {"kind", to_string(d.kind)}, {"r", d.robot},
          {"a", action}};
  j["target"] = (is_workstation_action(action) ? "w" : "l") +
                std::to_string(is_workstation_action(action) ? action : action_location(action));
  j["eta"] = now_ + manhattan_dist(robot.pos, target);
  log_event(j.dump());

  switch (d.kind) {
    case EventKind::Idle: apply_idle(robot, action); break;
    case EventKind::PickupCompletion: apply_pickup(robot, action); break;
    case EventKind::DeliveryCompletion: apply_delivery(robot, action); break;
  }
  if (config_.check_invariants) world_.check_invariants();

  advance();
  StepResult res;
  res.done = done();
  res.dtau = (res.done ? last_event_time_ : now_) - d.time;
  const double phi_next = potential();
  res.reward = rl::shaped_reward(phi_now, phi_next, config_.shaping.gamma, res.dtau,
                                 config_.shaping.literal_gamma);
  pending_potential_ = phi_next;
  return res;
}

EpisodeMetrics Simulation::metrics() const {
  EpisodeMetrics m;
  m.makespan = last_event_time_;
  m.decisions = decisions_;
  m.orders = static_cast<int>(world_.orders.size());
  m.completed = completed_;
  m.infeasible = infeasible_;
  double sum = 0.0;
  for (const auto& os : world_.orders) {
    if (os.status == OrderStatus::Completed) sum += *os.order.completion - os.order.arrival;
  }
  m.mean_completion = completed_ > 0 ? sum / completed_ : 0.0;
  const double hours = m.makespan / 3600.0;
  for (const auto& w : world_.workstations) {
    m.deliveries += w.deliveries;
    m.items_picked += w.items_picked;
    m.workstation_throughput.push_back(hours > 0 ? w.deliveries / hours : 0.0);
  }
  if (!m.workstation_throughput.empty()) {
    for (double t : m.workstation_throughput) m.throughput += t;
    m.throughput /= static_cast<double>(m.workstation_throughput.size());
  }
  m.hit_rate = m.deliveries > 0 ? static_cast<double>(m.items_picked) / m.deliveries : 0.0;
  long travel = 0;
  for (const auto& r : world_.robots) travel += r.travel;
  m.mean_travel = world_.robots.empty() ? 0.0 : static_cast<double>(travel) / world_.num_robots();
  return m;
}

}  // namespace rmfs
