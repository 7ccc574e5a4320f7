// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero when a hard
// criterion fails; the directional makespan comparison is reported but never fails the run.

#include "rmfs/allocation.hpp"
#include "rmfs/datagen.hpp"
#include "rmfs/episode.hpp"
#include "rmfs/protocol.hpp"
#include "rmfs/rl_math.hpp"
#include "rmfs/server.hpp"
#include "rmfs/soft_alloc.hpp"

#include "cp_oracle.hpp"
#include "log_checks.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace rmfs;
using namespace rmfs::testing;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check, bool soft = false) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (!o.pass && !soft) ++g_failures;
  std::printf("%s %s: %s (%.2f s)%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs,
              !o.pass && soft ? " [soft criterion, flagged]" : "");
  std::fflush(stdout);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Dataset desk(std::uint64_t seed) { return gen_instance(ScenarioConfig::preset("synth", "desk", seed)); }

SimConfig config_for(const std::string& allocator, std::uint64_t seed) {
  SimConfig cfg;
  cfg.allocator = allocator_from_string(allocator);
  cfg.seed = seed;
  return cfg;
}

EpisodeResult run(const Dataset& d, const std::string& allocator, const std::string& scheduler,
                  std::uint64_t seed) {
  auto sched = make_scheduler(scheduler, seed);
  return run_episode(d, config_for(allocator, seed), *sched);
}

double max_log_time(const std::vector<std::string>& log) {
  double t = 0;
  for (const auto& line : log) {
    const auto j = json::parse(line);
    if (j.contains("t")) t = std::max(t, j["t"].get<double>());
  }
  return t;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Criteria ----------------------------------------------------------------------------------

Outcome soft_reversibility() {
  const auto t0 = Clock::now();
  std::mt19937 rng(2024);
  double worst = 0;
  long bit_exact_checks = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const int ns = 5 + static_cast<int>(rng() % 80), nw = 1 + static_cast<int>(rng() % 5);
    const int k = 1 + static_cast<int>(rng() % 10);
    SoftAllocState st(ns, nw);
    std::map<OrderId, Eigen::MatrixXd> live;
    OrderId next = 0;
    for (int op = 0; op < 30; ++op) {
      const auto roll = rng() % 4;
      if (roll == 0 && !live.empty()) {
        auto it = live.begin();
        std::advance(it, static_cast<long>(rng() % live.size()));
        st.retract_order(it->first);
        live.erase(it);
      } else if (roll == 1) {
        // Apply then retract at once: the state must come back bit for bit.
        const Eigen::VectorXd hs = st.shelf_heat(), hw = st.workstation_heat();
        std::vector<std::vector<OrderId>> sets;
        for (int s = 0; s < ns; ++s) sets.push_back(st.soft_orders(s));
        st.apply_arrival(next, random_matching(rng, ns, nw), k);
        st.retract_order(next++);
        ++bit_exact_checks;
        for (int s = 0; s < ns; ++s) {
          if (st.shelf_heat()[s] != hs[s] || st.soft_orders(s) != sets[static_cast<std::size_t>(s)]) {
            return {false, "immediate retract not bit-exact in sequence " + std::to_string(seq)};
          }
        }
        for (int w = 0; w < nw; ++w) {
          if (st.workstation_heat()[w] != hw[w]) return {false, "workstation heat drifted in sequence " + std::to_string(seq)};
        }
      } else {
        auto m = random_matching(rng, ns, nw);
        st.apply_arrival(next, m, k);
        live.emplace(next++, std::move(m));
      }
    }
    const auto r = recompute(live, ns, nw, k);
    worst = std::max({worst, (st.shelf_heat() - r.hs).cwiseAbs().maxCoeff(),
                      (st.workstation_heat() - r.hw).cwiseAbs().maxCoeff()});
    for (int s = 0; s < ns; ++s) {
      const auto got = st.soft_orders(s);
      if (std::set<OrderId>(got.begin(), got.end()) != r.sets[static_cast<std::size_t>(s)]) {
        return {false, "soft set mismatch in sequence " + std::to_string(seq)};
      }
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0, "1000 sequences, max heat error " + fmt(worst) + ", " +
                                            std::to_string(bit_exact_checks) + " bit-exact retracts, " +
                                            fmt(secs) + " s (limit 10 s)"};
}

Outcome topk_oracle() {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> len(1, 500), kk(1, 60);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto m = random_matching(rng, len(rng), 1);
    const int k = kk(rng);
    if (topk_candidates(m.col(0), k) != brute_topk(m.col(0), k)) {
      return {false, "column " + std::to_string(trial) + " differs"};
    }
  }
  return {true, "1000 columns, N_s <= 500, exact"};
}

Outcome telescoping() {
  double worst = 0;
  const std::vector<std::string> allocators{"soft", "sqf", "wlb", "cp", "random"};
  const std::vector<std::string> schedulers{"nearest", "earliest", "bias", "random", "tsp"};
  for (int ep = 0; ep < 50; ++ep) {
    const auto d = gen_instance(ScenarioConfig::preset(ep % 2 ? "real" : "synth", "micro", 100 + ep));
    SimConfig cfg = config_for(allocators[ep % 5], ep);
    cfg.shaping.gamma = 1.0;
    cfg.shaping.p = std::vector<double>{2, 4, 8, 16}[ep % 4];
    auto sched = make_scheduler(schedulers[(ep / 5) % 5], ep);
    // Potential computed here straight from the robot clocks.
    auto phi = [&](const Simulation& sim) {
      const auto t = sim.active_times();
      double acc = 0;
      for (Eigen::Index i = 0; i < t.size(); ++i) acc += std::pow(t[i], cfg.shaping.p);
      return t.size() ? std::pow(acc / static_cast<double>(t.size()), 1.0 / cfg.shaping.p) : 0.0;
    };
    Simulation sim(d, cfg);
    const double phi0 = phi(sim);
    double sum = 0;
    while (!sim.done()) sum += sim.step(sched->choose(sim)).reward;
    const double err = std::abs(sum - (phi0 - phi(sim)));
    worst = std::max(worst, err);
  }
  return {worst <= 1e-6, "50 episodes, gamma = 1, max |sum r - (phi_0 - phi_T)| = " + fmt(worst)};
}

Outcome pnorm_bounds() {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> len(1, 30);
  std::uniform_real_distribution<double> u(0.0, 5000.0);
  const std::vector<double> ps{2, 4, 8, 16, 32};
  const double tol = 1e-9;
  for (int trial = 0; trial < 10000; ++trial) {
    Eigen::VectorXd t(len(rng));
    for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = trial % 7 == 0 ? std::floor(u(rng) / 1000) : u(rng);
    const double mx = t.maxCoeff();
    const double n = static_cast<double>(t.size());
    double prev = -1;
    for (double p : ps) {
      const double phi = rl::potential(t, p);
      const double scale = std::max(1.0, mx);
      if (phi < prev - tol * scale) return {false, "not monotone in p at vector " + std::to_string(trial)};
      if (phi > mx + tol * scale) return {false, "exceeds max at vector " + std::to_string(trial)};
      if (mx > std::pow(n, 1.0 / p) * phi + tol * scale) {
        return {false, "max above n^(1/p) phi at vector " + std::to_string(trial)};
      }
      prev = phi;
    }
  }
  return {true, "10^4 vectors, p in {2,4,8,16,32}, relative tolerance 1e-9"};
}

Outcome time_aware_gae() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-5, 5), dt(0, 40);
  std::uniform_int_distribution<int> len(1, 200);
  double unit_err = 0, direct_err = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = len(rng);
    Eigen::VectorXd delta(n), dtau(n);
    for (int i = 0; i < n; ++i) {
      delta[i] = u(rng);
      dtau[i] = trial % 2 ? std::floor(dt(rng)) : dt(rng);
    }
    const double gamma = 0.9 + 0.0999 * (trial % 10) / 10.0, lambda = 0.95;
    unit_err = std::max(unit_err, (rl::gae(delta, Eigen::VectorXd::Ones(n), gamma, lambda) -
                                   standard_gae(delta, gamma, lambda)).cwiseAbs().maxCoeff());
    direct_err = std::max(direct_err, (rl::gae(delta, dtau, gamma, lambda) -
                                       direct_gae(delta, dtau, gamma, lambda)).cwiseAbs().maxCoeff());
  }
  return {unit_err <= 1e-10 && direct_err <= 1e-8,
          "unit-step error " + fmt(unit_err) + " (1e-10), direct-sum error " + fmt(direct_err) + " (1e-8)"};
}

Outcome cp_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(99);
  int feasible = 0;
  for (int i = 0; i < 200; ++i) {
    const auto p = random_cp_problem(rng, i % 8 != 0);
    const auto expected = brute_force_objective(p);
    const auto got = cp_solve(p);
    if (expected.has_value() != got.has_value()) return {false, "feasibility differs on instance " + std::to_string(i)};
    if (!got) continue;
    ++feasible;
    if (got->objective != *expected) {
      return {false, "instance " + std::to_string(i) + ": " + std::to_string(got->objective) + " vs optimum " +
                         std::to_string(*expected)};
    }
    const auto why = check_cp_solution(p, *got);
    if (!why.empty()) return {false, "instance " + std::to_string(i) + ": " + why};
  }
  const double secs = seconds_since(t0);
  return {secs < 60.0, "200 instances (" + std::to_string(feasible) + " feasible) equal exhaustive optimum, " +
                           fmt(secs) + " s (limit 60 s)"};
}

Outcome determinism_replay() {
  const std::vector<std::string> schedulers{"nearest", "earliest", "tsp", "bias", "random"};
  const std::vector<std::string> allocators{"soft", "wlb", "sqf", "cp", "random"};
  int pairs = 0;
  for (int seed = 0; seed < 4; ++seed) {
    const auto d = desk(static_cast<std::uint64_t>(seed));
    for (std::size_t s = 0; s < schedulers.size(); ++s) {
      const auto& alloc = allocators[(s + static_cast<std::size_t>(seed)) % allocators.size()];
      const auto a = run(d, alloc, schedulers[s], static_cast<std::uint64_t>(seed));
      const auto b = run(d, alloc, schedulers[s], static_cast<std::uint64_t>(seed));
      const std::string tag = "seed " + std::to_string(seed) + " " + alloc + "+" + schedulers[s];
      if (a.log != b.log) return {false, tag + ": logs differ between runs"};
      const auto rep = replay_log(d, a.log);
      if (!rep.ok) return {false, tag + ": replay diverged at line " + std::to_string(rep.line)};
      const auto why = check_log(d, a.log);
      if (!why.empty()) return {false, tag + ": " + why};
      ++pairs;
    }
  }
  return {true, std::to_string(pairs) + " (seed, policy) pairs byte-identical, replayed, invariants hold"};
}

Outcome end_to_end_grid() {
  const std::vector<std::string> allocators{"soft", "sqf", "wlb", "cp", "random"};
  const std::vector<std::string> schedulers{"nearest", "earliest", "tsp", "bias", "random"};
  const auto d = desk(1);
  int combos = 0;
  for (const auto& a : allocators) {
    for (const auto& s : schedulers) {
      const auto r = run(d, a, s, 1);
      const auto& m = r.metrics;
      const std::string tag = a + "+" + s;
      if (m.orders != static_cast<int>(d.orders.size())) return {false, tag + ": order count mismatch"};
      if (m.completed + m.infeasible != m.orders) {
        return {false, tag + ": " + std::to_string(m.completed) + " of " + std::to_string(m.orders - m.infeasible) +
                           " feasible orders completed"};
      }
      if (m.makespan != max_log_time(r.log)) return {false, tag + ": makespan differs from last event time"};
      ++combos;
    }
  }
  return {true, std::to_string(combos) + " allocator x scheduler combinations on the 20x16 desk instance "
                "complete every feasible order; makespan equals last event time"};
}

double mean_makespan(const std::string& allocator, const std::string& scheduler, int seeds,
                     std::vector<double>* per_seed = nullptr) {
  double sum = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    const double m = run(desk(static_cast<std::uint64_t>(seed)), allocator, scheduler,
                         static_cast<std::uint64_t>(seed)).metrics.makespan;
    if (per_seed) per_seed->push_back(m);
    sum += m;
  }
  return sum / seeds;
}

Outcome directional_ordering() {
  const int seeds = 20;
  std::vector<double> wlb, sqf;
  const double a = mean_makespan("wlb", "nearest", seeds, &wlb);
  const double b = mean_makespan("sqf", "earliest", seeds, &sqf);
  const bool ok = a < b;
  if (!ok) {
    std::ofstream out("acceptance_directional_seeds.txt");
    out << "# seed wlb+nearest sqf+earliest (synth-desk)\n";
    for (int s = 0; s < seeds; ++s) out << s << ' ' << wlb[static_cast<std::size_t>(s)] << ' ' << sqf[static_cast<std::size_t>(s)] << '\n';
  }
  return {ok, "mean makespan over seeds 0..19: WLB+Nearest " + fmt(a) + " vs SQF+Earliest " + fmt(b) +
                  (ok ? "" : "; seeds archived in acceptance_directional_seeds.txt")};
}

Outcome ablation_ordering() {
  const int seeds = 20;
  const double a = mean_makespan("soft", "bias", seeds);
  const double b = mean_makespan("random", "random", seeds);
  return {a < b, "mean makespan over seeds 0..19: soft+bias " + fmt(a) + " vs random+random " + fmt(b)};
}

/// The reference bias policy fed by in-process payloads, for comparison with the remote path.
class LocalPayloadScheduler : public Scheduler {
 public:
  LocalPayloadScheduler(int k1, int k2) : k1_(k1), k2_(k2) {}
  std::string name() const override { return "local-payload"; }
  int choose(const Simulation& sim) override {
    return bias_policy_action(json::parse(decision_payload(sim, k1_, k2_).dump()));
  }

 private:
  int k1_, k2_;
};

Outcome protocol_suite() {
  // Remote versus local.
  std::atomic<bool> stop{false};
  std::atomic<int> port{0};
  std::thread policy([&] {
    serve_lines_tcp({"127.0.0.1", 0}, stop,
                    [](const std::string&) -> LineHandler {
                      return [](std::string_view line, bool&) {
                        return json{{"type", "action"}, {"action", bias_policy_action(json::parse(line))}}.dump();
                      };
                    },
                    [&](std::uint16_t p) { port = p; });
  });
  while (port == 0) std::this_thread::yield();
  std::string failure;
  for (int i = 0; i < 10 && failure.empty(); ++i) {
    const auto d = i % 2 ? gen_instance(ScenarioConfig::preset("real", "micro", static_cast<std::uint64_t>(i))) : desk(static_cast<std::uint64_t>(i));
    const auto cfg = config_for(i % 3 ? "soft" : "wlb", static_cast<std::uint64_t>(i));
    LocalPayloadScheduler local(50, 50);
    const auto expected = run_episode(d, cfg, local);
    RemoteScheduler remote("127.0.0.1:" + std::to_string(port.load()), 50, 50);
    const auto got = run_episode(d, cfg, remote);
    if (got.log != expected.log) failure = "remote run " + std::to_string(i) + " diverged from the local run";
  }
  stop = true;
  policy.join();
  if (!failure.empty()) return {false, failure};

  // Fuzz: every malformed frame gets exactly one well-formed reply and the session survives.
  std::mt19937_64 rng(17);
  Session fuzz("fuzz");
  const std::vector<std::string> seeds = {
      "{\"type\":\"hello\"}", "{\"type\":\"reset\",\"generate\":{\"scale\":\"micro\",\"seed\":3}}",
      "{\"type\":\"action\",\"action\":0}", "{\"type\":\"result\",\"include_log\":true}", "{\"type\":\"bye\"}",
      "{\"type\":\"reset\",\"k1\":-1}", "{\"type\":\"reset\",\"reward\":{\"p\":0.5}}", "[1,2,3]",
      "{\"type\":\"action\",\"action\":null}", "{\"type\":\"reset\",\"dataset_text\":\"rmfs-dataset\"}"};
  std::uniform_int_distribution<int> byte(0, 255);
  long frames = 0;
  for (; frames < 10000; ++frames) {
    std::string line = seeds[rng() % seeds.size()];
    const int mutations = static_cast<int>(rng() % 4);
    for (int m = 0; m < mutations && !line.empty(); ++m) {
      const auto pos = static_cast<std::size_t>(rng() % line.size());
      switch (rng() % 3) {
        case 0: line[pos] = static_cast<char>(byte(rng)); break;
        case 1: line.erase(pos, 1 + rng() % 8); break;
        default: line.insert(pos, 1, static_cast<char>(byte(rng))); break;
      }
    }
    if (line.find("\"bye\"") != std::string::npos) line = "{\"type\":\"by\"}";
    const auto reply = json::parse(fuzz.handle(line), nullptr, false);
    if (reply.is_discarded() || !reply.contains("type") || reply.value("seq", -1L) != frames) {
      return {false, "fuzz frame " + std::to_string(frames) + " broke the session"};
    }
  }

  // Local step latency at the large synthetic scale with K1 = K2 = 50.
  Session s("lat");
  s.handle(R"({"type":"hello"})");
  auto st = json::parse(s.handle(
      R"({"type":"reset","k1":50,"k2":50,"generate":{"scenario":"synth","scale":"large","seed":0}})"));
  std::vector<double> ms;
  const auto budget = Clock::now();
  while (!st["done"].get<bool>() && ms.size() < 4000 && seconds_since(budget) < 240) {
    const std::string frame = json{{"type", "action"}, {"action", bias_policy_action(st)}}.dump();
    const auto t0 = Clock::now();
    const std::string reply = s.handle(frame);
    ms.push_back(seconds_since(t0) * 1000.0);
    st = json::parse(reply);
    if (st["type"] != "state") return {false, "latency run got " + reply.substr(0, 200)};
  }
  std::sort(ms.begin(), ms.end());
  const double p99 = ms.empty() ? 0 : ms[static_cast<std::size_t>(0.99 * static_cast<double>(ms.size() - 1))];
  return {p99 < 100.0, "10 remote runs equal local, " + std::to_string(frames) +
                           " fuzz frames answered, step p99 " + fmt(p99) + " ms over " + std::to_string(ms.size()) +
                           " synth-large steps (limit 100 ms)"};
}

}  // namespace

int main() {
  report("soft-allocation reversibility", soft_reversibility);
  report("top-K oracle", topk_oracle);
  report("shaped reward telescoping", telescoping);
  report("p-norm bounds", pnorm_bounds);
  report("time-aware GAE", time_aware_gae);
  report("CP allocator optimality", cp_optimality);
  report("determinism and replay", determinism_replay);
  report("end-to-end grid", end_to_end_grid);
  report("directional ordering WLB+Nearest < SQF+Earliest", directional_ordering, true);
  report("ablation soft+bias < random+random", ablation_ordering);
  report("protocol equivalence, fuzz and latency", protocol_suite);
  std::printf("summary: %d hard failure(s)\n", g_failures);
  return g_failures ? 1 : 0;
}
