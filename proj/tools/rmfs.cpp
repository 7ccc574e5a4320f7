// rmfs: generate instances, run allocator x scheduler grids, sweep parameters, replay logs and
// serve the learner protocol.

#include "rmfs/datagen.hpp"
#include "rmfs/dataset.hpp"
#include "rmfs/episode.hpp"
#include "rmfs/policies.hpp"
#include "rmfs/protocol.hpp"
#include "rmfs/server.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

namespace fs = std::filesystem;
using namespace rmfs;

namespace {

constexpr const char* kResultsSchema = "# rmfs-results v1";

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw InputError("empty list '" + text + "'");
  return out;
}

// "3", "0..4" or "1,5,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split_list(text)) {
    const auto dots = part.find("..");
    try {
      if (dots == std::string::npos) {
        out.push_back(std::stoull(part));
      } else {
        const auto lo = std::stoull(part.substr(0, dots));
        const auto hi = std::stoull(part.substr(dots + 2));
        if (hi < lo || hi - lo > 100000) throw InputError("bad seed range '" + part + "'");
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      }
    } catch (const std::logic_error&) {
      throw InputError("bad seed '" + part + "'");
    }
  }
  return out;
}

struct RunOptions {
  std::string dataset_path;
  std::string scenario = "synth";
  std::string scale = "desk";
  std::string allocators = "soft";
  std::string schedulers = "bias";
  std::string seeds = "0";
  int k = 10;
  double p = 8.0;
  double gamma = 0.99;
  int k1 = 50;
  int k2 = 50;
  std::string endpoint;
  std::string out;
  std::string log_dir;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--dataset", o.dataset_path, "Dataset file; otherwise one instance is generated per seed")
      ->check(CLI::ExistingFile);
  cmd->add_option("--scenario", o.scenario, "Generator scenario (synth, real)")->capture_default_str();
  cmd->add_option("--scale", o.scale, "Generator scale (small, medium, large, desk, micro)")
      ->capture_default_str();
  cmd->add_option("--allocator", o.allocators, "Comma list of soft, sqf, wlb, cp, random")->capture_default_str();
  cmd->add_option("--scheduler", o.schedulers, "Comma list of nearest, earliest, tsp, bias, random, remote")
      ->capture_default_str();
  cmd->add_option("--seeds", o.seeds, "Seeds: 3, 0..4 or 1,5,9")->capture_default_str();
  cmd->add_option("--k", o.k, "Soft-allocation candidate count K")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--p", o.p, "Potential norm exponent")->check(CLI::Range(1.0, 1e6))->capture_default_str();
  cmd->add_option("--gamma", o.gamma, "Reward discount")->check(CLI::Range(1e-9, 1.0))->capture_default_str();
  cmd->add_option("--k1", o.k1, "Robots kept in remote observations")->check(CLI::PositiveNumber)->capture_default_str();
  cmd->add_option("--k2", o.k2, "Occupied locations kept in remote observations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--endpoint", o.endpoint, "Remote policy host:port (default RMFS_ENDPOINT or 127.0.0.1:7878)");
  cmd->add_option("--out", o.out, "Results CSV");
  cmd->add_option("--log-dir", o.log_dir, "Write one event log per run into this directory");
}

struct Row {
  std::string dataset;
  std::string allocator;
  std::string scheduler;
  std::uint64_t seed = 0;
  std::string param;
  EpisodeMetrics metrics;
  double compute_ms = 0.0;
  std::string error;
};

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

class Grid {
 public:
  explicit Grid(RunOptions o) : o_(std::move(o)) {
    for (const auto& a : split_list(o_.allocators)) allocators_.push_back(allocator_from_string(a));
    schedulers_ = split_list(o_.schedulers);
    for (const auto& s : schedulers_) {
      if (s != "remote") make_scheduler(s, 0);
    }
    seeds_ = parse_seeds(o_.seeds);
    if (!o_.dataset_path.empty()) fixed_ = load_dataset(o_.dataset_path);
    if (o_.endpoint.empty()) o_.endpoint = endpoint_from_env();
    if (!o_.log_dir.empty()) fs::create_directories(o_.log_dir);
  }

  std::vector<Row> run(const std::string& param_label, const std::function<void(SimConfig&)>& tweak) {
    std::vector<Row> rows;
    for (auto seed : seeds_) {
      const Dataset d = fixed_ ? *fixed_ : gen_instance(ScenarioConfig::preset(o_.scenario, o_.scale, seed));
      for (auto alloc : allocators_) {
        for (const auto& sched_name : schedulers_) {
          rows.push_back(run_one(d, alloc, sched_name, seed, param_label, tweak));
        }
      }
    }
    return rows;
  }

 private:
  Row run_one(const Dataset& d, AllocatorKind alloc, const std::string& sched_name, std::uint64_t seed,
              const std::string& param_label, const std::function<void(SimConfig&)>& tweak) {
    Row row{d.name, to_string(alloc), sched_name, seed, param_label, {}, 0.0, {}};
    SimConfig cfg;
    cfg.allocator = alloc;
    cfg.top_k = o_.k;
    cfg.shaping.p = o_.p;
    cfg.shaping.gamma = o_.gamma;
    cfg.seed = seed;
    if (tweak) tweak(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::unique_ptr<Scheduler> sched;
      if (sched_name == "remote") {
        sched = std::make_unique<RemoteScheduler>(o_.endpoint, o_.k1, o_.k2);
      } else {
        sched = make_scheduler(sched_name, seed);
      }
      const auto result = run_episode(d, cfg, *sched);
      row.metrics = result.metrics;
      if (!o_.log_dir.empty()) {
        std::string file = d.name + "-" + row.allocator + "-" + sched_name + "-s" + std::to_string(seed);
        if (!param_label.empty()) file += "-" + param_label;
        std::ofstream f(fs::path(o_.log_dir) / (file + ".jsonl"));
        for (const auto& line : result.log) f << line << '\n';
      }
      if (result.metrics.completed + result.metrics.infeasible < result.metrics.orders) {
        row.error = "episode ended with unresolved orders";
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.compute_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (row.error.empty()) {
      spdlog::info("{} {}+{} seed {}{}: makespan {:.1f}", row.dataset, row.allocator, row.scheduler, seed,
                   param_label.empty() ? "" : " " + param_label, row.metrics.makespan);
    } else {
      spdlog::error("{} {}+{} seed {}: {}", row.dataset, row.allocator, row.scheduler, seed, row.error);
    }
    return row;
  }

  RunOptions o_;
  std::vector<AllocatorKind> allocators_;
  std::vector<std::string> schedulers_;
  std::vector<std::uint64_t> seeds_;
  std::optional<Dataset> fixed_;
};

void write_csv(const std::string& path, const std::vector<Row>& rows) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << kResultsSchema << '\n'
    << "dataset,allocator,scheduler,seed,param,makespan,mean_completion,throughput,hit_rate,"
       "mean_travel,decisions,orders,completed,infeasible,compute_ms,status,error\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    f << csv_escape(r.dataset) << ',' << r.allocator << ',' << r.scheduler << ',' << r.seed << ','
      << csv_escape(r.param) << ',' << format_double(m.makespan) << ',' << format_double(m.mean_completion)
      << ',' << format_double(m.throughput) << ',' << format_double(m.hit_rate) << ','
      << format_double(m.mean_travel) << ',' << m.decisions << ',' << m.orders << ',' << m.completed << ','
      << m.infeasible << ',' << format_double(r.compute_ms) << ',' << (r.error.empty() ? "ok" : "failed")
      << ',' << csv_escape(r.error) << '\n';
  }
}

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {NAN, NAN};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return {mean, xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0};
}

void print_summary(const std::vector<Row>& rows) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const Row*>> groups;
  for (const auto& r : rows) groups[{r.param, r.allocator, r.scheduler}].push_back(&r);
  std::printf("%-12s %-8s %-9s %4s %20s %20s %14s %14s\n", "param", "alloc", "sched", "ok", "makespan",
              "mean completion", "hit rate", "compute ms");
  for (const auto& [key, group] : groups) {
    std::vector<double> mk, mc, hr, ms;
    for (const Row* r : group) {
      if (!r->error.empty()) continue;
      mk.push_back(r->metrics.makespan);
      mc.push_back(r->metrics.mean_completion);
      hr.push_back(r->metrics.hit_rate);
      ms.push_back(r->compute_ms);
    }
    auto cell = [](const std::vector<double>& xs, int prec) {
      const auto [m, s] = mean_std(xs);
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.*f +- %.*f", prec, m, prec, s);
      return std::string(buf);
    };
    const std::string ok = std::to_string(mk.size()) + "/" + std::to_string(group.size());
    std::printf("%-12s %-8s %-9s %4s %20s %20s %14s %14s\n", std::get<0>(key).empty() ? "-" : std::get<0>(key).c_str(),
                std::get<1>(key).c_str(), std::get<2>(key).c_str(), ok.c_str(), cell(mk, 1).c_str(),
                cell(mc, 1).c_str(), cell(hr, 2).c_str(), cell(ms, 0).c_str());
  }
}

int finish(const std::vector<Row>& rows, const std::string& out) {
  if (!out.empty()) write_csv(out, rows);
  print_summary(rows);
  int failed = 0;
  for (const auto& r : rows) failed += !r.error.empty();
  if (failed) spdlog::error("{} of {} runs failed", failed, rows.size());
  return failed ? 1 : 0;
}

void setup_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("rmfs"));
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* level = std::getenv("RMFS_LOG_LEVEL");
  spdlog::set_level(level && *level ? spdlog::level::from_str(level) : spdlog::level::info);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Robotic mobile fulfillment simulator with soft order allocation"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a dataset file");
  std::string gen_scenario = "synth", gen_scale = "small", gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--scenario", gen_scenario, "synth or real")->capture_default_str();
  gen->add_option("--scale", gen_scale, "small, medium, large, desk or micro")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", gen_out, "Output file (default <name>.rmfs)");

  // run
  auto* run = app.add_subcommand("run", "Run allocator x scheduler x seed grids");
  RunOptions run_opts;
  add_run_options(run, run_opts);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Sweep K or p over a list of values");
  RunOptions sweep_opts;
  std::string sweep_param, sweep_values;
  add_run_options(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param, "K or p")->required()->check(CLI::IsMember({"K", "k", "p"}));
  sweep->add_option("--values", sweep_values, "Comma list of values")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "Re-execute an event log and verify it line by line");
  std::string replay_log_path, replay_dataset;
  replay->add_option("log", replay_log_path, "Event log")->required()->check(CLI::ExistingFile);
  replay->add_option("--dataset", replay_dataset, "Dataset file (default: regenerate from the log header)")
      ->check(CLI::ExistingFile);

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the learner protocol over TCP or stdio");
  std::string serve_endpoint;
  bool serve_stdio = false;
  serve->add_option("--endpoint", serve_endpoint, "Listen address host:port (default RMFS_ENDPOINT or 127.0.0.1:7878)");
  serve->add_flag("--stdio", serve_stdio, "Speak the protocol on stdin/stdout");

  // policy
  auto* policy = app.add_subcommand("policy", "Reference remote policy (argmax bias) for the remote scheduler");
  std::string policy_endpoint;
  policy->add_option("--endpoint", policy_endpoint, "Listen address host:port (default RMFS_ENDPOINT or 127.0.0.1:7878)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Dataset d = gen_instance(ScenarioConfig::preset(gen_scenario, gen_scale, gen_seed));
      const std::string path = gen_out.empty() ? d.name + ".rmfs" : gen_out;
      save_dataset(d, path);
      std::printf("%s: %zu shelves, %zu workstations, %zu robots, %zu orders -> %s\n", d.name.c_str(),
                  d.shelves.size(), d.workstations.size(), d.robots.size(), d.orders.size(), path.c_str());
      return 0;
    }
    if (*run) {
      Grid grid(run_opts);
      return finish(grid.run("", {}), run_opts.out);
    }
    if (*sweep) {
      Grid grid(sweep_opts);
      std::vector<Row> rows;
      for (const auto& v : split_list(sweep_values)) {
        double value = 0.0;
        try {
          value = std::stod(v);
        } catch (const std::logic_error&) {
          throw InputError("bad sweep value '" + v + "'");
        }
        std::function<void(SimConfig&)> tweak;
        std::string label;
        if (sweep_param == "p") {
          if (value < 1.0) throw InputError("p must be >= 1");
          tweak = [value](SimConfig& c) { c.shaping.p = value; };
          label = "p=" + v;
        } else {
          if (value < 1.0 || value != std::floor(value)) throw InputError("K must be a positive integer");
          tweak = [value](SimConfig& c) { c.top_k = static_cast<int>(value); };
          label = "K=" + v;
        }
        auto part = grid.run(label, tweak);
        rows.insert(rows.end(), part.begin(), part.end());
      }
      return finish(rows, sweep_opts.out);
    }
    if (*replay) {
      std::ifstream f(replay_log_path);
      std::stringstream ss;
      ss << f.rdbuf();
      const auto lines = split_lines(ss.str());
      Dataset d;
      if (!replay_dataset.empty()) {
        d = load_dataset(replay_dataset);
      } else {
        if (lines.empty()) throw InputError("empty log");
        const auto header = nlohmann::json::parse(lines.front(), nullptr, false);
        const std::string name = header.is_object() ? header.value("dataset", "") : "";
        const auto cfg = scenario_from_name(name);
        if (!cfg) throw InputError("log dataset '" + name + "' is not a generated instance; pass --dataset");
        d = gen_instance(*cfg);
      }
      const auto report = replay_log(d, lines);
      if (report.ok) {
        std::printf("replay ok: %zu lines reproduced\n", lines.size());
        return 0;
      }
      std::printf("replay diverged at line %zu: %s\n  expected: %s\n  actual:   %s\n", report.line,
                  report.message.c_str(), report.expected.c_str(), report.actual.c_str());
      return 1;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    if (*serve) {
      if (serve_stdio) {
        serve_stream(std::cin, std::cout);
        return 0;
      }
      const auto ep = parse_endpoint(serve_endpoint.empty() ? endpoint_from_env() : serve_endpoint);
      serve_tcp(ep, g_stop, [&](std::uint16_t port) { spdlog::info("listening on {}:{}", ep.host, port); });
      return 0;
    }
    if (*policy) {
      const auto ep = parse_endpoint(policy_endpoint.empty() ? endpoint_from_env() : policy_endpoint);
      serve_lines_tcp(
          ep, g_stop,
          [](const std::string& id) -> LineHandler {
            spdlog::debug("policy connection {}", id);
            return [](std::string_view line, bool&) {
              const auto frame = nlohmann::json::parse(line);
              return nlohmann::json{{"type", "action"}, {"action", bias_policy_action(frame)}}.dump();
            };
          },
          [&](std::uint16_t port) { spdlog::info("policy listening on {}:{}", ep.host, port); });
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
