#include "rmfs/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rmfs {

ScenarioConfig ScenarioConfig::preset(const std::string& scenario, const std::string& scale,
                                      std::uint64_t seed) {
  ScenarioConfig c;
  c.scenario = scenario;
  c.scale = scale;
  c.seed = seed;
  if (scenario == "synth") {
    c.height = 100; c.width = 80; c.num_shelves = 1600; c.num_workstations = 23;
    c.c_shelf = 10; c.c_item = 4;
  } else if (scenario == "real") {
    c.height = 40; c.width = 72; c.num_shelves = 861; c.num_workstations = 16;
    c.c_shelf = 5; c.c_item = 2;
  } else {
    throw InputError("unknown scenario '" + scenario + "' (expected synth or real)");
  }
  if (scale == "small") {
    c.num_robots = 15; c.num_orders = 200;
  } else if (scale == "medium") {
    c.num_robots = 20; c.num_orders = 500;
  } else if (scale == "large") {
    c.num_robots = 25; c.num_orders = 1000;
  } else if (scale == "desk") {
    c.height = 20; c.width = 16; c.num_shelves = 80; c.num_workstations = 4;
    c.num_robots = 5; c.num_orders = 50; c.num_items = 20;
  } else if (scale == "micro") {
    c.height = 10; c.width = 8; c.num_shelves = 16; c.num_workstations = 2;
    c.num_robots = 2; c.num_orders = 20; c.num_items = 8;
  } else {
    throw InputError("unknown scale '" + scale + "' (expected small, medium, large, desk or micro)");
  }
  return c;
}

void ScenarioConfig::validate() const {
  if (height < 4 || width < 3) throw InputError("scenario grid too small");
  if (num_shelves < 0 || num_workstations < 1 || num_robots < 0 || num_orders < 0) {
    throw InputError("scenario entity counts out of range");
  }
  if (num_workstations > width) throw InputError("more workstations than border cells");
  if (num_items < 1) throw InputError("num_items must be positive");
  if (wave_size < 1 || wave_interval < 0 || wave_jitter < 0) throw InputError("bad wave parameters");
  if (pareto_alpha <= 0 || max_lines < 1 || max_quantity < 1) throw InputError("bad Pareto parameters");
  if (shelf_max_types < 1 || shelf_max_quantity < 1) throw InputError("bad shelf stocking parameters");
}

Seconds gen_arrival_time(const ScenarioConfig& config, Rng& rng) {
  const int total = std::max(config.num_orders, 1);
  const int waves = (total + config.wave_size - 1) / config.wave_size;
  std::uniform_int_distribution<int> wave(0, waves - 1);
  std::uniform_int_distribution<int> jitter(-config.wave_jitter, config.wave_jitter);
  const int k = wave(rng);
  const int eps = jitter(rng);
  return std::max(0.0, k * config.wave_interval + eps);
}

int truncated_pareto_from_uniform(double alpha, int x_max, double u) {
  if (alpha <= 0 || x_max < 1) throw InputError("truncated_pareto: alpha > 0 and x_max >= 1 required");
  if (u < 0.0 || u >= 1.0) throw InputError("truncated_pareto: u must lie in [0, 1)");
  const double p = std::pow(1.0 - u, -1.0 / alpha) - 1.0;
  const double x = std::floor(p + 1.0);
  return x >= x_max ? x_max : static_cast<int>(x);
}

int truncated_pareto(double alpha, int x_max, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  if (u >= 1.0) u = std::nextafter(1.0, 0.0);
  return truncated_pareto_from_uniform(alpha, x_max, u);
}

namespace {

// Storage cells in aisle-separated blocks: 2 columns wide, 5 rows deep, one-cell aisles.
// Row 0 holds workstations and row 1 is the robot aisle.
std::vector<Position> storage_cells(const ScenarioConfig& c) {
  std::vector<Position> cells;
  for (int y = 2; y < c.height; ++y) {
    if ((y - 2) % 6 == 5) continue;
    for (int x = 1; x < c.width; ++x) {
      if ((x - 1) % 3 == 2) continue;
      cells.push_back({x, y});
    }
  }
  return cells;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

}  // namespace

Dataset gen_instance(const ScenarioConfig& c) {
  c.validate();
  Rng rng(c.seed);
  Dataset d;
  d.name = c.scenario + "-" + c.scale + "-s" + std::to_string(c.seed);
  d.height = c.height;
  d.width = c.width;
  d.num_items = c.num_items;
  d.c_shelf = c.c_shelf;
  d.c_item = c.c_item;

  for (int w = 0; w < c.num_workstations; ++w) {
    const int x = static_cast<int>((w + 0.5) * c.width / c.num_workstations);
    d.workstations.push_back({w, {x, 0}});
  }
  for (int r = 0; r < c.num_robots; ++r) {
    const int x = static_cast<int>((r + 0.5) * c.width / std::max(c.num_robots, 1));
    d.robots.push_back({std::min(x, c.width - 1), 1});
  }

  const int spare = std::max({static_cast<int>(std::ceil(c.spare_location_ratio * c.num_shelves)),
                              c.num_robots, 1});
  const int num_locations = c.num_shelves + spare;
  auto cells = storage_cells(c);
  if (static_cast<int>(cells.size()) < num_locations) {
    throw InputError("layout holds " + std::to_string(cells.size()) + " storage cells, need " +
                     std::to_string(num_locations));
  }
  for (int l = 0; l < num_locations; ++l) d.locations.push_back({l, cells[l], std::nullopt});
  std::vector<int> slots(num_locations);
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  for (int s = 0; s < c.num_shelves; ++s) d.locations[slots[s]].occupant = s;

  // Stock each shelf with a random subset of item types.
  std::vector<int> all_items(c.num_items);
  std::iota(all_items.begin(), all_items.end(), 0);
  std::uniform_int_distribution<int> types_dist(1, std::min(c.shelf_max_types, c.num_items));
  std::uniform_int_distribution<int> qty_dist(1, c.shelf_max_quantity);
  std::vector<std::vector<ShelfId>> stocked_by(c.num_items);
  d.shelves.assign(c.num_shelves, ItemVector::Zero(c.num_items));
  for (int s = 0; s < c.num_shelves; ++s) {
    std::shuffle(all_items.begin(), all_items.end(), rng);
    const int m = types_dist(rng);
    for (int j = 0; j < m; ++j) {
      d.shelves[s][all_items[j]] = qty_dist(rng);
      stocked_by[all_items[j]].push_back(s);
    }
  }
  if (c.num_orders > 0 && c.num_shelves == 0) {
    throw InputError("cannot generate orders without shelves");
  }

  ItemVector remaining = d.total_inventory();
  const auto top_up = [&](int item, int amount) {
    const auto& holders = stocked_by[item];
    std::uniform_int_distribution<int> any_shelf(0, c.num_shelves - 1);
    const ShelfId s = holders.empty() ? any_shelf(rng) : pick(holders, rng);
    if (d.shelves[s][item] == 0) stocked_by[item].push_back(s);
    d.shelves[s][item] += amount;
    remaining[item] += amount;
  };

  std::vector<Order> orders;
  for (int o = 0; o < c.num_orders; ++o) {
    Order ord;
    ord.arrival = gen_arrival_time(c, rng);
    ord.demand = ItemVector::Zero(c.num_items);
    const int lines = std::min(truncated_pareto(c.pareto_alpha, c.max_lines, rng), c.num_items);
    for (int l = 0; l < lines; ++l) {
      std::vector<int> in_stock;
      for (int i = 0; i < c.num_items; ++i) {
        if (remaining[i] > 0 && ord.demand[i] == 0) in_stock.push_back(i);
      }
      if (in_stock.empty()) {
        std::vector<int> unused;
        for (int i = 0; i < c.num_items; ++i) {
          if (ord.demand[i] == 0) unused.push_back(i);
        }
        const int item = pick(unused, rng);
        top_up(item, c.shelf_max_quantity);
        in_stock.push_back(item);
      }
      const int item = pick(in_stock, rng);
      const int qty = truncated_pareto(c.pareto_alpha, c.max_quantity, rng);
      if (remaining[item] < qty) top_up(item, qty - remaining[item]);
      ord.demand[item] = qty;
      remaining[item] -= qty;
    }
    orders.push_back(std::move(ord));
  }
  std::stable_sort(orders.begin(), orders.end(),
                   [](const Order& a, const Order& b) { return a.arrival < b.arrival; });
  for (std::size_t o = 0; o < orders.size(); ++o) orders[o].id = static_cast<OrderId>(o);
  d.orders = std::move(orders);

  d.validate();
  return d;
}

std::optional<ScenarioConfig> scenario_from_name(const std::string& name) {
  const auto a = name.find('-');
  const auto b = name.rfind("-s");
  if (a == std::string::npos || b == std::string::npos || b <= a) return std::nullopt;
  const std::string digits = name.substr(b + 2);
  if (digits.empty() || digits.size() > 19 ||
      digits.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  try {
    return ScenarioConfig::preset(name.substr(0, a), name.substr(a + 1, b - a - 1),
                                  std::stoull(digits));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace rmfs
