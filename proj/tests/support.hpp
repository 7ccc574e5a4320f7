#pragma once

#include "rmfs/dataset.hpp"

#include <initializer_list>
#include <utility>
#include <vector>

namespace rmfs::testing {

inline ItemVector items(std::initializer_list<int> q) {
  ItemVector v(static_cast<Eigen::Index>(q.size()));
  Eigen::Index i = 0;
  for (int x : q) v[i++] = x;
  return v;
}

/// Hand-built instance. Every location in `shelf_cells` starts with one shelf (inventory from
/// `stock`, same order); `empty_cells` are spare locations.
struct Layout {
  int height = 8;
  int width = 10;
  int num_items = 1;
  double c_shelf = 10.0;
  double c_item = 4.0;
  std::vector<Position> shelf_cells;
  std::vector<ItemVector> stock;
  std::vector<Position> empty_cells;
  std::vector<Position> workstations;
  std::vector<Position> robots;
  std::vector<std::pair<double, ItemVector>> orders;  // (arrival, demand), sorted by arrival

  Dataset build(const std::string& name = "hand") const {
    Dataset d;
    d.name = name;
    d.height = height;
    d.width = width;
    d.num_items = num_items;
    d.c_shelf = c_shelf;
    d.c_item = c_item;
    for (std::size_t i = 0; i < shelf_cells.size(); ++i) {
      d.locations.push_back({static_cast<int>(d.locations.size()), shelf_cells[i], static_cast<int>(i)});
      d.shelves.push_back(stock[i]);
    }
    for (auto p : empty_cells) d.locations.push_back({static_cast<int>(d.locations.size()), p, std::nullopt});
    for (auto p : workstations) d.workstations.push_back({static_cast<int>(d.workstations.size()), p});
    d.robots = robots;
    for (const auto& [t, dem] : orders) {
      d.orders.push_back({static_cast<int>(d.orders.size()), t, dem, std::nullopt});
    }
    d.validate();
    return d;
  }
};

}  // namespace rmfs::testing
