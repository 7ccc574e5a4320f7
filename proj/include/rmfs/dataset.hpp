#pragma once

#include "rmfs/core.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rmfs {

/// A static problem instance: layout, initial inventory, fleet and the order stream.
///
/// Shelf s starts at the location whose `occupant` is s. Orders are sorted by arrival time
/// and their ids equal their index.
struct Dataset {
  static constexpr int kFormatVersion = 1;

  std::string name = "unnamed";
  int height = 1;
  int width = 1;
  int num_items = 1;
  Seconds c_shelf = 10.0;
  Seconds c_item = 4.0;
  std::vector<StorageLocation> locations;
  std::vector<ItemVector> shelves;
  std::vector<WorkstationSite> workstations;
  std::vector<Position> robots;
  std::vector<Order> orders;

  /// Throws InputError describing the first well-formedness violation.
  void validate() const;

  GridMap grid() const;
  std::vector<LocationId> initial_shelf_locations() const;
  ItemVector total_inventory() const;
};

/// Versioned line-oriented text. Item vectors are written sparsely as `item:qty` pairs and
/// times in shortest round-trip form, so load(save(d)) reproduces d exactly.
std::string to_text(const Dataset& d);
Dataset dataset_from_text(std::string_view text);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// FNV-1a 64-bit hash, rendered as 16 lowercase hex digits.
std::string content_digest(std::string_view bytes);

/// Shortest round-trip decimal rendering of a double.
std::string format_double(double v);

}  // namespace rmfs
