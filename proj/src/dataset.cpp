#include "rmfs/dataset.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rmfs {

std::string content_digest(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void Dataset::validate() const {
  if (height < 1 || width < 1) throw InputError("dataset: grid dimensions must be positive");
  if (num_items < 1) throw InputError("dataset: num_items must be positive");
  if (c_shelf < 0 || c_item < 0) throw InputError("dataset: processing constants must be >= 0");
  if (workstations.empty()) throw InputError("dataset: at least one workstation required");

  GridMap g = grid();  // throws on overlapping or out-of-bounds fixed entities
  for (const auto& r : robots) {
    if (!g.in_bounds(r)) throw InputError("dataset: robot outside the grid");
  }

  std::vector<int> seen(shelves.size(), 0);
  for (std::size_t l = 0; l < locations.size(); ++l) {
    if (locations[l].id != static_cast<int>(l)) throw InputError("dataset: location ids must be dense");
    if (auto s = locations[l].occupant) {
      if (*s < 0 || *s >= static_cast<int>(shelves.size())) {
        throw InputError("dataset: location references unknown shelf");
      }
      ++seen[*s];
    }
  }
  for (std::size_t s = 0; s < shelves.size(); ++s) {
    if (seen[s] != 1) {
      throw InputError("dataset: shelf " + std::to_string(s) + " must occupy exactly one location");
    }
    if (shelves[s].size() != num_items) throw InputError("dataset: shelf inventory length mismatch");
    if ((shelves[s].array() < 0).any()) throw InputError("dataset: negative inventory");
  }
  for (std::size_t w = 0; w < workstations.size(); ++w) {
    if (workstations[w].id != static_cast<int>(w)) {
      throw InputError("dataset: workstation ids must be dense");
    }
  }
  Seconds prev = 0.0;
  for (std::size_t o = 0; o < orders.size(); ++o) {
    const auto& ord = orders[o];
    if (ord.id != static_cast<int>(o)) throw InputError("dataset: order ids must equal their index");
    if (ord.arrival < 0) throw InputError("dataset: negative arrival time");
    if (ord.arrival < prev) throw InputError("dataset: orders must be sorted by arrival");
    prev = ord.arrival;
    if (ord.demand.size() != num_items) throw InputError("dataset: order demand length mismatch");
    if ((ord.demand.array() < 0).any()) throw InputError("dataset: negative demand");
    if (ord.demand.sum() == 0) {
      throw InputError("dataset: order " + std::to_string(o) + " has empty demand");
    }
  }
}

GridMap Dataset::grid() const {
  GridMap g(height, width);
  for (const auto& l : locations) g.place(l.pos, CellKind::Storage);
  for (const auto& w : workstations) g.place(w.pos, CellKind::Workstation);
  return g;
}

std::vector<LocationId> Dataset::initial_shelf_locations() const {
  std::vector<LocationId> where(shelves.size(), -1);
  for (const auto& l : locations) {
    if (l.occupant) where[*l.occupant] = l.id;
  }
  return where;
}

ItemVector Dataset::total_inventory() const {
  ItemVector total = ItemVector::Zero(num_items);
  for (const auto& q : shelves) total += q;
  return total;
}

namespace {

void write_items(std::ostream& os, const ItemVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0) os << ' ' << i << ':' << v[i];
  }
}

class LineReader {
 public:
  explicit LineReader(std::string_view text) : text_(text) {}

  std::istringstream next() {
    while (pos_ <= text_.size()) {
      auto end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view line = text_.substr(pos_, end - pos_);
      pos_ = end + 1;
      ++line_no_;
      if (line.empty() || line.front() == '#') continue;
      return std::istringstream(std::string(line));
    }
    fail("unexpected end of file");
  }

  std::istringstream expect(const std::string& keyword) {
    auto is = next();
    std::string kw;
    is >> kw;
    if (kw != keyword) fail("expected '" + keyword + "', got '" + kw + "'");
    return is;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("dataset line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_no_ = 0;
};

template <typename T>
T read(std::istringstream& is, const LineReader& r, const char* what) {
  T v{};
  if (!(is >> v)) r.fail(std::string("cannot read ") + what);
  return v;
}

double read_double(std::istringstream& is, const LineReader& r, const char* what) {
  std::string tok;
  if (!(is >> tok)) r.fail(std::string("cannot read ") + what);
  double v = 0;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
    r.fail(std::string("bad number for ") + what + ": " + tok);
  }
  return v;
}

ItemVector read_items(std::istringstream& is, const LineReader& r, int num_items) {
  ItemVector v = ItemVector::Zero(num_items);
  std::string tok;
  while (is >> tok) {
    const auto colon = tok.find(':');
    if (colon == std::string::npos) r.fail("bad item entry '" + tok + "'");
    int item = 0, qty = 0;
    auto a = std::from_chars(tok.data(), tok.data() + colon, item);
    auto b = std::from_chars(tok.data() + colon + 1, tok.data() + tok.size(), qty);
    if (a.ec != std::errc() || b.ec != std::errc() || b.ptr != tok.data() + tok.size()) {
      r.fail("bad item entry '" + tok + "'");
    }
    if (item < 0 || item >= num_items) r.fail("item id out of range in '" + tok + "'");
    v[item] = qty;
  }
  return v;
}

}  // namespace

std::string to_text(const Dataset& d) {
  std::ostringstream os;
  os << "rmfs-dataset " << Dataset::kFormatVersion << '\n';
  os << "name " << d.name << '\n';
  os << "grid " << d.height << ' ' << d.width << '\n';
  os << "items " << d.num_items << '\n';
  os << "timing " << format_double(d.c_shelf) << ' ' << format_double(d.c_item) << '\n';
  os << "locations " << d.locations.size() << '\n';
  for (const auto& l : d.locations) {
    os << "L " << l.id << ' ' << l.pos.x << ' ' << l.pos.y << ' ';
    if (l.occupant) os << *l.occupant; else os << '-';
    os << '\n';
  }
  os << "shelves " << d.shelves.size() << '\n';
  for (std::size_t s = 0; s < d.shelves.size(); ++s) {
    os << "S " << s;
    write_items(os, d.shelves[s]);
    os << '\n';
  }
  os << "workstations " << d.workstations.size() << '\n';
  for (const auto& w : d.workstations) os << "W " << w.id << ' ' << w.pos.x << ' ' << w.pos.y << '\n';
  os << "robots " << d.robots.size() << '\n';
  for (std::size_t r = 0; r < d.robots.size(); ++r) {
    os << "R " << r << ' ' << d.robots[r].x << ' ' << d.robots[r].y << '\n';
  }
  os << "orders " << d.orders.size() << '\n';
  for (const auto& o : d.orders) {
    os << "O " << o.id << ' ' << format_double(o.arrival);
    write_items(os, o.demand);
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

Dataset dataset_from_text(std::string_view text) {
  LineReader r(text);
  Dataset d;
  {
    auto is = r.expect("rmfs-dataset");
    const int version = read<int>(is, r, "version");
    if (version != Dataset::kFormatVersion) r.fail("unsupported format version " + std::to_string(version));
  }
  { auto is = r.expect("name"); d.name = read<std::string>(is, r, "name"); }
  {
    auto is = r.expect("grid");
    d.height = read<int>(is, r, "height");
    d.width = read<int>(is, r, "width");
  }
  { auto is = r.expect("items"); d.num_items = read<int>(is, r, "item count"); }
  if (d.num_items < 1) r.fail("item count must be positive");
  {
    auto is = r.expect("timing");
    d.c_shelf = read_double(is, r, "C_shelf");
    d.c_item = read_double(is, r, "C_item");
  }
  const auto count = [&](const char* kw) {
    auto is = r.expect(kw);
    const long n = read<long>(is, r, "count");
    if (n < 0) r.fail("negative count");
    return static_cast<std::size_t>(n);
  };

  const auto num_locations = count("locations");
  for (std::size_t i = 0; i < num_locations; ++i) {
    auto is = r.expect("L");
    StorageLocation l;
    l.id = read<int>(is, r, "location id");
    l.pos.x = read<int>(is, r, "x");
    l.pos.y = read<int>(is, r, "y");
    const auto occ = read<std::string>(is, r, "occupant");
    if (occ != "-") {
      int s = 0;
      auto res = std::from_chars(occ.data(), occ.data() + occ.size(), s);
      if (res.ec != std::errc()) r.fail("bad occupant '" + occ + "'");
      l.occupant = s;
    }
    d.locations.push_back(l);
  }
  const auto num_shelves = count("shelves");
  for (std::size_t i = 0; i < num_shelves; ++i) {
    auto is = r.expect("S");
    if (read<std::size_t>(is, r, "shelf id") != i) r.fail("shelf ids must be dense");
    d.shelves.push_back(read_items(is, r, d.num_items));
  }
  const auto num_ws = count("workstations");
  for (std::size_t i = 0; i < num_ws; ++i) {
    auto is = r.expect("W");
    WorkstationSite w;
    w.id = read<int>(is, r, "workstation id");
    w.pos.x = read<int>(is, r, "x");
    w.pos.y = read<int>(is, r, "y");
    d.workstations.push_back(w);
  }
  const auto num_robots = count("robots");
  for (std::size_t i = 0; i < num_robots; ++i) {
    auto is = r.expect("R");
    if (read<std::size_t>(is, r, "robot id") != i) r.fail("robot ids must be dense");
    Position p;
    p.x = read<int>(is, r, "x");
    p.y = read<int>(is, r, "y");
    d.robots.push_back(p);
  }
  const auto num_orders = count("orders");
  for (std::size_t i = 0; i < num_orders; ++i) {
    auto is = r.expect("O");
    Order o;
    o.id = read<int>(is, r, "order id");
    o.arrival = read_double(is, r, "arrival");
    o.demand = read_items(is, r, d.num_items);
    d.orders.push_back(std::move(o));
  }
  r.expect("end");
  d.validate();
  return d;
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open " + path.string() + " for writing");
  out << to_text(d);
  if (!out) throw InputError("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return dataset_from_text(ss.str());
}

}  // namespace rmfs
