#include "borsuk/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace borsuk::io {

namespace {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

constexpr char kPointMagic[8] = {'B', 'O', 'R', 'S', 'U', 'K', 'P', 'T'};
constexpr char kEdgeMagic[8] = {'B', 'O', 'R', 'S', 'U', 'K', 'E', 'G'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated binary input");
  return v;
}

void expect_magic(std::istream& is, const char (&magic)[8]) {
  char buf[8];
  if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) throw std::runtime_error("bad magic in binary input");
}

}  // namespace

void write_points_jsonl(std::ostream& os, const sphere::PointSet& pts) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    auto p = pts[i];
    os << nlohmann::json(std::vector<double>(p.begin(), p.end())).dump() << '\n';
  }
}

sphere::PointSet read_points_jsonl(std::istream& is) {
  std::string line;
  int d = -1;
  std::vector<double> flat;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto row = nlohmann::json::parse(line).get<std::vector<double>>();
    if (d < 0) d = static_cast<int>(row.size()) - 1;
    if (static_cast<int>(row.size()) != d + 1 || d < 1)
      throw std::runtime_error("inconsistent point dimension on line " + std::to_string(lineno));
    flat.insert(flat.end(), row.begin(), row.end());
  }
  if (d < 0) throw std::runtime_error("no points in input");
  return sphere::PointSet(d, std::move(flat));
}

void write_points_binary(std::ostream& os, const sphere::PointSet& pts) {
  os.write(kPointMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(pts.dim()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(pts.size()));
  auto f = pts.flat();
  os.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
}

sphere::PointSet read_points_binary(std::istream& is) {
  expect_magic(is, kPointMagic);
  auto d = get<std::uint32_t>(is);
  auto n = get<std::uint32_t>(is);
  std::vector<double> flat(static_cast<std::size_t>(n) * (d + 1));
  if (!is.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(flat.size() * sizeof(double))))
    throw std::runtime_error("truncated binary point block");
  return sphere::PointSet(static_cast<int>(d), std::move(flat));
}

void write_edges_binary(std::ostream& os, const Graph& g) {
  os.write(kEdgeMagic, 8);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.num_vertices()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.num_edges()));
  for (auto e : g.edges()) {
    put(os, e.u);
    put(os, e.v);
  }
}

Graph read_edges_binary(std::istream& is) {
  expect_magic(is, kEdgeMagic);
  auto n = get<std::uint32_t>(is);
  auto m = get<std::uint32_t>(is);
  std::vector<Edge> es(m);
  for (auto& e : es) {
    e.u = get<std::uint32_t>(is);
    e.v = get<std::uint32_t>(is);
  }
  return Graph(n, std::move(es));
}

void write_graph_json(std::ostream& os, const BorsukGraph& g, std::uint64_t seed) {
  nlohmann::json j;
  j["n"] = g.points.size();
  j["d"] = g.d;
  j["alpha"] = g.alpha;
  j["seed"] = seed;
  auto& es = j["edges"] = nlohmann::json::array();
  for (auto e : g.graph.edges()) es.push_back({e.u, e.v});
  os << j.dump() << '\n';
}

void save_points(const std::filesystem::path& path, const sphere::PointSet& pts) {
  bool binary = path.extension() == ".bin";
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  if (binary) {
    write_points_binary(os, pts);
  } else {
    write_points_jsonl(os, pts);
  }
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

sphere::PointSet load_points(const std::filesystem::path& path) {
  bool binary = path.extension() == ".bin";
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return binary ? read_points_binary(is) : read_points_jsonl(is);
}

}  // namespace borsuk::io
