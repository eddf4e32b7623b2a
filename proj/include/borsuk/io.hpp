#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "borsuk/borsuk_graph.hpp"
#include "borsuk/sphere.hpp"

namespace borsuk::io {

// Points: one JSON array per line with shortest round-trip decimals.
void write_points_jsonl(std::ostream& os, const sphere::PointSet& pts);
sphere::PointSet read_points_jsonl(std::istream& is);

// Points: "BORSUKPT", u32 d, u32 n, then n*(d+1) little-endian float64.
void write_points_binary(std::ostream& os, const sphere::PointSet& pts);
sphere::PointSet read_points_binary(std::istream& is);

// Edge list: "BORSUKEG", u32 n, u32 m, then m pairs of u32.
void write_edges_binary(std::ostream& os, const Graph& g);
Graph read_edges_binary(std::istream& is);

// {"n", "d", "alpha", "seed", "edges": [[u, v], ...]}
void write_graph_json(std::ostream& os, const BorsukGraph& g, std::uint64_t seed);

/// Picks the point format from the extension (.jsonl or .bin).
void save_points(const std::filesystem::path& path, const sphere::PointSet& pts);
sphere::PointSet load_points(const std::filesystem::path& path);

}  // namespace borsuk::io
