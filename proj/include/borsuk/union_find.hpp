#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace borsuk {

// Disjoint sets with union by rank and iterative path compression.
class UnionFind {
 public:
  explicit UnionFind(std::size_t n = 0) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::uint32_t{0});
  }

  std::size_t size() const noexcept { return parent_.size(); }

  std::uint32_t find(std::uint32_t x) noexcept {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      std::uint32_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  // Returns true when the two sets were distinct.
  bool unite(std::uint32_t a, std::uint32_t b) noexcept {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  bool connected(std::uint32_t a, std::uint32_t b) noexcept { return find(a) == find(b); }

  // Dense component ids in order of first appearance; ids are independent
  // of union order.
  std::vector<std::uint32_t> component_ids() {
    std::vector<std::uint32_t> ids(parent_.size());
    std::vector<std::uint32_t> root_id(parent_.size(), UINT32_MAX);
    std::uint32_t next = 0;
    for (std::uint32_t i = 0; i < parent_.size(); ++i) {
      auto r = find(i);
      if (root_id[r] == UINT32_MAX) root_id[r] = next++;
      ids[i] = root_id[r];
    }
    return ids;
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace borsuk
