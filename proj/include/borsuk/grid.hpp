#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace borsuk {

// Dense uniform bucket grid over the cube [lo, hi]^dim, stored as CSR.
// Points outside the cube are clamped into the border cells, which keeps the
// "coordinates within one cell side => cell indices within one" property, so
// a 3^dim neighbourhood scan always covers every point within `cell` of the
// query in every coordinate.
class UniformGrid {
 public:
  UniformGrid(int dim, std::span<const double> coords, double cell, double lo, double hi,
              std::size_t max_cells)
      : dim_(dim), lo_(lo) {
    if (dim < 1) throw std::invalid_argument("UniformGrid: dim must be positive");
    if (!(hi > lo) || !(cell > 0)) throw std::invalid_argument("UniformGrid: bad extent");
    double extent = hi - lo;
    auto per_axis = static_cast<std::size_t>(std::ceil(extent / cell));
    per_axis = std::max<std::size_t>(per_axis, 1);
    auto cap = static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(std::max<std::size_t>(max_cells, 1)),
                                                             1.0 / dim) + 1e-9));
    per_axis = std::min(per_axis, std::max<std::size_t>(cap, 1));
    per_axis_ = per_axis;
    cell_ = std::max(cell, extent / static_cast<double>(per_axis_));
    std::size_t total = 1;
    for (int k = 0; k < dim_; ++k) total *= per_axis_;
    const std::size_t n = coords.size() / static_cast<std::size_t>(dim_);
    start_.assign(total + 1, 0);
    std::vector<std::uint32_t> cell_of(n);
    for (std::size_t i = 0; i < n; ++i) {
      cell_of[i] = static_cast<std::uint32_t>(flat_cell(&coords[i * dim_]));
      ++start_[cell_of[i] + 1];
    }
    for (std::size_t c = 0; c < total; ++c) start_[c + 1] += start_[c];
    items_.resize(n);
    std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) items_[fill[cell_of[i]]++] = static_cast<std::uint32_t>(i);
    build_offsets();
  }

  double cell() const noexcept { return cell_; }
  std::size_t cells_per_axis() const noexcept { return per_axis_; }

  // Calls fn(index) for every stored point in the 3^dim block of cells
  // around q, in ascending cell order and insertion order within a cell.
  template <typename Fn>
  void for_each_near(const double* q, Fn&& fn) const {
    std::int64_t base[16];
    for (int k = 0; k < dim_; ++k) base[k] = axis_index(q[k]);
    for (std::size_t o = 0; o < offsets_.size(); o += static_cast<std::size_t>(dim_)) {
      const int* off = &offsets_[o];
      std::size_t flat = 0;
      bool inside = true;
      for (int k = 0; k < dim_; ++k) {
        std::int64_t c = base[k] + off[k];
        if (c < 0 || c >= static_cast<std::int64_t>(per_axis_)) {
          inside = false;
          break;
        }
        flat = flat * per_axis_ + static_cast<std::size_t>(c);
      }
      if (!inside) continue;
      for (std::size_t s = start_[flat]; s < start_[flat + 1]; ++s) fn(items_[s]);
    }
  }

 private:
  std::int64_t axis_index(double x) const noexcept {
    auto c = static_cast<std::int64_t>(std::floor((x - lo_) / cell_));
    return std::clamp<std::int64_t>(c, 0, static_cast<std::int64_t>(per_axis_) - 1);
  }

  std::size_t flat_cell(const double* p) const noexcept {
    std::size_t flat = 0;
    for (int k = 0; k < dim_; ++k) flat = flat * per_axis_ + static_cast<std::size_t>(axis_index(p[k]));
    return flat;
  }

  void build_offsets() {
    if (dim_ > 16) throw std::invalid_argument("UniformGrid: dim > 16 unsupported");
    std::vector<int> cur(dim_, -1);
    for (;;) {
      offsets_.insert(offsets_.end(), cur.begin(), cur.end());
      int k = dim_ - 1;
      while (k >= 0 && cur[k] == 1) cur[k--] = -1;
      if (k < 0) break;
      ++cur[k];
    }
  }

  int dim_;
  double lo_;
  double cell_ = 1.0;
  std::size_t per_axis_ = 1;
  std::vector<std::size_t> start_;
  std::vector<std::uint32_t> items_;
  std::vector<int> offsets_;
};

}  // namespace borsuk
