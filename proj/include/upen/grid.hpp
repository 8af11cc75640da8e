#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "upen/error.hpp"

namespace upen {

/// Integer cell coordinate; row grows with world z, col grows with world x.
struct Cell {
  int row = 0;
  int col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Dense row-major 2D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int rows, int cols, const T& fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    require(rows >= 0 && cols >= 0, "grid dimensions must be non-negative");
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  bool contains(int r, int c) const { return r >= 0 && c >= 0 && r < rows_ && c < cols_; }
  bool contains(Cell cell) const { return contains(cell.row, cell.col); }

  T& operator()(int r, int c) { return data_[index(r, c)]; }
  const T& operator()(int r, int c) const { return data_[index(r, c)]; }
  T& operator[](Cell cell) { return (*this)(cell.row, cell.col); }
  const T& operator[](Cell cell) const { return (*this)(cell.row, cell.col); }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols_ + c; }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

}  // namespace upen

template <>
struct std::hash<upen::Cell> {
  std::size_t operator()(const upen::Cell& c) const noexcept {
    return std::hash<std::uint64_t>{}((static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.row)) << 32) |
                                      static_cast<std::uint32_t>(c.col));
  }
};
