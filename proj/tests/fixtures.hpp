#pragma once

#include <string>
#include <vector>

#include "upen/mapping.hpp"
#include "upen/world.hpp"

namespace fixtures {

// Rectangular room with a one-cell occupied boundary ring; the free interior is (rows - 2) x (cols - 2).
inline upen::Floorplan open_room(int rows, int cols, double cell = 0.05) {
  upen::Floorplan fp;
  fp.id = "room";
  fp.cell_size_m = cell;
  fp.cells = upen::Grid<std::uint8_t>(rows, cols, upen::kFreeCell);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (r == 0 || c == 0 || r == rows - 1 || c == cols - 1) fp.cells(r, c) = upen::kOccupiedCell;
  return fp;
}

inline void fill(upen::Floorplan& fp, int r0, int c0, int r1, int c1, std::uint8_t v = upen::kOccupiedCell) {
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) fp.cells(r, c) = v;
}

inline upen::Floorplan from_rows(const std::vector<std::string>& rows, double cell = 0.05) {
  upen::Floorplan fp;
  fp.id = "fixture";
  fp.cell_size_m = cell;
  fp.cells = upen::Grid<std::uint8_t>(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
  for (int r = 0; r < fp.rows(); ++r)
    for (int c = 0; c < fp.cols(); ++c) fp.cells(r, c) = rows[r][c] == '#' ? upen::kOccupiedCell : upen::kFreeCell;
  return fp;
}

inline upen::GlobalMap blank_map(int rows, int cols, double cell = 0.05) {
  return upen::GlobalMap(rows, cols, cell, 0.0, 0.0);
}

// Map whose every cell is one_hot(cls).
inline upen::GlobalMap solid_map(int rows, int cols, upen::CellClass cls, double cell = 0.05) {
  upen::GlobalMap m = blank_map(rows, cols, cell);
  for (auto& d : m.probs.data()) d = upen::one_hot(cls);
  return m;
}

}  // namespace fixtures
