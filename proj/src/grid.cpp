#include "qdrive/grid.hpp"

#include <cassert>
#include <stdexcept>

namespace qdrive {

void OccupancySampler::sample_column(int lanes, Occupancy* out) {
  while (true) {
    bool all_occupied = true;
    for (int lane = 0; lane < lanes; ++lane) {
      out[lane] = rng.bernoulli(p_occupied) ? Occupancy::Occupied : Occupancy::Free;
      if (out[lane] == Occupancy::Free) all_occupied = false;
    }
    if (!column_exclusion || !all_occupied) return;
    // Redraw the whole column: conditioning on "not all lanes occupied"
    // keeps lanes exchangeable and leaves singly-occupied columns more
    // likely than under independent draws.
  }
}

GridWindow::GridWindow(const GridGeometry& geometry, OccupancySampler sampler)
    : geometry_(geometry), sampler_(sampler) {
  if (geometry_.lanes < 1 || geometry_.local_cols < 2 || geometry_.ext_cols < 0) {
    throw std::invalid_argument("GridWindow: invalid geometry");
  }
  cells_.assign(static_cast<size_t>(geometry_.total_cells()), Occupancy::Free);
}

size_t GridWindow::index(int lane, int offset) const {
  assert(lane >= 0 && lane < geometry_.lanes);
  assert(offset >= geometry_.rear_offset() && offset <= geometry_.front_offset());
  int col = offset - geometry_.rear_offset();
  return static_cast<size_t>(lane) * geometry_.total_cols() + col;
}

void GridWindow::resample_all() {
  std::vector<Occupancy> column(geometry_.lanes);
  for (int offset = geometry_.rear_offset(); offset <= geometry_.front_offset(); ++offset) {
    sampler_.sample_column(geometry_.lanes, column.data());
    for (int lane = 0; lane < geometry_.lanes; ++lane) set(lane, offset, column[lane]);
  }
}

void GridWindow::advance(int d) {
  if (d < 0) throw std::invalid_argument("GridWindow::advance: negative displacement");
  if (d == 0) return;
  int cols = geometry_.total_cols();
  std::vector<Occupancy> column(geometry_.lanes);
  for (int lane = 0; lane < geometry_.lanes; ++lane) {
    size_t base = static_cast<size_t>(lane) * cols;
    for (int c = 0; c + d < cols; ++c) cells_[base + c] = cells_[base + c + d];
  }
  // Columns entering at the front are drawn fresh, one column at a time so
  // the draw order (back to front) is part of the deterministic contract.
  for (int c = cols - d; c < cols; ++c) {
    if (c < 0) continue;  // d larger than the window: only the last cols exist
    sampler_.sample_column(geometry_.lanes, column.data());
    for (int lane = 0; lane < geometry_.lanes; ++lane) {
      cells_[static_cast<size_t>(lane) * cols + c] = column[lane];
    }
  }
}

}  // namespace qdrive
