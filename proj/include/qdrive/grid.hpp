#pragma once

#include <cstdint>
#include <vector>

#include "qdrive/rng.hpp"

namespace qdrive {

enum class Occupancy : uint8_t { Free = 0, Occupied = 1 };

// Static shape of the simulated road segment, expressed in the ego frame.
// The window covers `local_cols` columns around the ego vehicle (longitudinal
// offsets rear_offset()..+1, ego at 0) plus `ext_cols` look-ahead columns
// (offsets +2..+1+ext_cols).  One column spans all lanes at one offset; one
// cell is one vehicle length.
struct GridGeometry {
  int lanes = 2;
  int local_cols = 3;
  int ext_cols = 4;

  int rear_offset() const { return 2 - local_cols; }    // inclusive
  int front_offset() const { return 1 + ext_cols; }      // inclusive
  int total_cols() const { return local_cols + ext_cols; }
  int total_cells() const { return lanes * total_cols(); }

  bool operator==(const GridGeometry&) const = default;
};

// Draws fresh ground-truth columns.  With `column_exclusion` set, a column
// never has every lane occupied simultaneously (joint redraw until at least
// one lane is free), which guarantees the road stays passable; otherwise
// lanes are independent Bernoulli(p_occupied).
struct OccupancySampler {
  double p_occupied = 0.5;
  bool column_exclusion = true;
  Rng rng;

  OccupancySampler(double p, bool exclusion, uint64_t seed)
      : p_occupied(p), column_exclusion(exclusion), rng(seed) {}

  // Samples one column, writing `lanes` cells into `out`.
  void sample_column(int lanes, Occupancy* out);
};

// Ground-truth occupancy for every column currently in the ego frame.
// Cells are static once sampled: advancing the frame only relabels offsets
// and samples the columns that newly enter at the front.
class GridWindow {
 public:
  GridWindow(const GridGeometry& geometry, OccupancySampler sampler);

  const GridGeometry& geometry() const { return geometry_; }
  OccupancySampler& sampler() { return sampler_; }

  Occupancy at(int lane, int offset) const { return cells_[index(lane, offset)]; }
  void set(int lane, int offset, Occupancy value) { cells_[index(lane, offset)] = value; }

  // Re-samples every column.  Used at episode start; the caller then clears
  // the ego cell.
  void resample_all();

  // Shifts the frame forward by d cells (offset x becomes x-d) and samples
  // the d columns entering at the front.  d = 0 is a no-op.
  void advance(int d);

 private:
  size_t index(int lane, int offset) const;

  GridGeometry geometry_;
  OccupancySampler sampler_;
  std::vector<Occupancy> cells_;  // lane-major: [lane][column]
};

}  // namespace qdrive
