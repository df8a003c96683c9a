#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qdrive/grid.hpp"
#include "qdrive/motion.hpp"

namespace qdrive {

// What the ego believes about one look-ahead cell.  Local cells are always
// directly observed, so only the extended region carries Unknown.
enum class BeliefCell : uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

inline BeliefCell to_belief(Occupancy o) {
  return o == Occupancy::Occupied ? BeliefCell::Occupied : BeliefCell::Free;
}

// Information regimes compared by the study.  They differ only in how the
// extended look-ahead cells become known:
//   LV  local view only; the extended region is not part of the state,
//   RC  a random half of the extended cells is revealed every step for free,
//   C1  the agent may query one extended column per step,
//   C2  the agent may query one front/back column pair per step,
//   FV  the whole extended region is revealed every step for free.
enum class ScenarioId : uint8_t { LV = 0, RC = 1, C1 = 2, C2 = 3, FV = 4 };

std::string_view scenario_name(ScenarioId id);
ScenarioId scenario_from_name(std::string_view name);  // case-insensitive; throws

enum class AutoReveal : uint8_t { None = 0, RandomHalf = 1, Full = 2 };

// Fixed numbering of extended cells, used by query-group definitions and by
// the state encoding: cell (lane, column c) has index (c-1)*lanes + lane + 1,
// with column c = 1 at longitudinal offset +2.  For two lanes this counts
// 1,2 in the nearest column, 3,4 in the next, and so on.
int cell_index(int lane, int column, int lanes);           // 1-based index
void cell_position(int index, int lanes, int* lane, int* column);  // inverse

// A query action: either request one group of extended cells, or stay quiet.
// Group k refers to scenario.query_groups[k]; NoQuery is encoded as
// group() == num_groups.
struct QueryAction {
  int choice = 0;  // 0..num_groups-1 = query that group; num_groups = NoQuery

  bool operator==(const QueryAction&) const = default;
};

struct ScenarioSpec {
  ScenarioId id = ScenarioId::LV;
  AutoReveal auto_reveal = AutoReveal::None;
  bool extended_in_state = true;             // LV drops the extended segment
  std::vector<std::vector<int>> query_groups;  // 1-based extended cell indices

  int num_groups() const { return static_cast<int>(query_groups.size()); }
  bool has_query_choice() const { return !query_groups.empty(); }
  // NoQuery plus one action per group; NoQuery is last.
  int num_query_actions() const { return num_groups() + 1; }
  QueryAction no_query() const { return QueryAction{num_groups()}; }
};

// Builds the standard scenario over the given geometry.  C1 queries one
// column per group; C2 pairs column k with column k + ext_cols/2 (requires
// even ext_cols).  Throws std::invalid_argument when the geometry cannot
// support the scenario.
ScenarioSpec make_scenario(ScenarioId id, const GridGeometry& geometry);

// Validates custom query groups (indices in range, no empty group, at most
// four groups so reports stay uniform).  Throws std::invalid_argument.
void validate_query_groups(const std::vector<std::vector<int>>& groups,
                           const GridGeometry& geometry);

// The agent-visible state: pose, directly observed local cells, and the
// belief over extended cells.  Flat arrays are lane-major.
struct BeliefState {
  EgoPose pose;
  std::vector<Occupancy> local;     // lanes x local_cols, [lane][col]
  std::vector<BeliefCell> extended;  // lanes x ext_cols,  [lane][col]

  Occupancy local_at(const GridGeometry& g, int lane, int offset) const {
    return local[static_cast<size_t>(lane) * g.local_cols + (offset - g.rear_offset())];
  }
  void set_local(const GridGeometry& g, int lane, int offset, Occupancy v) {
    local[static_cast<size_t>(lane) * g.local_cols + (offset - g.rear_offset())] = v;
  }
  BeliefCell extended_at(const GridGeometry& g, int lane, int column) const {
    return extended[static_cast<size_t>(lane) * g.ext_cols + (column - 1)];
  }
  void set_extended(const GridGeometry& g, int lane, int column, BeliefCell v) {
    extended[static_cast<size_t>(lane) * g.ext_cols + (column - 1)] = v;
  }

  bool operator==(const BeliefState&) const = default;
};

BeliefState make_blank_belief(const GridGeometry& geometry);

// Shifts the extended belief back by d columns (column c takes the old value
// of column c+d); columns without a source become Unknown.  Knowledge about
// columns that slide into the local view is dropped -- the local view is
// re-read from ground truth anyway.
void shift_extended_belief(const GridGeometry& geometry, int d,
                           std::vector<BeliefCell>& extended);

// Copies ground truth into the belief for the given 1-based extended cells.
void apply_reveal(const GridGeometry& geometry, const GridWindow& truth,
                  const std::vector<int>& cells, BeliefState& belief);

// Query actions admissible in the scenario, in canonical order: groups
// ascending, then NoQuery.  Scenarios without groups only allow NoQuery.
std::vector<QueryAction> feasible_query_actions(const ScenarioSpec& scenario);

// Canonical state key: "v|lane|LOCAL|EXT".  LOCAL scans local offsets
// rear..+1 with lanes ascending inside each column, skipping the ego cell,
// using 'F'/'O'.  EXT lists extended cells by index using 'U'/'F'/'O'; the
// segment is omitted entirely for scenarios without extended state.
// Appends to `out` after clearing it (reuse avoids allocations in hot loops).
void encode_state(const GridGeometry& geometry, const ScenarioSpec& scenario,
                  const BeliefState& belief, std::string& out);

std::string encode_state(const GridGeometry& geometry, const ScenarioSpec& scenario,
                         const BeliefState& belief);

// Inverse of encode_state.  The ego cell is restored as Free.  For LV keys
// the extended belief is all Unknown.  Throws std::invalid_argument on any
// malformed key.
BeliefState decode_state(const GridGeometry& geometry, const ScenarioSpec& scenario,
                         std::string_view key);

}  // namespace qdrive
