#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>

#include "qdrive/perception.hpp"

namespace qdrive {

// Upper bound on joint-action ids (4 motions x at most 5 query choices).
constexpr int kMaxActionIds = 20;

struct QTableMeta {
  int format_version = 1;
  std::string scenario;        // scenario name, e.g. "C2"
  uint64_t geometry_hash = 0;  // hash of geometry + scenario + reward config
  double alpha = 0.91;         // discount factor
  double gamma_step = 0.01;    // constant step size
  uint64_t episodes = 0;
  uint64_t steps_per_episode = 0;
  uint64_t seed = 0;
};

// Sparse state-action value table.  States are keyed by their canonical
// string; per state the action slots are dense (indexed by joint-action id)
// with a presence bitmask.  Absent pairs read as 0, matching the optimistic
// zero initialization of the learner.
class QTable {
 public:
  struct StateQ {
    uint32_t present = 0;  // bit a set <=> pair (s, a) stored
    std::array<double, kMaxActionIds> q{};
    std::array<uint32_t, kMaxActionIds> visits{};

    bool has(int a) const { return (present >> a) & 1u; }
  };

  struct StringHash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
    size_t operator()(const std::string& s) const { return std::hash<std::string_view>{}(s); }
  };
  using Map = std::unordered_map<std::string, StateQ, StringHash, std::equal_to<>>;

  QTable() = default;
  QTable(QTableMeta meta, int num_actions);

  const QTableMeta& meta() const { return meta_; }
  QTableMeta& meta() { return meta_; }
  int num_actions() const { return num_actions_; }
  size_t num_states() const { return table_.size(); }
  size_t num_pairs() const { return num_pairs_; }
  const Map& states() const { return table_; }

  const StateQ* find(std::string_view key) const {
    auto it = table_.find(key);
    return it == table_.end() ? nullptr : &it->second;
  }

  // Returns the stored value, or 0 when the pair is absent.
  double value(std::string_view key, int a) const {
    const StateQ* s = find(key);
    return s ? s->q[a] : 0.0;
  }

  // Fetches the state's slot row, creating it (all-absent) if needed.
  StateQ& touch(std::string_view key);

  // Marks a pair present and stores a value (does not change visit counts).
  void set(std::string_view key, int a, double value);

  // Records one learner update: marks present, bumps visits, stores value.
  void update(StateQ& row, int a, double value) {
    if (!row.has(a)) {
      row.present |= 1u << a;
      ++num_pairs_;
    }
    ++row.visits[a];
    row.q[a] = value;
  }

  void mark_present(StateQ& row, int a) {
    if (!row.has(a)) {
      row.present |= 1u << a;
      ++num_pairs_;
    }
  }

 private:
  QTableMeta meta_;
  int num_actions_ = 0;
  Map table_;
  size_t num_pairs_ = 0;
};

// Plain-text persistence.  Line 1 carries the metadata; every further line
// is "state<TAB>action<TAB>value" with values printed to 17 significant
// digits (bit-exact round trip).  Entries are sorted by state key, then by
// action id, so files are byte-identical for identical tables.
void save_qtable(const QTable& table, const std::string& path);

// Loads a table written by save_qtable.  The scenario is needed to decode
// action keys and must match the file's metadata scenario name.  Throws
// std::runtime_error on malformed input.
QTable load_qtable(const std::string& path, const ScenarioSpec& scenario);

// Reads only the metadata line (to learn the scenario before a full load).
QTableMeta peek_qtable_meta(const std::string& path);

// Visit counts use the same 3-column format in a sidecar file (counts are
// not part of the value-table format).  Loading merges counts into existing
// entries of `table`.
void save_visits(const QTable& table, const std::string& path);
void load_visits(const std::string& path, const ScenarioSpec& scenario, QTable& table);

}  // namespace qdrive
