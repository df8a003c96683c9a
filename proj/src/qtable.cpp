#include "qdrive/qtable.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "qdrive/env.hpp"

namespace qdrive {

QTable::QTable(QTableMeta meta, int num_actions)
    : meta_(std::move(meta)), num_actions_(num_actions) {
  if (num_actions_ < 1 || num_actions_ > kMaxActionIds) {
    throw std::invalid_argument("QTable: unsupported number of actions");
  }
}

QTable::StateQ& QTable::touch(std::string_view key) {
  auto it = table_.find(key);
  if (it == table_.end()) it = table_.emplace(std::string(key), StateQ{}).first;
  return it->second;
}

void QTable::set(std::string_view key, int a, double value) {
  StateQ& row = touch(key);
  mark_present(row, a);
  row.q[a] = value;
}

namespace {

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(std::string_view text, const char* what) {
  std::string tmp(text);
  char* end = nullptr;
  double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || tmp.empty()) {
    throw std::runtime_error(std::string("qtable file: bad ") + what + " '" + tmp + "'");
  }
  return v;
}

uint64_t parse_u64(std::string_view text, const char* what, int base = 10) {
  std::string tmp(text);
  char* end = nullptr;
  uint64_t v = std::strtoull(tmp.c_str(), &end, base);
  if (end != tmp.c_str() + tmp.size() || tmp.empty()) {
    throw std::runtime_error(std::string("qtable file: bad ") + what + " '" + tmp + "'");
  }
  return v;
}

std::string meta_line(const QTableMeta& m) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "qtable v%d scenario=%s geometry_hash=%016" PRIx64
                " alpha=%.17g gamma_step=%.17g episodes=%" PRIu64 " steps_per_episode=%" PRIu64
                " seed=%" PRIu64,
                m.format_version, m.scenario.c_str(), m.geometry_hash, m.alpha, m.gamma_step,
                m.episodes, m.steps_per_episode, m.seed);
  return buf;
}

QTableMeta parse_meta_line(const std::string& line) {
  std::vector<std::string_view> tokens;
  std::string_view sv(line);
  size_t pos = 0;
  while (pos < sv.size()) {
    size_t space = sv.find(' ', pos);
    if (space == std::string_view::npos) space = sv.size();
    if (space > pos) tokens.push_back(sv.substr(pos, space - pos));
    pos = space + 1;
  }
  if (tokens.size() < 2 || tokens[0] != "qtable" || tokens[1].size() < 2 || tokens[1][0] != 'v') {
    throw std::runtime_error("qtable file: missing 'qtable v<N>' header");
  }
  QTableMeta m;
  m.format_version = static_cast<int>(parse_u64(tokens[1].substr(1), "format version"));
  if (m.format_version != 1) {
    throw std::runtime_error("qtable file: unsupported format version");
  }
  for (size_t i = 2; i < tokens.size(); ++i) {
    size_t eq = tokens[i].find('=');
    if (eq == std::string_view::npos) throw std::runtime_error("qtable file: bad metadata token");
    std::string_view key = tokens[i].substr(0, eq);
    std::string_view val = tokens[i].substr(eq + 1);
    if (key == "scenario") m.scenario = std::string(val);
    else if (key == "geometry_hash") m.geometry_hash = parse_u64(val, "geometry_hash", 16);
    else if (key == "alpha") m.alpha = parse_double(val, "alpha");
    else if (key == "gamma_step") m.gamma_step = parse_double(val, "gamma_step");
    else if (key == "episodes") m.episodes = parse_u64(val, "episodes");
    else if (key == "steps_per_episode") m.steps_per_episode = parse_u64(val, "steps_per_episode");
    else if (key == "seed") m.seed = parse_u64(val, "seed");
    else throw std::runtime_error("qtable file: unknown metadata key '" + std::string(key) + "'");
  }
  if (m.scenario.empty()) throw std::runtime_error("qtable file: metadata missing scenario");
  return m;
}

// Shared layout for the value file and the visits sidecar.
template <typename ValueFn>
void write_entries(const QTable& table, const std::string& path, ValueFn value_of,
                   bool only_visited) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << meta_line(table.meta()) << '\n';

  std::vector<const QTable::Map::value_type*> rows;
  rows.reserve(table.num_states());
  for (const auto& kv : table.states()) rows.push_back(&kv);
  std::sort(rows.begin(), rows.end(),
            [](const auto* a, const auto* b) { return a->first < b->first; });

  for (const auto* kv : rows) {
    for (int a = 0; a < table.num_actions(); ++a) {
      if (!kv->second.has(a)) continue;
      if (only_visited && kv->second.visits[a] == 0) continue;
      out << kv->first << '\t' << value_of(kv->second, a) << '\n';
    }
  }
  if (!out) throw std::runtime_error("write error on '" + path + "'");
}

}  // namespace

void save_qtable(const QTable& table, const std::string& path) {
  // Action keys need the scenario's group count; reconstruct it from the
  // table's own action-id arity so saving does not need a config.
  int per_motion = table.num_actions() / kNumMotionActions;
  ScenarioSpec spec;
  spec.query_groups.assign(static_cast<size_t>(per_motion - 1), {});
  write_entries(
      table, path,
      [&](const QTable::StateQ& row, int a) {
        return action_key(spec, action_from_id(spec, a)) + '\t' + format_g17(row.q[a]);
      },
      /*only_visited=*/false);
}

void save_visits(const QTable& table, const std::string& path) {
  int per_motion = table.num_actions() / kNumMotionActions;
  ScenarioSpec spec;
  spec.query_groups.assign(static_cast<size_t>(per_motion - 1), {});
  write_entries(
      table, path,
      [&](const QTable::StateQ& row, int a) {
        return action_key(spec, action_from_id(spec, a)) + '\t' + std::to_string(row.visits[a]);
      },
      /*only_visited=*/false);
}

namespace {

template <typename EntryFn>
QTableMeta read_entries(const std::string& path, const ScenarioSpec& scenario, EntryFn on_entry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("qtable file '" + path + "' is empty");
  QTableMeta meta = parse_meta_line(line);
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw std::runtime_error("qtable file '" + path + "': line " + std::to_string(line_no) +
                               " is not state<TAB>action<TAB>value");
    }
    std::string_view sv(line);
    std::string_view state = sv.substr(0, t1);
    std::string_view action = sv.substr(t1 + 1, t2 - t1 - 1);
    std::string_view value = sv.substr(t2 + 1);
    int id;
    try {
      id = action_id(scenario, action_from_key(scenario, action));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error("qtable file '" + path + "': line " + std::to_string(line_no) +
                               ": " + e.what());
    }
    on_entry(state, id, value);
  }
  return meta;
}

}  // namespace

QTableMeta peek_qtable_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("qtable file '" + path + "' is empty");
  return parse_meta_line(line);
}

QTable load_qtable(const std::string& path, const ScenarioSpec& scenario) {
  QTable table(QTableMeta{}, num_action_ids(scenario));
  QTableMeta meta = read_entries(path, scenario, [&](std::string_view state, int id,
                                                     std::string_view value) {
    table.set(state, id, parse_double(value, "q value"));
  });
  table.meta() = meta;
  return table;
}

void load_visits(const std::string& path, const ScenarioSpec& scenario, QTable& table) {
  read_entries(path, scenario, [&](std::string_view state, int id, std::string_view value) {
    QTable::StateQ& row = table.touch(state);
    table.mark_present(row, id);
    row.visits[id] = static_cast<uint32_t>(parse_u64(value, "visit count"));
  });
}

}  // namespace qdrive
