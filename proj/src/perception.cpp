#include "qdrive/perception.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace qdrive {

std::string_view scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::LV: return "LV";
    case ScenarioId::RC: return "RC";
    case ScenarioId::C1: return "C1";
    case ScenarioId::C2: return "C2";
    case ScenarioId::FV: return "FV";
  }
  throw std::logic_error("scenario_name: bad enum");
}

ScenarioId scenario_from_name(std::string_view name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (up == "LV") return ScenarioId::LV;
  if (up == "RC") return ScenarioId::RC;
  if (up == "C1") return ScenarioId::C1;
  if (up == "C2") return ScenarioId::C2;
  if (up == "FV") return ScenarioId::FV;
  throw std::invalid_argument("unknown scenario '" + std::string(name) +
                              "' (expected LV, RC, C1, C2 or FV)");
}

int cell_index(int lane, int column, int lanes) {
  return (column - 1) * lanes + lane + 1;
}

void cell_position(int index, int lanes, int* lane, int* column) {
  *lane = (index - 1) % lanes;
  *column = (index - 1) / lanes + 1;
}

ScenarioSpec make_scenario(ScenarioId id, const GridGeometry& geometry) {
  ScenarioSpec spec;
  spec.id = id;
  switch (id) {
    case ScenarioId::LV:
      spec.auto_reveal = AutoReveal::None;
      spec.extended_in_state = false;
      break;
    case ScenarioId::RC:
      spec.auto_reveal = AutoReveal::RandomHalf;
      break;
    case ScenarioId::FV:
      spec.auto_reveal = AutoReveal::Full;
      break;
    case ScenarioId::C1: {
      // One group per extended column, nearest first.
      for (int col = 1; col <= geometry.ext_cols; ++col) {
        std::vector<int> group;
        for (int lane = 0; lane < geometry.lanes; ++lane) {
          group.push_back(cell_index(lane, col, geometry.lanes));
        }
        spec.query_groups.push_back(std::move(group));
      }
      break;
    }
    case ScenarioId::C2: {
      if (geometry.ext_cols % 2 != 0) {
        throw std::invalid_argument("C2 requires an even number of extended columns");
      }
      int half = geometry.ext_cols / 2;
      for (int k = 1; k <= half; ++k) {
        std::vector<int> group;
        for (int col : {k, k + half}) {
          for (int lane = 0; lane < geometry.lanes; ++lane) {
            group.push_back(cell_index(lane, col, geometry.lanes));
          }
        }
        std::sort(group.begin(), group.end());
        spec.query_groups.push_back(std::move(group));
      }
      break;
    }
  }
  if (!spec.query_groups.empty()) validate_query_groups(spec.query_groups, geometry);
  return spec;
}

void validate_query_groups(const std::vector<std::vector<int>>& groups,
                           const GridGeometry& geometry) {
  if (groups.size() > 4) {
    throw std::invalid_argument("at most four query groups are supported");
  }
  int max_index = geometry.lanes * geometry.ext_cols;
  for (const auto& group : groups) {
    if (group.empty()) throw std::invalid_argument("query group must not be empty");
    for (int idx : group) {
      if (idx < 1 || idx > max_index) {
        throw std::invalid_argument("query group cell index " + std::to_string(idx) +
                                    " outside 1.." + std::to_string(max_index));
      }
    }
  }
}

BeliefState make_blank_belief(const GridGeometry& geometry) {
  BeliefState b;
  b.local.assign(static_cast<size_t>(geometry.lanes) * geometry.local_cols, Occupancy::Free);
  b.extended.assign(static_cast<size_t>(geometry.lanes) * geometry.ext_cols,
                    BeliefCell::Unknown);
  return b;
}

void shift_extended_belief(const GridGeometry& geometry, int d,
                           std::vector<BeliefCell>& extended) {
  if (d < 0) throw std::invalid_argument("shift_extended_belief: negative displacement");
  if (d == 0) return;
  int ext = geometry.ext_cols;
  for (int lane = 0; lane < geometry.lanes; ++lane) {
    size_t base = static_cast<size_t>(lane) * ext;
    for (int c = 0; c < ext; ++c) {
      extended[base + c] = (c + d < ext) ? extended[base + c + d] : BeliefCell::Unknown;
    }
  }
}

void apply_reveal(const GridGeometry& geometry, const GridWindow& truth,
                  const std::vector<int>& cells, BeliefState& belief) {
  for (int idx : cells) {
    int lane = 0, column = 0;
    cell_position(idx, geometry.lanes, &lane, &column);
    // Column c of the extended region sits at longitudinal offset c+1.
    belief.set_extended(geometry, lane, column, to_belief(truth.at(lane, column + 1)));
  }
}

std::vector<QueryAction> feasible_query_actions(const ScenarioSpec& scenario) {
  std::vector<QueryAction> out;
  out.reserve(scenario.num_query_actions());
  for (int g = 0; g < scenario.num_groups(); ++g) out.push_back(QueryAction{g});
  out.push_back(scenario.no_query());
  return out;
}

namespace {

void append_int(std::string& out, int value) {
  if (value >= 0 && value < 10) {
    out.push_back(static_cast<char>('0' + value));
  } else {
    out += std::to_string(value);
  }
}

constexpr char kBeliefChar[3] = {'U', 'F', 'O'};

}  // namespace

void encode_state(const GridGeometry& geometry, const ScenarioSpec& scenario,
                  const BeliefState& belief, std::string& out) {
  out.clear();
  append_int(out, belief.pose.velocity);
  out.push_back('|');
  append_int(out, belief.pose.lane);
  out.push_back('|');
  for (int ci = 0; ci < geometry.local_cols; ++ci) {
    int offset = geometry.rear_offset() + ci;
    for (int lane = 0; lane < geometry.lanes; ++lane) {
      if (offset == 0 && lane == belief.pose.lane) continue;  // ego cell
      out.push_back(belief.local[static_cast<size_t>(lane) * geometry.local_cols + ci] ==
                            Occupancy::Occupied
                        ? 'O'
                        : 'F');
    }
  }
  if (scenario.extended_in_state) {
    out.push_back('|');
    for (int col = 1; col <= geometry.ext_cols; ++col) {
      for (int lane = 0; lane < geometry.lanes; ++lane) {
        BeliefCell c = belief.extended[static_cast<size_t>(lane) * geometry.ext_cols + (col - 1)];
        out.push_back(kBeliefChar[static_cast<int>(c)]);
      }
    }
  }
}

std::string encode_state(const GridGeometry& geometry, const ScenarioSpec& scenario,
                         const BeliefState& belief) {
  std::string out;
  encode_state(geometry, scenario, belief, out);
  return out;
}

BeliefState decode_state(const GridGeometry& geometry, const ScenarioSpec& scenario,
                         std::string_view key) {
  auto fail = [&](const char* why) {
    throw std::invalid_argument("decode_state: " + std::string(why) + " in key '" +
                                std::string(key) + "'");
  };
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    size_t bar = key.find('|', start);
    if (bar == std::string_view::npos) {
      parts.push_back(key.substr(start));
      break;
    }
    parts.push_back(key.substr(start, bar - start));
    start = bar + 1;
  }
  size_t expected = scenario.extended_in_state ? 4 : 3;
  if (parts.size() != expected) fail("wrong number of segments");

  BeliefState b = make_blank_belief(geometry);
  if (parts[0].empty() || parts[0].size() > 2) fail("bad velocity");
  int v = 0;
  for (char c : parts[0]) {
    if (c < '0' || c > '9') fail("bad velocity");
    v = v * 10 + (c - '0');
  }
  b.pose.velocity = v;
  if (parts[1].size() != 1 || parts[1][0] < '0' ||
      parts[1][0] >= static_cast<char>('0' + geometry.lanes)) {
    fail("bad lane");
  }
  b.pose.lane = parts[1][0] - '0';

  size_t local_len = static_cast<size_t>(geometry.lanes) * geometry.local_cols - 1;
  if (parts[2].size() != local_len) fail("bad local segment length");
  size_t pos = 0;
  for (int ci = 0; ci < geometry.local_cols; ++ci) {
    int offset = geometry.rear_offset() + ci;
    for (int lane = 0; lane < geometry.lanes; ++lane) {
      if (offset == 0 && lane == b.pose.lane) continue;
      char c = parts[2][pos++];
      if (c != 'F' && c != 'O') fail("bad local cell");
      b.local[static_cast<size_t>(lane) * geometry.local_cols + ci] =
          (c == 'O') ? Occupancy::Occupied : Occupancy::Free;
    }
  }

  if (scenario.extended_in_state) {
    size_t ext_len = static_cast<size_t>(geometry.lanes) * geometry.ext_cols;
    if (parts[3].size() != ext_len) fail("bad extended segment length");
    pos = 0;
    for (int col = 1; col <= geometry.ext_cols; ++col) {
      for (int lane = 0; lane < geometry.lanes; ++lane) {
        char c = parts[3][pos++];
        BeliefCell value;
        if (c == 'U') value = BeliefCell::Unknown;
        else if (c == 'F') value = BeliefCell::Free;
        else if (c == 'O') value = BeliefCell::Occupied;
        else { fail("bad extended cell"); value = BeliefCell::Unknown; }
        b.extended[static_cast<size_t>(lane) * geometry.ext_cols + (col - 1)] = value;
      }
    }
  }
  return b;
}

}  // namespace qdrive
