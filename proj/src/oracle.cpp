#include "qdrive/oracle.hpp"

#include "qdrive/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_set>

namespace qdrive {

namespace {

// Full-column occupancy masks (bit = lane occupied) with probabilities under
// the column law; the joint-redraw exclusion rule removes the all-occupied
// mask and renormalizes.
std::vector<std::pair<uint32_t, double>> column_law(int lanes, double p, bool exclusion) {
  std::vector<std::pair<uint32_t, double>> out;
  uint32_t full = (1u << lanes) - 1;
  double denom = 1.0;
  if (exclusion) {
    double p_all = 1.0;
    for (int i = 0; i < lanes; ++i) p_all *= p;
    denom = 1.0 - p_all;
  }
  for (uint32_t m = 0; m <= full; ++m) {
    if (exclusion && m == full) continue;
    double pr = 1.0;
    for (int lane = 0; lane < lanes; ++lane) pr *= ((m >> lane) & 1u) ? p : (1.0 - p);
    if (pr <= 0.0) continue;
    out.push_back({m, pr / denom});
  }
  return out;
}

}  // namespace

std::vector<Outcome> transition_model(const EnvConfig& cfg, const BeliefState& belief,
                                      const JointAction& action) {
  const GridGeometry& g = cfg.geometry;
  const ScenarioSpec& sc = cfg.scenario;
  if (action.query.choice < 0 || action.query.choice > sc.num_groups()) {
    throw std::invalid_argument("transition_model: query action out of range");
  }
  int accel = 0;
  int target_lane = belief.pose.lane;
  switch (action.motion) {
    case MotionAction::Accelerate: accel = +1; break;
    case MotionAction::Decelerate: accel = -1; break;
    case MotionAction::DoNothing: break;
    case MotionAction::ChangeLane:
      if (g.lanes < 2) throw std::invalid_argument("transition_model: ChangeLane needs two lanes");
      target_lane = 1 - belief.pose.lane;
      break;
  }
  Kinematics k = apply_kinematics(belief.pose.velocity, accel, cfg.v_max);
  const int d0 = k.displacement;
  const int rear = g.rear_offset();
  const int front = g.front_offset();
  const int wcols = g.total_cols() + d0;  // old-frame offsets rear..front+d0

  auto wix = [&](int lane, int off) {
    return static_cast<size_t>(lane) * wcols + static_cast<size_t>(off - rear);
  };

  // Ground truth as far as the belief pins it down: -1 latent, 0/1 known.
  std::vector<int8_t> base(static_cast<size_t>(g.lanes) * wcols, -1);
  for (int ci = 0; ci < g.local_cols; ++ci) {
    for (int lane = 0; lane < g.lanes; ++lane) {
      base[wix(lane, rear + ci)] =
          belief.local[static_cast<size_t>(lane) * g.local_cols + ci] == Occupancy::Occupied;
    }
  }
  for (int col = 1; col <= g.ext_cols; ++col) {
    for (int lane = 0; lane < g.lanes; ++lane) {
      BeliefCell b = belief.extended[static_cast<size_t>(lane) * g.ext_cols + (col - 1)];
      if (b != BeliefCell::Unknown) base[wix(lane, col + 1)] = (b == BeliefCell::Occupied);
    }
  }

  // Latent columns (unknown extended cells plus the columns that enter the
  // frame) with assignment laws conditioned on the known cells.
  auto law = column_law(g.lanes, cfg.p_occupied, cfg.column_exclusion);
  struct Var {
    int off = 0;
    std::vector<std::pair<uint32_t, double>> options;
  };
  std::vector<Var> vars;
  for (int off = rear; off <= front + d0; ++off) {
    uint32_t known_mask = 0, known_vals = 0;
    bool any_latent = false;
    for (int lane = 0; lane < g.lanes; ++lane) {
      int8_t v = base[wix(lane, off)];
      if (v < 0) {
        any_latent = true;
      } else {
        known_mask |= 1u << lane;
        if (v) known_vals |= 1u << lane;
      }
    }
    if (!any_latent) {
      // Fully pinned column: still reject patterns outside the law support
      // (for example both lanes occupied under the exclusion rule).
      bool supported = false;
      for (auto [m, pr] : law) supported |= (m == known_vals && pr > 0.0);
      if (!supported) {
        throw std::runtime_error("transition_model: belief inconsistent with the column law");
      }
      continue;
    }
    Var var;
    var.off = off;
    double total = 0.0;
    for (auto [m, pr] : law) {
      if ((m & known_mask) == known_vals) {
        var.options.push_back({m, pr});
        total += pr;
      }
    }
    if (var.options.empty() || total <= 0.0) {
      throw std::runtime_error("transition_model: belief inconsistent with the column law");
    }
    for (auto& opt : var.options) opt.second /= total;
    vars.push_back(std::move(var));
  }

  // Reveal branches: which extended cells get refreshed after the move.
  const int n_ext = g.lanes * g.ext_cols;
  std::vector<std::pair<std::vector<int>, double>> branches;
  if (sc.auto_reveal == AutoReveal::Full) {
    std::vector<int> all(n_ext);
    for (int i = 0; i < n_ext; ++i) all[i] = i + 1;
    branches.emplace_back(std::move(all), 1.0);
  } else if (sc.auto_reveal == AutoReveal::RandomHalf) {
    std::vector<int> h0, h1;
    for (int i = 1; i <= n_ext; ++i) (i <= n_ext / 2 ? h0 : h1).push_back(i);
    branches.emplace_back(std::move(h0), 0.5);
    branches.emplace_back(std::move(h1), 0.5);
  } else if (action.query.choice < sc.num_groups()) {
    branches.emplace_back(sc.query_groups[action.query.choice], 1.0);
  } else {
    branches.emplace_back(std::vector<int>{}, 1.0);
  }

  std::map<std::pair<std::string, double>, double> acc;
  std::vector<int8_t> world(base.size());
  std::vector<size_t> cursor(vars.size(), 0);
  BeliefState next = make_blank_belief(g);
  std::string key;

  while (true) {
    world = base;
    double weight = 1.0;
    for (size_t i = 0; i < vars.size(); ++i) {
      auto [m, pr] = vars[i].options[cursor[i]];
      weight *= pr;
      for (int lane = 0; lane < g.lanes; ++lane) {
        world[wix(lane, vars[i].off)] = static_cast<int8_t>((m >> lane) & 1u);
      }
    }

    // Deterministic step on this realization, same rules as the simulator.
    bool collided = false;
    if (d0 == 0) {
      if (target_lane != belief.pose.lane) collided = world[wix(target_lane, 0)] != 0;
    } else {
      for (int off = 1; off <= d0 && !collided; ++off) {
        collided = world[wix(target_lane, off)] != 0;
      }
    }
    const int d = collided ? 0 : d0;
    EgoPose next_pose =
        collided ? EgoPose{0, belief.pose.lane} : EgoPose{k.velocity_next, target_lane};
    double cost;
    if (collided) {
      cost = -cfg.reward.collision_penalty;
    } else {
      double reward = cfg.reward.per_cell * d;
      if (action.motion == MotionAction::DoNothing) reward += cfg.reward.idle_bonus;
      if (sc.has_query_choice() && action.query.choice == sc.num_groups()) {
        reward += cfg.reward.noquery_bonus;
      }
      cost = -reward;
    }

    for (const auto& [cells, branch_prob] : branches) {
      next.pose = next_pose;
      for (int ci = 0; ci < g.local_cols; ++ci) {
        for (int lane = 0; lane < g.lanes; ++lane) {
          next.local[static_cast<size_t>(lane) * g.local_cols + ci] =
              world[wix(lane, rear + ci + d)] ? Occupancy::Occupied : Occupancy::Free;
        }
      }
      for (int col = 1; col <= g.ext_cols; ++col) {
        for (int lane = 0; lane < g.lanes; ++lane) {
          int src = col + d;
          BeliefCell value = BeliefCell::Unknown;
          if (src <= g.ext_cols) {
            value = belief.extended[static_cast<size_t>(lane) * g.ext_cols + (src - 1)];
          }
          next.extended[static_cast<size_t>(lane) * g.ext_cols + (col - 1)] = value;
        }
      }
      for (int idx : cells) {
        int lane = 0, col = 0;
        cell_position(idx, g.lanes, &lane, &col);
        next.extended[static_cast<size_t>(lane) * g.ext_cols + (col - 1)] =
            world[wix(lane, col + 1 + d)] ? BeliefCell::Occupied : BeliefCell::Free;
      }
      encode_state(g, sc, next, key);
      acc[{key, cost}] += weight * branch_prob;
    }

    size_t i = 0;
    for (; i < vars.size(); ++i) {
      if (++cursor[i] < vars[i].options.size()) break;
      cursor[i] = 0;
    }
    if (i == vars.size()) break;
  }

  std::vector<Outcome> out;
  out.reserve(acc.size());
  for (const auto& [kk, pr] : acc) out.push_back(Outcome{kk.first, kk.second, pr});
  return out;
}

std::vector<std::string> enumerate_start_states(const EnvConfig& cfg) {
  cfg.validate();
  const GridGeometry& g = cfg.geometry;
  auto law = column_law(g.lanes, cfg.p_occupied, cfg.column_exclusion);
  const int n_ext = g.lanes * g.ext_cols;

  // Reveal masks at episode start, one flag per extended cell (lane-major).
  std::vector<std::vector<uint8_t>> reveal_masks;
  std::vector<uint8_t> blank(static_cast<size_t>(n_ext), 0);
  switch (cfg.scenario.auto_reveal) {
    case AutoReveal::None:
      reveal_masks.push_back(blank);
      break;
    case AutoReveal::Full:
      reveal_masks.push_back(std::vector<uint8_t>(static_cast<size_t>(n_ext), 1));
      break;
    case AutoReveal::RandomHalf: {
      auto h0 = blank, h1 = blank;
      for (int i = 1; i <= n_ext; ++i) {
        int lane = 0, col = 0;
        cell_position(i, g.lanes, &lane, &col);
        (i <= n_ext / 2 ? h0 : h1)[static_cast<size_t>(lane) * g.ext_cols + col - 1] = 1;
      }
      reveal_masks.push_back(std::move(h0));
      reveal_masks.push_back(std::move(h1));
      break;
    }
  }

  std::set<std::string> keys;
  for (int ego_lane = 0; ego_lane < g.lanes; ++ego_lane) {
    for (const auto& mask : reveal_masks) {
      // Per column, the distinct observable patterns with positive
      // probability.  Codes: 0 unknown, 1 free, 2 occupied.
      std::vector<std::vector<std::vector<uint8_t>>> col_options;
      for (int ci = 0; ci < g.total_cols(); ++ci) {
        int off = g.rear_offset() + ci;
        std::set<std::vector<uint8_t>> opts;
        for (auto [m, pr] : law) {
          std::vector<uint8_t> v(static_cast<size_t>(g.lanes));
          for (int lane = 0; lane < g.lanes; ++lane) {
            uint8_t occ = ((m >> lane) & 1u) ? 2 : 1;
            if (off <= 1) {
              // Local column: fully observed; the ego cell is forced free
              // after sampling.
              if (off == 0 && lane == ego_lane) occ = 1;
              v[lane] = occ;
            } else {
              int col = off - 1;
              bool revealed = mask[static_cast<size_t>(lane) * g.ext_cols + col - 1] != 0;
              v[lane] = revealed ? occ : 0;
            }
          }
          opts.insert(std::move(v));
        }
        col_options.emplace_back(opts.begin(), opts.end());
      }

      BeliefState b = make_blank_belief(g);
      b.pose = EgoPose{0, ego_lane};
      std::vector<size_t> cursor(col_options.size(), 0);
      while (true) {
        for (int ci = 0; ci < g.total_cols(); ++ci) {
          int off = g.rear_offset() + ci;
          const auto& v = col_options[ci][cursor[ci]];
          for (int lane = 0; lane < g.lanes; ++lane) {
            if (off <= 1) {
              b.local[static_cast<size_t>(lane) * g.local_cols + ci] =
                  v[lane] == 2 ? Occupancy::Occupied : Occupancy::Free;
            } else {
              b.extended[static_cast<size_t>(lane) * g.ext_cols + (off - 2)] =
                  static_cast<BeliefCell>(v[lane]);
            }
          }
        }
        keys.insert(encode_state(g, cfg.scenario, b));
        size_t i = 0;
        for (; i < col_options.size(); ++i) {
          if (++cursor[i] < col_options[i].size()) break;
          cursor[i] = 0;
        }
        if (i == col_options.size()) break;
      }
    }
  }
  return {keys.begin(), keys.end()};
}

int EnumeratedMdp::pair_of(int state, int action) const {
  for (size_t p = pair_begin[state]; p < pair_begin[state + 1]; ++p) {
    if (pair_action[p] == action) return static_cast<int>(p);
  }
  return -1;
}

EnumeratedMdp build_mdp(const EnvConfig& cfg, size_t state_cap) {
  cfg.validate();
  EnumeratedMdp mdp;
  mdp.cfg = cfg;
  ActionTable at(cfg);

  std::unordered_set<std::string> seen;
  std::deque<std::string> queue;
  auto discover = [&](const std::string& s) {
    if (seen.insert(s).second) {
      if (seen.size() > state_cap) {
        throw std::runtime_error("build_mdp: more than " + std::to_string(state_cap) +
                                 " reachable states; configuration too large for exact "
                                 "enumeration (raise the cap only for reduced setups)");
      }
      queue.push_back(s);
    }
  };
  for (const std::string& s : enumerate_start_states(cfg)) discover(s);
  while (!queue.empty()) {
    std::string s = std::move(queue.front());
    queue.pop_front();
    BeliefState b = decode_state(cfg.geometry, cfg.scenario, s);
    for (const JointAction& a : at.actions_for_velocity(b.pose.velocity)) {
      for (const Outcome& o : transition_model(cfg, b, a)) discover(o.next_state);
    }
  }

  mdp.states.assign(seen.begin(), seen.end());
  std::sort(mdp.states.begin(), mdp.states.end());
  mdp.index.reserve(mdp.states.size());
  for (size_t i = 0; i < mdp.states.size(); ++i) mdp.index[mdp.states[i]] = static_cast<int>(i);

  mdp.pair_begin.push_back(0);
  mdp.trans_begin.push_back(0);
  for (const std::string& s : mdp.states) {
    BeliefState b = decode_state(cfg.geometry, cfg.scenario, s);
    for (const JointAction& a : at.actions_for_velocity(b.pose.velocity)) {
      mdp.pair_action.push_back(action_id(cfg.scenario, a));
      for (const Outcome& o : transition_model(cfg, b, a)) {
        auto it = mdp.index.find(o.next_state);
        if (it == mdp.index.end()) {
          throw std::logic_error("build_mdp: successor state escaped enumeration");
        }
        mdp.trans_next.push_back(it->second);
        mdp.trans_cost.push_back(o.cost);
        mdp.trans_prob.push_back(o.prob);
      }
      mdp.trans_begin.push_back(mdp.trans_next.size());
    }
    mdp.pair_begin.push_back(mdp.pair_action.size());
  }
  return mdp;
}

namespace {

// Shared Jacobi machinery: minima from the previous iterate, then one
// backup per pair.  Both the serial and the OpenMP path evaluate exactly
// these expressions per element, so results agree bitwise.
struct Sweep {
  const EnumeratedMdp& mdp;
  double alpha;

  double state_min(const std::vector<double>& q, int64_t s) const {
    size_t b = mdp.pair_begin[s], e = mdp.pair_begin[s + 1];
    double m = q[b];
    for (size_t p = b + 1; p < e; ++p) m = std::min(m, q[p]);
    return m;
  }
  double backup(const std::vector<double>& m, int64_t p) const {
    double v = 0.0;
    for (size_t t = mdp.trans_begin[p]; t < mdp.trans_begin[p + 1]; ++t) {
      v += mdp.trans_prob[t] * (mdp.trans_cost[t] + alpha * m[mdp.trans_next[t]]);
    }
    return v;
  }
};

}  // namespace

ValueIterationResult value_iteration(const EnumeratedMdp& mdp, double alpha, double tol,
                                     int max_sweeps, int threads) {
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tolerance must be positive");
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("value_iteration: alpha must lie in [0, 1)");
  }
  const int64_t S = static_cast<int64_t>(mdp.num_states());
  const int64_t P = static_cast<int64_t>(mdp.num_pairs());
  std::vector<double> q(P, 0.0), qn(P, 0.0), m(S, 0.0);
  Sweep sweep{mdp, alpha};

  for (int it = 1; it <= max_sweeps; ++it) {
    double residual = 0.0;
    if (threads > 1) {
#pragma omp parallel num_threads(threads)
      {
#pragma omp for schedule(static)
        for (int64_t s = 0; s < S; ++s) m[s] = sweep.state_min(q, s);
#pragma omp for schedule(static) reduction(max : residual)
        for (int64_t p = 0; p < P; ++p) {
          qn[p] = sweep.backup(m, p);
          residual = std::max(residual, std::fabs(qn[p] - q[p]));
        }
      }
    } else {
      for (int64_t s = 0; s < S; ++s) m[s] = sweep.state_min(q, s);
      for (int64_t p = 0; p < P; ++p) {
        qn[p] = sweep.backup(m, p);
        residual = std::max(residual, std::fabs(qn[p] - q[p]));
      }
    }
    q.swap(qn);
    if (residual <= tol) return ValueIterationResult{std::move(q), residual, it};
  }
  throw std::runtime_error("value_iteration: did not converge within " +
                           std::to_string(max_sweeps) + " sweeps");
}

double bellman_residual(const EnumeratedMdp& mdp, double alpha, const std::vector<double>& q) {
  if (q.size() != mdp.num_pairs()) {
    throw std::invalid_argument("bellman_residual: value vector size mismatch");
  }
  const int64_t S = static_cast<int64_t>(mdp.num_states());
  const int64_t P = static_cast<int64_t>(mdp.num_pairs());
  std::vector<double> m(S, 0.0);
  Sweep sweep{mdp, alpha};
  for (int64_t s = 0; s < S; ++s) m[s] = sweep.state_min(q, s);
  double residual = 0.0;
  for (int64_t p = 0; p < P; ++p) {
    residual = std::max(residual, std::fabs(sweep.backup(m, p) - q[p]));
  }
  return residual;
}

QTable qtable_from_values(const EnumeratedMdp& mdp, const std::vector<double>& q, double alpha) {
  if (q.size() != mdp.num_pairs()) {
    throw std::invalid_argument("qtable_from_values: value vector size mismatch");
  }
  QTableMeta meta;
  meta.scenario = std::string(scenario_name(mdp.cfg.scenario.id));
  meta.geometry_hash = geometry_hash(mdp.cfg);
  meta.alpha = alpha;
  QTable table(meta, num_action_ids(mdp.cfg.scenario));
  for (size_t s = 0; s < mdp.num_states(); ++s) {
    for (size_t p = mdp.pair_begin[s]; p < mdp.pair_begin[s + 1]; ++p) {
      table.set(mdp.states[s], mdp.pair_action[p], q[p]);
    }
  }
  return table;
}

CompareReport compare_qtables(const EnumeratedMdp& mdp, const std::vector<double>& q_star,
                              const QTable& learned, uint32_t min_visits) {
  if (q_star.size() != mdp.num_pairs()) {
    throw std::invalid_argument("compare_qtables: value vector size mismatch");
  }
  CompareReport report;
  for (const auto& [state, row] : learned.states()) {
    auto it = mdp.index.find(state);
    for (int a = 0; a < learned.num_actions(); ++a) {
      if (!row.has(a)) continue;
      if (row.visits[a] < min_visits) {
        ++report.skipped_rare;
        continue;
      }
      int pair = it == mdp.index.end() ? -1 : mdp.pair_of(it->second, a);
      if (pair < 0) {
        ++report.unknown_pairs;
        continue;
      }
      ++report.eligible_pairs;
      double diff = std::fabs(row.q[a] - q_star[pair]);
      if (diff > report.l_inf) {
        report.l_inf = diff;
        report.worst_state = state;
        report.worst_action = a;
        report.worst_learned = row.q[a];
        report.worst_oracle = q_star[pair];
      }
    }
  }
  return report;
}

}  // namespace qdrive
