#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include "qdrive/env.hpp"
#include "qdrive/qtable.hpp"
#include "qdrive/run_config.hpp"

namespace qdrive {

// One-step target: immediate cost plus discounted best (minimum) value of
// the successor state.
inline double q_target(double cost, double alpha, double min_next) {
  return cost + alpha * min_next;
}

// Exponential-smoothing update with constant step size.
inline double q_update(double old_q, double gamma_step, double target) {
  return (1.0 - gamma_step) * old_q + gamma_step * target;
}

// Greedy (cost-minimizing) action over the feasible ids, reading absent
// pairs as 0; ties break toward the smaller id.  `row` may be null (state
// never seen), in which case the first feasible id is returned.
int greedy_action_id(const QTable::StateQ* row, const std::vector<int>& feasible_ids);

// Tabular value learning over the simulator.  Exploration is uniform over
// the feasible joint actions; the episode density is drawn uniformly from
// params.p_occupied_training_set; episodes run for a fixed number of steps
// (no terminal states).  Everything is driven by seeds derived from
// (params.seed, episode index), so results are reproducible bit-for-bit and
// independent of how many episodes ran before a given one.
//
// When `progress` is non-null a short line (episode count, table size, max
// update magnitude since the last line) is printed about twenty times over
// the run.
QTable train(const EnvConfig& env_cfg, const LearnerParams& params,
             std::ostream* progress = nullptr);

}  // namespace qdrive
