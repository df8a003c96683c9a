#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdrive/env.hpp"
#include "qdrive/qtable.hpp"

namespace qdrive {

// One possible successor of a (belief state, joint action) pair.
struct Outcome {
  std::string next_state;
  double cost = 0.0;
  double prob = 0.0;
};

// Exact successor distribution of the simulator, marginalized over the
// hidden cells.  Unknown extended cells and the columns about to enter the
// look-ahead window are enumerated with their column law (conditioned on
// whatever the belief already pins down, including the joint-redraw
// exclusion rule); the deterministic step is applied per realization and
// identical (next state, cost) branches are merged.  Random-half scenarios
// branch over the two halves with probability 1/2 each.  Outcomes are
// sorted by (next_state, cost); probabilities sum to 1.
//
// Throws std::invalid_argument for actions infeasible in `belief` and
// std::runtime_error for beliefs inconsistent with the column law.
std::vector<Outcome> transition_model(const EnvConfig& cfg, const BeliefState& belief,
                                      const JointAction& action);

// All belief states with positive probability at episode start (over lanes,
// local occupancy patterns, and auto-revealed extended cells).
std::vector<std::string> enumerate_start_states(const EnvConfig& cfg);

// The reachable belief MDP in flat arrays, states sorted by key.  Per state
// the feasible pairs appear in ascending action-id order.
struct EnumeratedMdp {
  EnvConfig cfg;
  std::vector<std::string> states;
  std::unordered_map<std::string, int> index;

  std::vector<size_t> pair_begin;   // per state, size states+1
  std::vector<int> pair_action;     // per pair: joint action id
  std::vector<size_t> trans_begin;  // per pair, size pairs+1
  std::vector<int> trans_next;      // per transition: successor state index
  std::vector<double> trans_cost;
  std::vector<double> trans_prob;

  size_t num_states() const { return states.size(); }
  size_t num_pairs() const { return pair_action.size(); }
  size_t num_transitions() const { return trans_next.size(); }

  // Pair index for (state index, action id); -1 when not feasible there.
  int pair_of(int state, int action) const;
};

// Breadth-first closure from the start states.  Practical only for reduced
// configurations; throws std::runtime_error (reporting the count reached)
// when more than `state_cap` states are discovered.
EnumeratedMdp build_mdp(const EnvConfig& cfg, size_t state_cap);

struct ValueIterationResult {
  std::vector<double> q;  // per pair, aligned with mdp.pair_action
  double residual = 0.0;
  int sweeps = 0;
};

// Q-value iteration with Jacobi sweeps: every sweep computes all pair values
// from the previous iterate, so the result does not depend on state order or
// parallel partitioning (bitwise).  `threads <= 1` runs the plain serial
// reference; more threads run the OpenMP kernel.  Throws std::runtime_error
// if the residual does not reach `tol` within `max_sweeps`.
ValueIterationResult value_iteration(const EnumeratedMdp& mdp, double alpha, double tol,
                                     int max_sweeps = 100000, int threads = 1);

// max over pairs of |(Bellman backup)(q) - q|.
double bellman_residual(const EnumeratedMdp& mdp, double alpha, const std::vector<double>& q);

// Packs oracle values into the standard table shape for saving/inspection.
QTable qtable_from_values(const EnumeratedMdp& mdp, const std::vector<double>& q, double alpha);

struct CompareReport {
  double l_inf = 0.0;        // over eligible pairs
  size_t eligible_pairs = 0;  // learned pairs with visits >= min_visits
  size_t skipped_rare = 0;    // learned pairs below the visit floor
  size_t unknown_pairs = 0;   // learned pairs absent from the enumerated MDP
  std::string worst_state;
  int worst_action = -1;
  double worst_learned = 0.0;
  double worst_oracle = 0.0;
};

// L-infinity distance between a learned table and oracle values, restricted
// to pairs the learner visited at least `min_visits` times.
CompareReport compare_qtables(const EnumeratedMdp& mdp, const std::vector<double>& q_star,
                              const QTable& learned, uint32_t min_visits);

}  // namespace qdrive
