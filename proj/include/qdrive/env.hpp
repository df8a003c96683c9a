#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdrive/grid.hpp"
#include "qdrive/motion.hpp"
#include "qdrive/perception.hpp"

namespace qdrive {

// Stage rewards; the learner and planner minimize cost = -reward.
struct RewardSpec {
  double per_cell = 1.0;             // reward per cell of forward progress
  double idle_bonus = 0.1;           // extra reward for choosing DoNothing
  double noquery_bonus = 0.1;        // extra reward for staying quiet (only
                                     // in scenarios with a real query choice)
  double collision_penalty = -1000.0;  // sole reward on a collision step

  bool operator==(const RewardSpec&) const = default;
};

struct EnvConfig {
  GridGeometry geometry;
  int v_max = 2;
  ScenarioSpec scenario;
  RewardSpec reward;
  double p_occupied = 0.5;
  bool column_exclusion = true;

  // Throws std::invalid_argument when fields are inconsistent (for example
  // v_max reaching past the look-ahead window).
  void validate() const;
};

// A joint decision: where to move and what to ask.
struct JointAction {
  MotionAction motion;
  QueryAction query;

  bool operator==(const JointAction&) const = default;
};

// Canonical dense id for a joint action: motion-major, query groups
// ascending with NoQuery last.  Ids are comparable across runs for a fixed
// scenario; ties in value are broken toward the smaller id.
inline int action_id(const ScenarioSpec& scenario, const JointAction& a) {
  return static_cast<int>(a.motion) * scenario.num_query_actions() + a.query.choice;
}
JointAction action_from_id(const ScenarioSpec& scenario, int id);
int num_action_ids(const ScenarioSpec& scenario);

// Textual action key, e.g. "A:g1" (accelerate, query group 1) or "N:nq"
// (do nothing, no query).
std::string action_key(const ScenarioSpec& scenario, const JointAction& a);
JointAction action_from_key(const ScenarioSpec& scenario, std::string_view key);

// Feasible joint actions depend on the pose only through the velocity (and
// on static scenario/geometry data), so they can be precomputed per velocity.
std::vector<JointAction> feasible_joint_actions(const EnvConfig& cfg, const EgoPose& pose);

class ActionTable {
 public:
  explicit ActionTable(const EnvConfig& cfg);
  const std::vector<int>& ids_for_velocity(int v) const { return ids_[v]; }
  const std::vector<JointAction>& actions_for_velocity(int v) const { return actions_[v]; }

 private:
  std::vector<std::vector<int>> ids_;
  std::vector<std::vector<JointAction>> actions_;
};

// One step of an evaluation trajectory, for optional JSONL dumps.
struct StepRecord {
  int step = 0;
  std::string state;
  std::string action;
  double cost = 0.0;
  std::string next_state;
  bool collided = false;
  int displacement = 0;
};

// The simulator.  Hidden ground truth is a GridWindow in the ego frame;
// the agent sees a BeliefState.  Step order: resolve motion against ground
// truth, advance the frame by the realized displacement, shift the extended
// belief, apply reveals (query answer or scenario auto-reveal) against the
// new frame, then re-read the local cells.  On a collision the frame does
// not move and the query still resolves, against the unshifted frame.
class Environment {
 public:
  explicit Environment(const EnvConfig& cfg);

  // Starts an episode: v = 0, uniform random lane, fresh ground truth with
  // the ego cell forced Free, extended belief all Unknown (then auto-reveal
  // for RC/FV).  `p_occupied` overrides the config density for this episode.
  void reset(double p_occupied, uint64_t episode_seed);

  struct StepResult {
    double cost = 0.0;
    bool collided = false;
    int displacement = 0;
  };

  // Applies a joint action.  Throws std::invalid_argument on infeasible
  // actions (caller bug).
  StepResult step(const JointAction& action);

  // Testing/diagnostics: seats the simulator at an explicit configuration.
  // `truth` must use the same geometry; the belief must mirror truth on the
  // local cells, have a Free ego cell, and agree with truth wherever the
  // extended belief is known.  Throws std::invalid_argument otherwise.
  void force_state(const BeliefState& belief, const GridWindow& truth, double p_occupied,
                   uint64_t seed);

  const EnvConfig& config() const { return cfg_; }
  const BeliefState& belief() const { return belief_; }
  const EgoPose& pose() const { return belief_.pose; }
  const GridWindow& ground_truth() const { return window_; }

 private:
  void apply_auto_reveal();
  void read_local();

  EnvConfig cfg_;
  GridWindow window_;
  BeliefState belief_;
  Rng rng_;  // lane draws and RC half selection
  std::vector<int> all_cells_;   // 1..lanes*ext_cols
  std::vector<int> half_cells_[2];
};

}  // namespace qdrive
