#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdrive/env.hpp"

namespace qdrive {

struct LearnerParams {
  double alpha = 0.91;       // discount factor
  double gamma_step = 0.01;  // constant step size
  uint64_t num_episodes = 200000;
  uint64_t steps_per_episode = 200;
  // Training draws the episode density uniformly from this set.
  std::vector<double> p_occupied_training_set = {0.0, 0.1, 0.2, 0.3, 0.4,
                                                 0.5, 0.6, 0.7, 0.8};
  uint64_t seed = 1;

  bool operator==(const LearnerParams&) const = default;
};

struct EvalParams {
  uint64_t episodes = 5000;
  uint64_t steps = 100;
  std::vector<double> densities = {0.0, 0.2, 0.5, 0.8};
  uint64_t seed = 1;

  bool operator==(const EvalParams&) const = default;
};

// Everything a run needs, loadable from JSON.  Defaults reproduce the
// standard two-lane configuration (3 local + 4 extended columns, v_max 2).
struct RunConfig {
  GridGeometry geometry;
  int v_max = 2;
  std::string scenario = "C2";
  // Custom query groups (1-based extended cell indices).  When absent the
  // scenario's standard groups are used.
  std::optional<std::vector<std::vector<int>>> query_groups;
  RewardSpec reward;
  double p_occupied = 0.5;
  bool column_exclusion = true;
  LearnerParams learner;
  EvalParams eval;

  bool operator==(const RunConfig&) const = default;

  // Builds and validates the simulator config (scenario spec resolved).
  EnvConfig make_env_config() const;
};

RunConfig load_run_config(const std::string& path);        // throws on errors
void save_run_config(const RunConfig& cfg, const std::string& path);
RunConfig parse_run_config_json(const std::string& text);  // for tests
std::string run_config_to_json(const RunConfig& cfg);

// FNV-1a over a canonical serialization of everything that defines the MDP:
// geometry, v_max, scenario (including resolved query groups and reveal
// rule), and rewards.  Densities, seeds, exclusion flag and learner
// hyperparameters deliberately do not contribute: tables remain valid across
// those.  Stored in QTableMeta and checked before evaluation.
uint64_t geometry_hash(const EnvConfig& cfg);

}  // namespace qdrive
