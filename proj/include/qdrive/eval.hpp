#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qdrive/env.hpp"
#include "qdrive/qtable.hpp"

namespace qdrive {

struct EvalRequest {
  uint64_t episodes = 5000;
  uint64_t steps = 100;
  double density = 0.5;
  uint64_t seed = 1;
  int workers = 1;
};

// Aggregate statistics of greedy-policy rollouts.  All fractions are per
// step; the velocity histogram records the velocity after each step.
struct EvalReport {
  std::string scenario;
  double density = 0.0;
  uint64_t episodes = 0;
  uint64_t steps = 0;
  double mean_distance = 0.0;
  double std_distance = 0.0;                // sample (n-1) deviation
  std::vector<double> velocity_frac;        // size v_max+1
  double motion_frac[kNumMotionActions] = {0, 0, 0, 0};  // A, D, N, L
  double noquery_frac = 0.0;
  std::vector<double> group_frac;           // per query group
  uint64_t collision_count = 0;
  double unseen_rate = 0.0;                 // states with no stored entry
};

// Rolls out the greedy policy of `table` for req.episodes independent
// episodes of req.steps steps at the given density (column exclusion per
// cfg).  Episode e uses seeds derived from (req.seed, e), so results do not
// depend on req.workers: episodes are independent and aggregation runs
// serially in episode order.  Workers > 1 parallelize over episodes via
// OpenMP; workers <= 1 is the plain serial reference.
//
// The table's metadata must match the config (scenario name and geometry
// hash); otherwise std::runtime_error.  When `dump` is non-null it receives
// one JSON-lines string per episode (step records), in episode order.
EvalReport evaluate(const QTable& table, const EnvConfig& cfg, const EvalRequest& req,
                    std::vector<std::string>* dump = nullptr);

extern const char* const kEvalCsvHeader;

// Appends reports as CSV rows (fixed 20-column schema; up to four query
// groups, v_max at most 2).  Throws when a report does not fit the schema.
void write_eval_csv(const std::vector<EvalReport>& rows, const std::string& path);

// A parsed CSV row; numeric_columns() are every column except the scenario.
struct EvalCsvRow {
  std::string scenario;
  double density = 0.0;
  uint64_t episodes = 0;
  uint64_t steps = 0;
  double mean_distance = 0.0;
  double std_distance = 0.0;
  double v0 = 0.0, v1 = 0.0, v2 = 0.0;
  double acc = 0.0, dec = 0.0, nothing = 0.0, lane = 0.0;
  double noquery = 0.0;
  double q_g1 = 0.0, q_g2 = 0.0, q_g3 = 0.0, q_g4 = 0.0;
  uint64_t collisions = 0;
  double unseen_rate = 0.0;
};

std::vector<EvalCsvRow> read_eval_csv(const std::string& path);

// Writes parsed rows back out (used when merging report files).
void write_eval_csv_rows(const std::vector<EvalCsvRow>& rows, const std::string& path);

}  // namespace qdrive
