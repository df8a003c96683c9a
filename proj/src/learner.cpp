#include "qdrive/learner.hpp"

#include <cmath>
#include <stdexcept>

namespace qdrive {

int greedy_action_id(const QTable::StateQ* row, const std::vector<int>& feasible_ids) {
  if (feasible_ids.empty()) throw std::invalid_argument("greedy_action_id: no feasible actions");
  if (!row) return feasible_ids[0];
  int best = feasible_ids[0];
  double best_q = row->q[best];
  for (size_t i = 1; i < feasible_ids.size(); ++i) {
    double q = row->q[feasible_ids[i]];
    if (q < best_q) {
      best_q = q;
      best = feasible_ids[i];
    }
  }
  return best;
}

QTable train(const EnvConfig& env_cfg, const LearnerParams& params, std::ostream* progress) {
  env_cfg.validate();
  if (params.p_occupied_training_set.empty()) {
    throw std::invalid_argument("train: empty density training set");
  }
  for (double p : params.p_occupied_training_set) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("train: training density out of [0,1)");
  }

  QTableMeta meta;
  meta.scenario = std::string(scenario_name(env_cfg.scenario.id));
  meta.geometry_hash = geometry_hash(env_cfg);
  meta.alpha = params.alpha;
  meta.gamma_step = params.gamma_step;
  meta.episodes = params.num_episodes;
  meta.steps_per_episode = params.steps_per_episode;
  meta.seed = params.seed;
  QTable table(meta, num_action_ids(env_cfg.scenario));

  Environment env(env_cfg);
  ActionTable actions(env_cfg);
  const double alpha = params.alpha;
  const double gamma = params.gamma_step;

  std::string key, next_key;
  uint64_t report_every =
      params.num_episodes >= 20 ? params.num_episodes / 20 : 1;
  double window_max_delta = 0.0;

  for (uint64_t ep = 0; ep < params.num_episodes; ++ep) {
    uint64_t ep_seed = derive_seed(params.seed, ep);
    Rng agent(derive_seed(ep_seed, 2));
    double p = params.p_occupied_training_set[agent.uniform_index(
        params.p_occupied_training_set.size())];
    env.reset(p, ep_seed);
    encode_state(env_cfg.geometry, env_cfg.scenario, env.belief(), key);
    QTable::StateQ* cur = &table.touch(key);

    for (uint64_t t = 0; t < params.steps_per_episode; ++t) {
      int v = env.pose().velocity;
      const auto& ids = actions.ids_for_velocity(v);
      const auto& acts = actions.actions_for_velocity(v);
      size_t k = agent.uniform_index(ids.size());

      Environment::StepResult res = env.step(acts[k]);
      encode_state(env_cfg.geometry, env_cfg.scenario, env.belief(), next_key);

      // References into the table stay valid across inserts, so we can hold
      // on to the current row while touching the successor.
      QTable::StateQ* nxt = &table.touch(next_key);
      const auto& next_ids = actions.ids_for_velocity(env.pose().velocity);
      double min_next = nxt->q[next_ids[0]];
      for (size_t i = 1; i < next_ids.size(); ++i) {
        min_next = std::min(min_next, nxt->q[next_ids[i]]);
      }

      double old_q = cur->q[ids[k]];
      double new_q = q_update(old_q, gamma, q_target(res.cost, alpha, min_next));
      table.update(*cur, ids[k], new_q);
      window_max_delta = std::max(window_max_delta, std::fabs(new_q - old_q));

      key.swap(next_key);
      cur = nxt;
    }

    if (progress && ((ep + 1) % report_every == 0 || ep + 1 == params.num_episodes)) {
      *progress << "episode " << (ep + 1) << "/" << params.num_episodes
                << "  states=" << table.num_states() << "  pairs=" << table.num_pairs()
                << "  max|dQ|=" << window_max_delta << "\n";
      window_max_delta = 0.0;
    }
  }
  return table;
}

}  // namespace qdrive
