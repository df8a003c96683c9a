#include "qdrive/env.hpp"

#include <stdexcept>

namespace qdrive {

void EnvConfig::validate() const {
  if (geometry.lanes < 1 || geometry.lanes > 2) {
    throw std::invalid_argument("EnvConfig: lanes must be 1 or 2");
  }
  if (geometry.local_cols < 2) {
    throw std::invalid_argument("EnvConfig: need at least two local columns (ego and +1)");
  }
  if (geometry.ext_cols < 0) throw std::invalid_argument("EnvConfig: negative ext_cols");
  if (v_max < 1) throw std::invalid_argument("EnvConfig: v_max must be at least 1");
  if (v_max > geometry.front_offset()) {
    throw std::invalid_argument("EnvConfig: v_max exceeds the look-ahead window (need v_max <= 1 + ext_cols)");
  }
  if (!(p_occupied >= 0.0 && p_occupied < 1.0)) {
    throw std::invalid_argument("EnvConfig: p_occupied must lie in [0, 1)");
  }
  if (column_exclusion && geometry.lanes < 2) {
    throw std::invalid_argument(
        "EnvConfig: column_exclusion needs at least two lanes (it would force every cell Free)");
  }
  if (!scenario.query_groups.empty()) validate_query_groups(scenario.query_groups, geometry);
  if (scenario.id == ScenarioId::C2 && geometry.ext_cols % 2 != 0) {
    throw std::invalid_argument("EnvConfig: C2 requires even ext_cols");
  }
}

JointAction action_from_id(const ScenarioSpec& scenario, int id) {
  int nq = scenario.num_query_actions();
  if (id < 0 || id >= num_action_ids(scenario)) {
    throw std::invalid_argument("action_from_id: id out of range");
  }
  return JointAction{static_cast<MotionAction>(id / nq), QueryAction{id % nq}};
}

int num_action_ids(const ScenarioSpec& scenario) {
  return kNumMotionActions * scenario.num_query_actions();
}

std::string action_key(const ScenarioSpec& scenario, const JointAction& a) {
  std::string out(1, motion_char(a.motion));
  out.push_back(':');
  if (a.query.choice == scenario.num_groups()) {
    out += "nq";
  } else {
    out.push_back('g');
    out += std::to_string(a.query.choice + 1);
  }
  return out;
}

JointAction action_from_key(const ScenarioSpec& scenario, std::string_view key) {
  auto fail = [&] {
    throw std::invalid_argument("action_from_key: bad action key '" + std::string(key) + "'");
  };
  if (key.size() < 3 || key[1] != ':') fail();
  MotionAction motion;
  switch (key[0]) {
    case 'A': motion = MotionAction::Accelerate; break;
    case 'D': motion = MotionAction::Decelerate; break;
    case 'N': motion = MotionAction::DoNothing; break;
    case 'L': motion = MotionAction::ChangeLane; break;
    default: fail(); motion = MotionAction::DoNothing;
  }
  std::string_view q = key.substr(2);
  QueryAction query = scenario.no_query();
  if (q != "nq") {
    if (q.size() < 2 || q[0] != 'g') fail();
    int idx = 0;
    for (char c : q.substr(1)) {
      if (c < '0' || c > '9') fail();
      idx = idx * 10 + (c - '0');
    }
    if (idx < 1 || idx > scenario.num_groups()) fail();
    query = QueryAction{idx - 1};
  }
  return JointAction{motion, query};
}

std::vector<JointAction> feasible_joint_actions(const EnvConfig& cfg, const EgoPose& pose) {
  std::vector<JointAction> out;
  auto motions = feasible_motion_actions(pose, cfg.v_max, cfg.geometry.lanes);
  auto queries = feasible_query_actions(cfg.scenario);
  out.reserve(motions.size() * queries.size());
  // Canonical (ascending id) order: motion-major, NoQuery last.
  for (MotionAction m : {MotionAction::Accelerate, MotionAction::Decelerate,
                         MotionAction::DoNothing, MotionAction::ChangeLane}) {
    bool feasible = false;
    for (MotionAction f : motions) feasible |= (f == m);
    if (!feasible) continue;
    for (const QueryAction& q : queries) out.push_back(JointAction{m, q});
  }
  return out;
}

ActionTable::ActionTable(const EnvConfig& cfg) {
  ids_.resize(cfg.v_max + 1);
  actions_.resize(cfg.v_max + 1);
  for (int v = 0; v <= cfg.v_max; ++v) {
    actions_[v] = feasible_joint_actions(cfg, EgoPose{v, 0});
    for (const JointAction& a : actions_[v]) ids_[v].push_back(action_id(cfg.scenario, a));
  }
}

Environment::Environment(const EnvConfig& cfg)
    : cfg_(cfg),
      window_(cfg.geometry, OccupancySampler(cfg.p_occupied, cfg.column_exclusion, 0)),
      belief_(make_blank_belief(cfg.geometry)),
      rng_(0) {
  cfg_.validate();
  int n = cfg_.geometry.lanes * cfg_.geometry.ext_cols;
  for (int i = 1; i <= n; ++i) {
    all_cells_.push_back(i);
    half_cells_[i <= n / 2 ? 0 : 1].push_back(i);
  }
}

void Environment::reset(double p_occupied, uint64_t episode_seed) {
  if (!(p_occupied >= 0.0 && p_occupied < 1.0)) {
    throw std::invalid_argument("Environment::reset: p_occupied must lie in [0, 1)");
  }
  rng_ = Rng(derive_seed(episode_seed, 0));
  window_.sampler() =
      OccupancySampler(p_occupied, cfg_.column_exclusion, derive_seed(episode_seed, 1));
  belief_.pose.velocity = 0;
  belief_.pose.lane =
      cfg_.geometry.lanes == 1 ? 0 : static_cast<int>(rng_.uniform_index(cfg_.geometry.lanes));
  window_.resample_all();
  window_.set(belief_.pose.lane, 0, Occupancy::Free);  // the ego occupies this cell
  std::fill(belief_.extended.begin(), belief_.extended.end(), BeliefCell::Unknown);
  apply_auto_reveal();
  read_local();
}

Environment::StepResult Environment::step(const JointAction& action) {
  if (action.query.choice < 0 || action.query.choice > cfg_.scenario.num_groups()) {
    throw std::invalid_argument("Environment::step: query action out of range");
  }
  MotionOutcome mo = resolve_motion(window_, belief_.pose, action.motion, cfg_.v_max);

  double cost;
  if (mo.collided) {
    cost = -cfg_.reward.collision_penalty;
  } else {
    double reward = cfg_.reward.per_cell * mo.displacement;
    if (action.motion == MotionAction::DoNothing) reward += cfg_.reward.idle_bonus;
    if (cfg_.scenario.has_query_choice() && action.query == cfg_.scenario.no_query()) {
      reward += cfg_.reward.noquery_bonus;
    }
    cost = -reward;
  }

  // On a collision the displacement is zero, so the frame and extended
  // belief stay put and any query resolves against the unshifted frame.
  window_.advance(mo.displacement);
  shift_extended_belief(cfg_.geometry, mo.displacement, belief_.extended);

  if (cfg_.scenario.auto_reveal == AutoReveal::None) {
    if (action.query.choice < cfg_.scenario.num_groups()) {
      apply_reveal(cfg_.geometry, window_, cfg_.scenario.query_groups[action.query.choice],
                   belief_);
    }
  } else {
    apply_auto_reveal();
  }

  belief_.pose = mo.pose;
  read_local();
  return StepResult{cost, mo.collided, mo.displacement};
}

void Environment::force_state(const BeliefState& belief, const GridWindow& truth,
                              double p_occupied, uint64_t seed) {
  const GridGeometry& g = cfg_.geometry;
  if (!(truth.geometry() == g)) {
    throw std::invalid_argument("force_state: geometry mismatch");
  }
  if (belief.local.size() != static_cast<size_t>(g.lanes) * g.local_cols ||
      belief.extended.size() != static_cast<size_t>(g.lanes) * g.ext_cols) {
    throw std::invalid_argument("force_state: belief arrays have the wrong shape");
  }
  if (belief.pose.lane < 0 || belief.pose.lane >= g.lanes || belief.pose.velocity < 0 ||
      belief.pose.velocity > cfg_.v_max) {
    throw std::invalid_argument("force_state: pose out of range");
  }
  if (belief.local_at(g, belief.pose.lane, 0) != Occupancy::Free) {
    throw std::invalid_argument("force_state: ego cell must be Free");
  }
  for (int ci = 0; ci < g.local_cols; ++ci) {
    int offset = g.rear_offset() + ci;
    for (int lane = 0; lane < g.lanes; ++lane) {
      if (belief.local_at(g, lane, offset) != truth.at(lane, offset)) {
        throw std::invalid_argument("force_state: belief local cells must mirror ground truth");
      }
    }
  }
  for (int col = 1; col <= g.ext_cols; ++col) {
    for (int lane = 0; lane < g.lanes; ++lane) {
      BeliefCell b = belief.extended_at(g, lane, col);
      if (b != BeliefCell::Unknown && b != to_belief(truth.at(lane, col + 1))) {
        throw std::invalid_argument("force_state: known extended cells must match ground truth");
      }
    }
  }
  rng_ = Rng(derive_seed(seed, 0));
  for (int offset = g.rear_offset(); offset <= g.front_offset(); ++offset) {
    for (int lane = 0; lane < g.lanes; ++lane) window_.set(lane, offset, truth.at(lane, offset));
  }
  window_.sampler() = OccupancySampler(p_occupied, cfg_.column_exclusion, derive_seed(seed, 1));
  belief_ = belief;
}

void Environment::apply_auto_reveal() {
  switch (cfg_.scenario.auto_reveal) {
    case AutoReveal::None:
      break;
    case AutoReveal::Full:
      apply_reveal(cfg_.geometry, window_, all_cells_, belief_);
      break;
    case AutoReveal::RandomHalf:
      apply_reveal(cfg_.geometry, window_, half_cells_[rng_.uniform_index(2)], belief_);
      break;
  }
}

void Environment::read_local() {
  const GridGeometry& g = cfg_.geometry;
  for (int ci = 0; ci < g.local_cols; ++ci) {
    int offset = g.rear_offset() + ci;
    for (int lane = 0; lane < g.lanes; ++lane) {
      belief_.local[static_cast<size_t>(lane) * g.local_cols + ci] = window_.at(lane, offset);
    }
  }
}

}  // namespace qdrive
