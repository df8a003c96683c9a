#include "qdrive/run_config.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace qdrive {

using nlohmann::json;

EnvConfig RunConfig::make_env_config() const {
  EnvConfig env;
  env.geometry = geometry;
  env.v_max = v_max;
  env.scenario = make_scenario(scenario_from_name(scenario), geometry);
  if (query_groups) {
    if (env.scenario.auto_reveal != AutoReveal::None || !env.scenario.extended_in_state) {
      throw std::invalid_argument("query_groups can only override scenarios C1 or C2");
    }
    validate_query_groups(*query_groups, geometry);
    env.scenario.query_groups = *query_groups;
  }
  env.reward = reward;
  env.p_occupied = p_occupied;
  env.column_exclusion = column_exclusion;
  env.validate();
  return env;
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok |= (item.key() == k);
    if (!ok) {
      throw std::runtime_error(std::string("config: unknown key '") + item.key() + "' in " +
                               where);
    }
  }
}

template <typename T>
void get_if_present(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

RunConfig parse_run_config_checked(const std::string& text) {
  json j = json::parse(text);
  if (!j.is_object()) throw std::runtime_error("config: top level must be an object");
  check_keys(j,
             {"geometry", "v_max", "scenario", "query_groups", "reward", "p_occupied",
              "column_exclusion", "learner", "eval"},
             "top level");
  RunConfig cfg;
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    check_keys(g, {"lanes", "local_cols", "ext_cols"}, "geometry");
    get_if_present(g, "lanes", cfg.geometry.lanes);
    get_if_present(g, "local_cols", cfg.geometry.local_cols);
    get_if_present(g, "ext_cols", cfg.geometry.ext_cols);
  }
  get_if_present(j, "v_max", cfg.v_max);
  get_if_present(j, "scenario", cfg.scenario);
  if (j.contains("query_groups")) {
    cfg.query_groups = j.at("query_groups").get<std::vector<std::vector<int>>>();
  }
  if (j.contains("reward")) {
    const json& r = j.at("reward");
    check_keys(r, {"per_cell", "idle_bonus", "noquery_bonus", "collision_penalty"}, "reward");
    get_if_present(r, "per_cell", cfg.reward.per_cell);
    get_if_present(r, "idle_bonus", cfg.reward.idle_bonus);
    get_if_present(r, "noquery_bonus", cfg.reward.noquery_bonus);
    get_if_present(r, "collision_penalty", cfg.reward.collision_penalty);
  }
  get_if_present(j, "p_occupied", cfg.p_occupied);
  get_if_present(j, "column_exclusion", cfg.column_exclusion);
  if (j.contains("learner")) {
    const json& l = j.at("learner");
    check_keys(l,
               {"alpha", "gamma_step", "num_episodes", "steps_per_episode",
                "p_occupied_training_set", "seed"},
               "learner");
    get_if_present(l, "alpha", cfg.learner.alpha);
    get_if_present(l, "gamma_step", cfg.learner.gamma_step);
    get_if_present(l, "num_episodes", cfg.learner.num_episodes);
    get_if_present(l, "steps_per_episode", cfg.learner.steps_per_episode);
    get_if_present(l, "p_occupied_training_set", cfg.learner.p_occupied_training_set);
    get_if_present(l, "seed", cfg.learner.seed);
  }
  if (j.contains("eval")) {
    const json& e = j.at("eval");
    check_keys(e, {"episodes", "steps", "densities", "seed"}, "eval");
    get_if_present(e, "episodes", cfg.eval.episodes);
    get_if_present(e, "steps", cfg.eval.steps);
    get_if_present(e, "densities", cfg.eval.densities);
    get_if_present(e, "seed", cfg.eval.seed);
  }
  return cfg;
}

}  // namespace

RunConfig parse_run_config_json(const std::string& text) {
  try {
    return parse_run_config_checked(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
}

std::string run_config_to_json(const RunConfig& cfg) {
  json j;
  j["geometry"] = {{"lanes", cfg.geometry.lanes},
                   {"local_cols", cfg.geometry.local_cols},
                   {"ext_cols", cfg.geometry.ext_cols}};
  j["v_max"] = cfg.v_max;
  j["scenario"] = cfg.scenario;
  if (cfg.query_groups) j["query_groups"] = *cfg.query_groups;
  j["reward"] = {{"per_cell", cfg.reward.per_cell},
                 {"idle_bonus", cfg.reward.idle_bonus},
                 {"noquery_bonus", cfg.reward.noquery_bonus},
                 {"collision_penalty", cfg.reward.collision_penalty}};
  j["p_occupied"] = cfg.p_occupied;
  j["column_exclusion"] = cfg.column_exclusion;
  j["learner"] = {{"alpha", cfg.learner.alpha},
                  {"gamma_step", cfg.learner.gamma_step},
                  {"num_episodes", cfg.learner.num_episodes},
                  {"steps_per_episode", cfg.learner.steps_per_episode},
                  {"p_occupied_training_set", cfg.learner.p_occupied_training_set},
                  {"seed", cfg.learner.seed}};
  j["eval"] = {{"episodes", cfg.eval.episodes},
               {"steps", cfg.eval.steps},
               {"densities", cfg.eval.densities},
               {"seed", cfg.eval.seed}};
  return j.dump(2) + "\n";
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_run_config_json(text);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error("config '" + path + "': " + e.what());
  }
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open config '" + path + "' for writing");
  out << run_config_to_json(cfg);
  if (!out) throw std::runtime_error("write error on '" + path + "'");
}

namespace {

uint64_t fnv1a(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void append_double(std::string& s, double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  s += buf;
  s.push_back(';');
}

}  // namespace

uint64_t geometry_hash(const EnvConfig& cfg) {
  std::string s;
  s += "lanes=" + std::to_string(cfg.geometry.lanes) + ";";
  s += "local_cols=" + std::to_string(cfg.geometry.local_cols) + ";";
  s += "ext_cols=" + std::to_string(cfg.geometry.ext_cols) + ";";
  s += "v_max=" + std::to_string(cfg.v_max) + ";";
  s += "scenario=";
  s += scenario_name(cfg.scenario.id);
  s.push_back(';');
  s += "auto_reveal=" + std::to_string(static_cast<int>(cfg.scenario.auto_reveal)) + ";";
  s += "extended_in_state=" + std::to_string(cfg.scenario.extended_in_state ? 1 : 0) + ";";
  s += "groups=";
  for (const auto& group : cfg.scenario.query_groups) {
    for (int idx : group) s += std::to_string(idx) + ",";
    s.push_back('|');
  }
  s.push_back(';');
  s += "reward=";
  append_double(s, cfg.reward.per_cell);
  append_double(s, cfg.reward.idle_bonus);
  append_double(s, cfg.reward.noquery_bonus);
  append_double(s, cfg.reward.collision_penalty);
  return fnv1a(s);
}

}  // namespace qdrive
