#include "qdrive/eval.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "qdrive/learner.hpp"
#include "qdrive/run_config.hpp"

namespace qdrive {

namespace {

struct EpisodeStats {
  int64_t distance = 0;
  std::vector<uint64_t> velocity;
  uint64_t motion[kNumMotionActions] = {0, 0, 0, 0};
  std::vector<uint64_t> query;  // groups..., NoQuery last
  uint64_t collisions = 0;
  uint64_t unseen = 0;
};

}  // namespace

EvalReport evaluate(const QTable& table, const EnvConfig& cfg, const EvalRequest& req,
                    std::vector<std::string>* dump) {
  cfg.validate();
  if (req.episodes == 0 || req.steps == 0) {
    throw std::invalid_argument("evaluate: episodes and steps must be positive");
  }
  if (table.meta().scenario != scenario_name(cfg.scenario.id)) {
    throw std::runtime_error("evaluate: table was trained for scenario '" +
                             table.meta().scenario + "', config wants '" +
                             std::string(scenario_name(cfg.scenario.id)) + "'");
  }
  if (table.meta().geometry_hash != geometry_hash(cfg)) {
    throw std::runtime_error(
        "evaluate: table geometry hash does not match the config (different geometry, "
        "query groups or rewards)");
  }

  ActionTable at(cfg);
  const int64_t episodes = static_cast<int64_t>(req.episodes);
  const int num_groups = cfg.scenario.num_groups();
  std::vector<EpisodeStats> stats(episodes);
  if (dump) dump->assign(episodes, std::string());

  auto run_episode = [&](int64_t e, Environment& env, std::string& key, std::string& next_key) {
    EpisodeStats st;
    st.velocity.assign(cfg.v_max + 1, 0);
    st.query.assign(num_groups + 1, 0);
    env.reset(req.density, derive_seed(req.seed, static_cast<uint64_t>(e)));
    std::string* out = dump ? &(*dump)[e] : nullptr;
    for (uint64_t t = 0; t < req.steps; ++t) {
      encode_state(cfg.geometry, cfg.scenario, env.belief(), key);
      const QTable::StateQ* row = table.find(key);
      if (!row) ++st.unseen;
      int id = greedy_action_id(row, at.ids_for_velocity(env.pose().velocity));
      JointAction a = action_from_id(cfg.scenario, id);
      Environment::StepResult res = env.step(a);
      st.distance += res.displacement;
      ++st.velocity[env.pose().velocity];
      ++st.motion[static_cast<int>(a.motion)];
      ++st.query[a.query.choice];
      if (res.collided) ++st.collisions;
      if (out) {
        encode_state(cfg.geometry, cfg.scenario, env.belief(), next_key);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%g", req.density);
        *out += "{\"episode\":" + std::to_string(e) + ",\"density\":" + buf +
                ",\"step\":" + std::to_string(t) + ",\"state\":\"" + key + "\",\"action\":\"" +
                action_key(cfg.scenario, a) + "\",\"cost\":";
        std::snprintf(buf, sizeof(buf), "%.17g", res.cost);
        *out += buf;
        *out += ",\"next_state\":\"" + next_key + "\",\"collided\":";
        *out += res.collided ? "true" : "false";
        *out += ",\"displacement\":" + std::to_string(res.displacement) + "}\n";
      }
    }
    stats[e] = std::move(st);
  };

  if (req.workers > 1) {
#pragma omp parallel num_threads(req.workers)
    {
      Environment env(cfg);
      std::string key, next_key;
#pragma omp for schedule(dynamic)
      for (int64_t e = 0; e < episodes; ++e) run_episode(e, env, key, next_key);
    }
  } else {
    Environment env(cfg);
    std::string key, next_key;
    for (int64_t e = 0; e < episodes; ++e) run_episode(e, env, key, next_key);
  }

  // Aggregation is serial and in episode order, so the report (and any dump)
  // is independent of the worker count.
  EvalReport rep;
  rep.scenario = std::string(scenario_name(cfg.scenario.id));
  rep.density = req.density;
  rep.episodes = req.episodes;
  rep.steps = req.steps;
  rep.velocity_frac.assign(cfg.v_max + 1, 0.0);
  rep.group_frac.assign(num_groups, 0.0);

  double mean = 0.0;
  for (int64_t e = 0; e < episodes; ++e) mean += static_cast<double>(stats[e].distance);
  mean /= static_cast<double>(episodes);
  double ssq = 0.0;
  for (int64_t e = 0; e < episodes; ++e) {
    double d = static_cast<double>(stats[e].distance) - mean;
    ssq += d * d;
  }
  rep.mean_distance = mean;
  rep.std_distance = episodes > 1 ? std::sqrt(ssq / static_cast<double>(episodes - 1)) : 0.0;

  const double total_steps = static_cast<double>(req.episodes) * static_cast<double>(req.steps);
  uint64_t unseen = 0;
  for (int64_t e = 0; e < episodes; ++e) {
    const EpisodeStats& st = stats[e];
    for (int v = 0; v <= cfg.v_max; ++v) rep.velocity_frac[v] += static_cast<double>(st.velocity[v]);
    for (int mo = 0; mo < kNumMotionActions; ++mo) {
      rep.motion_frac[mo] += static_cast<double>(st.motion[mo]);
    }
    for (int gq = 0; gq < num_groups; ++gq) rep.group_frac[gq] += static_cast<double>(st.query[gq]);
    rep.noquery_frac += static_cast<double>(st.query[num_groups]);
    rep.collision_count += st.collisions;
    unseen += st.unseen;
  }
  for (double& v : rep.velocity_frac) v /= total_steps;
  for (double& v : rep.motion_frac) v /= total_steps;
  for (double& v : rep.group_frac) v /= total_steps;
  rep.noquery_frac /= total_steps;
  rep.unseen_rate = static_cast<double>(unseen) / total_steps;
  return rep;
}

const char* const kEvalCsvHeader =
    "scenario,density,episodes,steps,mean_distance,std_distance,v0,v1,v2,acc,dec,nothing,"
    "lane,noquery,q_g1,q_g2,q_g3,q_g4,collisions,unseen_rate";

void write_eval_csv(const std::vector<EvalReport>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << kEvalCsvHeader << '\n';
  for (const EvalReport& r : rows) {
    if (r.velocity_frac.size() > 3) {
      throw std::runtime_error("write_eval_csv: v_max above 2 does not fit the report schema");
    }
    if (r.group_frac.size() > 4) {
      throw std::runtime_error("write_eval_csv: more than four query groups do not fit the schema");
    }
    auto frac = [&](const std::vector<double>& v, size_t i) {
      return i < v.size() ? v[i] : 0.0;
    };
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%g,%" PRIu64 ",%" PRIu64
                  ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%" PRIu64
                  ",%.6f",
                  r.scenario.c_str(), r.density, r.episodes, r.steps, r.mean_distance,
                  r.std_distance, frac(r.velocity_frac, 0), frac(r.velocity_frac, 1),
                  frac(r.velocity_frac, 2), r.motion_frac[0], r.motion_frac[1], r.motion_frac[2],
                  r.motion_frac[3], r.noquery_frac, frac(r.group_frac, 0), frac(r.group_frac, 1),
                  frac(r.group_frac, 2), frac(r.group_frac, 3), r.collision_count, r.unseen_rate);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write error on '" + path + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double csv_double(const std::string& s, size_t line_no) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("csv: bad numeric field '" + s + "' on line " +
                             std::to_string(line_no));
  }
  return v;
}

uint64_t csv_u64(const std::string& s, size_t line_no) {
  char* end = nullptr;
  uint64_t v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::runtime_error("csv: bad integer field '" + s + "' on line " +
                             std::to_string(line_no));
  }
  return v;
}

}  // namespace

void write_eval_csv_rows(const std::vector<EvalCsvRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << kEvalCsvHeader << '\n';
  for (const EvalCsvRow& r : rows) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%s,%g,%" PRIu64 ",%" PRIu64
                  ",%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%" PRIu64
                  ",%.6f",
                  r.scenario.c_str(), r.density, r.episodes, r.steps, r.mean_distance,
                  r.std_distance, r.v0, r.v1, r.v2, r.acc, r.dec, r.nothing, r.lane, r.noquery,
                  r.q_g1, r.q_g2, r.q_g3, r.q_g4, r.collisions, r.unseen_rate);
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("write error on '" + path + "'");
}

std::vector<EvalCsvRow> read_eval_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("csv '" + path + "' is empty");
  if (line != kEvalCsvHeader) {
    throw std::runtime_error("csv '" + path + "': header does not match the report schema");
  }
  std::vector<EvalCsvRow> rows;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 20) {
      throw std::runtime_error("csv '" + path + "': line " + std::to_string(line_no) +
                               " has " + std::to_string(f.size()) + " fields, expected 20");
    }
    EvalCsvRow r;
    r.scenario = f[0];
    r.density = csv_double(f[1], line_no);
    r.episodes = csv_u64(f[2], line_no);
    r.steps = csv_u64(f[3], line_no);
    r.mean_distance = csv_double(f[4], line_no);
    r.std_distance = csv_double(f[5], line_no);
    r.v0 = csv_double(f[6], line_no);
    r.v1 = csv_double(f[7], line_no);
    r.v2 = csv_double(f[8], line_no);
    r.acc = csv_double(f[9], line_no);
    r.dec = csv_double(f[10], line_no);
    r.nothing = csv_double(f[11], line_no);
    r.lane = csv_double(f[12], line_no);
    r.noquery = csv_double(f[13], line_no);
    r.q_g1 = csv_double(f[14], line_no);
    r.q_g2 = csv_double(f[15], line_no);
    r.q_g3 = csv_double(f[16], line_no);
    r.q_g4 = csv_double(f[17], line_no);
    r.collisions = csv_u64(f[18], line_no);
    r.unseen_rate = csv_double(f[19], line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace qdrive
