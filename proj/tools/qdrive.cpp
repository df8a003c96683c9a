#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qdrive/eval.hpp"
#include "qdrive/learner.hpp"
#include "qdrive/oracle.hpp"
#include "qdrive/run_config.hpp"
#include "qdrive/svg_chart.hpp"

namespace {

using namespace qdrive;

struct TrainOpts {
  std::string config;
  std::optional<std::string> scenario;
  std::optional<uint64_t> episodes;
  std::optional<uint64_t> steps;
  std::optional<double> alpha;
  std::optional<double> gamma_step;
  std::optional<uint64_t> seed;
  std::optional<std::vector<double>> density_set;
  std::string out;
};

struct EvalOpts {
  std::string qtable;
  std::string config;
  std::optional<std::vector<double>> densities;
  std::optional<uint64_t> episodes;
  std::optional<uint64_t> steps;
  std::optional<uint64_t> seed;
  int workers = 1;
  std::string out;
  std::string dump;
};

struct OracleOpts {
  std::string config;
  double tol = 1e-9;
  uint64_t cap = 200000;
  int threads = 1;
  std::string out;
  std::string compare;
  uint32_t min_visits = 100;
};

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string out;
  std::string svg_dir;
};

RunConfig load_or_default(const std::string& path) {
  return path.empty() ? RunConfig{} : load_run_config(path);
}

int run_train(const TrainOpts& o) {
  RunConfig cfg = load_or_default(o.config);
  if (o.scenario) cfg.scenario = *o.scenario;
  if (o.episodes) cfg.learner.num_episodes = *o.episodes;
  if (o.steps) cfg.learner.steps_per_episode = *o.steps;
  if (o.alpha) cfg.learner.alpha = *o.alpha;
  if (o.gamma_step) cfg.learner.gamma_step = *o.gamma_step;
  if (o.seed) cfg.learner.seed = *o.seed;
  if (o.density_set) cfg.learner.p_occupied_training_set = *o.density_set;
  EnvConfig env = cfg.make_env_config();

  QTable table = train(env, cfg.learner, &std::cout);
  save_qtable(table, o.out);
  save_visits(table, o.out + ".visits");
  std::cout << "trained " << table.meta().scenario << ": " << table.num_states() << " states, "
            << table.num_pairs() << " state-action pairs\n"
            << "wrote " << o.out << " and " << o.out << ".visits\n";
  return 0;
}

int run_eval(const EvalOpts& o) {
  RunConfig cfg = load_or_default(o.config);
  if (o.episodes) cfg.eval.episodes = *o.episodes;
  if (o.steps) cfg.eval.steps = *o.steps;
  if (o.seed) cfg.eval.seed = *o.seed;
  if (o.densities) cfg.eval.densities = *o.densities;
  // The scenario comes from the table; the geometry hash check below catches
  // a table/config mismatch.
  cfg.scenario = peek_qtable_meta(o.qtable).scenario;
  EnvConfig env = cfg.make_env_config();
  QTable table = load_qtable(o.qtable, env.scenario);

  std::ofstream dump_out;
  if (!o.dump.empty()) {
    dump_out.open(o.dump, std::ios::binary);
    if (!dump_out) throw std::runtime_error("cannot open '" + o.dump + "' for writing");
  }

  std::vector<EvalReport> rows;
  for (double density : cfg.eval.densities) {
    EvalRequest req;
    req.episodes = cfg.eval.episodes;
    req.steps = cfg.eval.steps;
    req.density = density;
    req.seed = cfg.eval.seed;
    req.workers = o.workers;
    std::vector<std::string> dump;
    EvalReport rep = evaluate(table, env, req, o.dump.empty() ? nullptr : &dump);
    for (const std::string& lines : dump) dump_out << lines;
    std::cout << "density " << density << ": mean distance " << rep.mean_distance << " (sd "
              << rep.std_distance << "), collisions " << rep.collision_count << ", unseen rate "
              << rep.unseen_rate << "\n";
    rows.push_back(std::move(rep));
  }
  write_eval_csv(rows, o.out);
  std::cout << "wrote " << o.out << "\n";
  if (!o.dump.empty()) {
    if (!dump_out) throw std::runtime_error("write error on '" + o.dump + "'");
    std::cout << "wrote " << o.dump << "\n";
  }
  return 0;
}

int run_oracle(const OracleOpts& o) {
  RunConfig cfg = load_or_default(o.config);
  EnvConfig env = cfg.make_env_config();
  EnumeratedMdp mdp = build_mdp(env, o.cap);
  ValueIterationResult vi = value_iteration(mdp, cfg.learner.alpha, o.tol, 100000, o.threads);
  std::cout << "enumerated " << mdp.num_states() << " states, " << mdp.num_pairs()
            << " state-action pairs, " << mdp.num_transitions() << " transitions\n"
            << "value iteration: " << vi.sweeps << " sweeps, residual " << vi.residual << "\n";

  if (!o.out.empty()) {
    save_qtable(qtable_from_values(mdp, vi.q, cfg.learner.alpha), o.out);
    std::cout << "wrote " << o.out << "\n";
  }

  if (!o.compare.empty()) {
    QTable learned = load_qtable(o.compare, env.scenario);
    if (learned.meta().scenario != scenario_name(env.scenario.id)) {
      throw std::runtime_error("compare: table scenario '" + learned.meta().scenario +
                               "' does not match the config");
    }
    if (learned.meta().geometry_hash != geometry_hash(env)) {
      throw std::runtime_error("compare: table geometry hash does not match the config");
    }
    std::string visits_path = o.compare + ".visits";
    if (std::ifstream(visits_path).good()) {
      load_visits(visits_path, env.scenario, learned);
    } else if (o.min_visits > 0) {
      throw std::runtime_error("compare: '" + visits_path +
                               "' not found (needed for the visit floor; pass --min-visits 0 to "
                               "compare all stored pairs)");
    }
    CompareReport rep = compare_qtables(mdp, vi.q, learned, o.min_visits);
    std::cout << "compare vs oracle (visit floor " << o.min_visits << "):\n"
              << "  eligible pairs " << rep.eligible_pairs << ", below floor " << rep.skipped_rare
              << ", outside enumeration " << rep.unknown_pairs << "\n"
              << "  L_inf " << rep.l_inf << "\n";
    if (rep.worst_action >= 0) {
      std::cout << "  worst pair: state " << rep.worst_state << " action "
                << action_key(env.scenario, action_from_id(env.scenario, rep.worst_action))
                << " learned " << rep.worst_learned << " oracle " << rep.worst_oracle << "\n";
    }
  }
  return 0;
}

const char* kScenarioOrder[] = {"LV", "RC", "C1", "C2", "FV"};

int scenario_rank(const std::string& name) {
  for (int i = 0; i < 5; ++i) {
    if (name == kScenarioOrder[i]) return i;
  }
  return 5;
}

int run_report(const ReportOpts& o) {
  std::vector<EvalCsvRow> rows;
  for (const std::string& path : o.inputs) {
    std::vector<EvalCsvRow> part = read_eval_csv(path);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::stable_sort(rows.begin(), rows.end(), [](const EvalCsvRow& a, const EvalCsvRow& b) {
    int ra = scenario_rank(a.scenario), rb = scenario_rank(b.scenario);
    if (ra != rb) return ra < rb;
    if (a.scenario != b.scenario) return a.scenario < b.scenario;
    return a.density < b.density;
  });
  write_eval_csv_rows(rows, o.out);
  std::cout << "wrote " << o.out << " (" << rows.size() << " rows)\n";

  std::set<std::string> present;
  for (const EvalCsvRow& r : rows) present.insert(r.scenario);
  std::vector<std::string> missing;
  for (const char* s : kScenarioOrder) {
    if (!present.count(s)) missing.push_back(s);
  }
  if (!missing.empty()) {
    std::cerr << "note: partial report, missing scenarios:";
    for (const std::string& s : missing) std::cerr << " " << s;
    std::cerr << "\n";
  }

  if (o.svg_dir.empty()) return 0;

  std::vector<double> densities;
  std::vector<std::string> scenarios;
  for (const EvalCsvRow& r : rows) {
    if (std::find(densities.begin(), densities.end(), r.density) == densities.end()) {
      densities.push_back(r.density);
    }
    if (std::find(scenarios.begin(), scenarios.end(), r.scenario) == scenarios.end()) {
      scenarios.push_back(r.scenario);
    }
  }
  std::sort(densities.begin(), densities.end());

  auto find_row = [&](const std::string& scenario, double density) -> const EvalCsvRow* {
    const EvalCsvRow* hit = nullptr;
    for (const EvalCsvRow& r : rows) {
      if (r.scenario == scenario && r.density == density) hit = &r;
    }
    return hit;
  };
  auto values_for = [&](auto&& metric, size_t segments) {
    std::vector<std::vector<std::vector<double>>> values;
    for (double d : densities) {
      std::vector<std::vector<double>> per_group;
      for (const std::string& s : scenarios) {
        std::vector<double> segs(segments, 0.0);
        if (const EvalCsvRow* r = find_row(s, d)) metric(*r, segs);
        per_group.push_back(std::move(segs));
      }
      values.push_back(std::move(per_group));
    }
    return values;
  };
  auto density_labels = [&] {
    std::vector<std::string> labels;
    for (double d : densities) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", d);
      labels.push_back(buf);
    }
    return labels;
  }();

  auto write_chart = [&](const std::string& name, BarChartSpec spec) {
    spec.x_label = "traffic density";
    spec.group_labels = density_labels;
    spec.series_labels = scenarios;
    std::string path = o.svg_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << render_bar_chart(spec);
    if (!out) throw std::runtime_error("write error on '" + path + "'");
    std::cout << "wrote " << path << "\n";
  };

  BarChartSpec dist;
  dist.title = "Mean distance per episode";
  dist.y_label = "cells";
  dist.segment_labels = {"distance"};
  dist.values = values_for(
      [](const EvalCsvRow& r, std::vector<double>& s) { s[0] = r.mean_distance; }, 1);
  write_chart("fig_distance.svg", std::move(dist));

  BarChartSpec vel;
  vel.title = "Velocity distribution";
  vel.y_label = "fraction of steps";
  vel.segment_labels = {"v=0", "v=1", "v=2"};
  vel.y_max = 1.0;
  vel.values = values_for(
      [](const EvalCsvRow& r, std::vector<double>& s) {
        s[0] = r.v0;
        s[1] = r.v1;
        s[2] = r.v2;
      },
      3);
  write_chart("fig_velocity.svg", std::move(vel));

  BarChartSpec mot;
  mot.title = "Motion action distribution";
  mot.y_label = "fraction of steps";
  mot.segment_labels = {"accelerate", "decelerate", "do nothing", "change lane"};
  mot.y_max = 1.0;
  mot.values = values_for(
      [](const EvalCsvRow& r, std::vector<double>& s) {
        s[0] = r.acc;
        s[1] = r.dec;
        s[2] = r.nothing;
        s[3] = r.lane;
      },
      4);
  write_chart("fig_motion.svg", std::move(mot));

  BarChartSpec qry;
  qry.title = "Query action distribution";
  qry.y_label = "fraction of steps";
  qry.segment_labels = {"no query", "group 1", "group 2", "group 3", "group 4"};
  qry.y_max = 1.0;
  qry.values = values_for(
      [](const EvalCsvRow& r, std::vector<double>& s) {
        s[0] = r.noquery;
        s[1] = r.q_g1;
        s[2] = r.q_g2;
        s[3] = r.q_g3;
        s[4] = r.q_g4;
      },
      5);
  write_chart("fig_queries.svg", std::move(qry));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"occupancy-grid driving simulator with tabular value learning"};
  app.require_subcommand(1);

  TrainOpts t;
  CLI::App* train_cmd = app.add_subcommand("train", "train a value table for a scenario");
  train_cmd->add_option("--config", t.config, "run configuration JSON");
  train_cmd->add_option("--scenario", t.scenario, "scenario: LV, RC, C1, C2, FV");
  train_cmd->add_option("--episodes", t.episodes, "training episodes");
  train_cmd->add_option("--steps", t.steps, "steps per episode");
  train_cmd->add_option("--alpha", t.alpha, "discount factor")->check(CLI::Range(0.0, 0.999999));
  train_cmd->add_option("--gamma", t.gamma_step, "constant step size")
      ->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--seed", t.seed, "base rng seed");
  train_cmd
      ->add_option("--density-set", t.density_set,
                   "densities sampled per training episode (space separated)")
      ->expected(-1);
  train_cmd->add_option("--out", t.out, "output table path")->required();

  EvalOpts e;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a trained table");
  eval_cmd->add_option("--qtable", e.qtable, "trained table path")->required();
  eval_cmd->add_option("--config", e.config, "run configuration JSON");
  eval_cmd->add_option("--density", e.densities, "evaluation densities")->expected(-1);
  eval_cmd->add_option("--episodes", e.episodes, "evaluation episodes per density");
  eval_cmd->add_option("--steps", e.steps, "steps per episode");
  eval_cmd->add_option("--seed", e.seed, "evaluation seed");
  eval_cmd->add_option("--workers", e.workers, "parallel episode workers")
      ->check(CLI::Range(1, 1024));
  eval_cmd->add_option("--out", e.out, "output CSV path")->required();
  eval_cmd->add_option("--dump", e.dump, "optional per-step trajectory dump (JSON lines)");

  OracleOpts r;
  CLI::App* oracle_cmd =
      app.add_subcommand("oracle", "exact planning on a reduced configuration");
  oracle_cmd->add_option("--config", r.config, "run configuration JSON");
  oracle_cmd->add_option("--tol", r.tol, "value-iteration residual tolerance")
      ->check(CLI::PositiveNumber);
  oracle_cmd->add_option("--cap", r.cap, "reachable-state cap");
  oracle_cmd->add_option("--threads", r.threads, "value-iteration threads")
      ->check(CLI::Range(1, 1024));
  oracle_cmd->add_option("--out", r.out, "write optimal values as a table");
  oracle_cmd->add_option("--compare", r.compare, "learned table to compare against the oracle");
  oracle_cmd->add_option("--min-visits", r.min_visits,
                         "visit floor for pairs included in the comparison");

  ReportOpts p;
  CLI::App* report_cmd = app.add_subcommand("report", "merge evaluation CSVs and render charts");
  report_cmd->add_option("--in", p.inputs, "input CSV files")->required()->expected(-1);
  report_cmd->add_option("--out", p.out, "merged CSV path")->required();
  report_cmd->add_option("--svg-dir", p.svg_dir, "directory for SVG charts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    int code = app.exit(ex);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return run_train(t);
    if (*eval_cmd) return run_eval(e);
    if (*oracle_cmd) return run_oracle(r);
    if (*report_cmd) return run_report(p);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
