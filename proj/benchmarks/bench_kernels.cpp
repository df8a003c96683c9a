// Benchmarks the two parallel kernels against their serial reference
// implementations: Jacobi value-iteration sweeps (threads) and evaluation
// rollouts (episode workers).  Both are required to produce bit-identical
// results at any worker count, so each timing row also reports an equality
// check.  Also measures raw trainer throughput, which dominates study time.
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "qdrive/eval.hpp"
#include "qdrive/learner.hpp"
#include "qdrive/oracle.hpp"
#include "qdrive/run_config.hpp"

using namespace qdrive;

namespace {

template <typename Fn>
double seconds(Fn&& fn) {
  auto t0 = std::chrono::steady_clock::now();
  fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count();
}

bool reports_equal(const EvalReport& a, const EvalReport& b) {
  bool eq = a.scenario == b.scenario && a.density == b.density && a.episodes == b.episodes &&
            a.steps == b.steps && a.mean_distance == b.mean_distance &&
            a.std_distance == b.std_distance && a.velocity_frac == b.velocity_frac &&
            a.noquery_frac == b.noquery_frac && a.group_frac == b.group_frac &&
            a.collision_count == b.collision_count && a.unseen_rate == b.unseen_rate;
  for (int m = 0; m < kNumMotionActions; ++m) eq = eq && a.motion_frac[m] == b.motion_frac[m];
  return eq;
}

}  // namespace

int main() {
  std::printf("note: timings on a host with few cores may show little or no speedup; the\n");
  std::printf("point of the parallel rows is the bit-identical check against the serial\n");
  std::printf("reference.\n\n");

  // --- value-iteration kernel on a mid-size exact model ---
  RunConfig vi_cfg;
  vi_cfg.scenario = "C1";
  vi_cfg.v_max = 1;  // keeps the reachable belief space enumerable
  EnvConfig cfg = vi_cfg.make_env_config();
  EnumeratedMdp mdp = build_mdp(cfg, 200000);
  std::printf("value iteration: %zu states, %zu pairs, %zu transitions (C1, v_max 1)\n",
              mdp.num_states(), mdp.num_pairs(), mdp.num_transitions());

  ValueIterationResult serial;
  double t_serial = seconds([&] { serial = value_iteration(mdp, 0.91, 1e-10, 100000, 1); });
  std::printf("  threads 1 (serial reference): %.3fs, %d sweeps, residual %.2e\n", t_serial,
              serial.sweeps, serial.residual);
  for (int threads : {2, 4}) {
    ValueIterationResult parallel;
    double t = seconds([&] { parallel = value_iteration(mdp, 0.91, 1e-10, 100000, threads); });
    std::printf("  threads %d (OpenMP): %.3fs, speedup %.2fx, bit-identical to serial: %s\n",
                threads, t, t > 0 ? t_serial / t : 0.0, parallel.q == serial.q ? "yes" : "NO");
  }

  // --- evaluation kernel (episode-parallel rollouts) ---
  LearnerParams quick;
  quick.num_episodes = 5000;
  quick.steps_per_episode = 100;
  quick.seed = 7;
  QTable table = train(cfg, quick, nullptr);

  EvalRequest req;
  req.episodes = 4000;
  req.steps = 100;
  req.density = 0.5;
  req.seed = 1;
  std::printf("evaluate: %llu episodes x %llu steps at density %g\n",
              (unsigned long long)req.episodes, (unsigned long long)req.steps, req.density);

  req.workers = 1;
  EvalReport ref;
  double t_ref = seconds([&] { ref = evaluate(table, cfg, req); });
  std::printf("  workers 1 (serial reference): %.3fs, mean distance %.2f\n", t_ref,
              ref.mean_distance);
  for (int workers : {2, 4}) {
    req.workers = workers;
    EvalReport rep;
    double t = seconds([&] { rep = evaluate(table, cfg, req); });
    std::printf("  workers %d (OpenMP): %.3fs, speedup %.2fx, identical report: %s\n", workers,
                t, t > 0 ? t_ref / t : 0.0, reports_equal(rep, ref) ? "yes" : "NO");
  }

  // --- trainer throughput (serial by design: one global table) ---
  RunConfig study;  // standard two-lane C2 configuration
  study.learner.num_episodes = 2000;
  study.learner.steps_per_episode = 200;
  EnvConfig study_cfg = study.make_env_config();
  const double updates =
      static_cast<double>(study.learner.num_episodes * study.learner.steps_per_episode);
  double t_train = seconds([&] { train(study_cfg, study.learner, nullptr); });
  std::printf("train: %.0f updates on C2 in %.3fs (%.2fM updates/s)\n", updates, t_train,
              updates / t_train / 1e6);
  return 0;
}
