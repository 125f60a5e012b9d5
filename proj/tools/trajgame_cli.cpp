// Command-line front end for the potential-game trajectory solver:
//   solve        open-loop Bayesian game from a scenario config
//   simulate     closed-loop Monte-Carlo study over the game settings
//   contingency  multi-hypothesis contingency planning
//   bench        wall-time scaling of the solver variants vs type count
//   verify       numerical identity / cross-check suites
//
// Exit codes: 0 success, 1 verification failure, 2 malformed config,
// 3 solver stall.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "trajgame/admm.hpp"
#include "trajgame/contingency.hpp"
#include "trajgame/io.hpp"
#include "trajgame/oracle.hpp"
#include "trajgame/scenario.hpp"
#include "trajgame/simulation.hpp"
#include "trajgame/verify.hpp"

namespace {

using namespace trajgame;
namespace fs = std::filesystem;

int default_workers() {
  if (const char* env = std::getenv("TRAJGAME_WORKERS")) {
    const int w = std::atoi(env);
    if (w >= 1) return w;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  int workers = default_workers();
  std::uint64_t seed = 0;
  double sigma = 1.0;
  double rho = 1.0;
  bool json_diagnostics = false;
  int verbosity = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config = true) {
  auto* config =
      cmd->add_option("--config", opts.config_path, "Scenario config file");
  if (needs_config) config->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", opts.out_dir, "Output directory");
  cmd->add_option("--workers", opts.workers, "Worker count (>= 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", opts.seed, "Random seed");
  cmd->add_option("--sigma", opts.sigma, "ADMM sigma (> 0)");
  cmd->add_option("--rho", opts.rho, "ADMM rho (> 0)");
  cmd->add_flag("--json-diagnostics", opts.json_diagnostics,
                "Emit per-iteration diagnostics as JSON lines");
  cmd->add_flag("-v,--verbose", opts.verbosity, "Verbose progress output");
}

SolverParams make_params(const CommonOptions& opts,
                         const ScenarioConfig* cfg = nullptr) {
  SolverParams params;
  params.sigma = opts.sigma;
  params.rho = opts.rho;
  params.workers = opts.workers;
  if (cfg) {
    params.delta_limit = cfg->delta_limit;
    params.accel_limit = cfg->accel_limit;
  }
  return params;
}

int run_solve(const CommonOptions& opts) {
  const ScenarioConfig cfg = load_scenario(opts.config_path);
  const SolverParams params = make_params(opts, &cfg);
  const OpenLoopResult result = open_loop_run(cfg, params);

  fs::create_directories(opts.out_dir);
  write_trajectories(opts.out_dir + "/trajectories.csv", result.game,
                     result.solve.strategy);
  write_summary_json(opts.out_dir + "/summary.json",
                     result.solve.diagnostics);
  if (opts.json_diagnostics) {
    write_diagnostics_jsonl(opts.out_dir + "/diagnostics.jsonl",
                            result.solve.diagnostics);
  }
  std::cout << "final potential " << result.solve.diagnostics.final_potential
            << " after " << result.solve.diagnostics.iterations.size()
            << " outer iterations ("
            << (result.solve.diagnostics.converged ? "converged" : "not converged")
            << ")" << std::endl;
  return result.solve.diagnostics.stalled ? 3 : 0;
}

int run_simulate(const CommonOptions& opts, const std::string& setting_name,
                 int conditions, int type_draws) {
  const ScenarioConfig cfg = load_scenario(opts.config_path);
  SolverParams params = make_params(opts, &cfg);
  params.workers = 1;  // parallelism across Monte-Carlo runs instead

  std::vector<GameSetting> settings;
  if (setting_name == "all") {
    settings = {GameSetting::kMle, GameSetting::kBne, GameSetting::kMleUpdate,
                GameSetting::kBneUpdate};
  } else {
    settings = {parse_setting(setting_name)};
  }

  const MonteCarloResult result = monte_carlo(
      cfg, settings, conditions, type_draws, opts.seed, params, opts.workers);

  fs::create_directories(opts.out_dir);
  write_metrics_csv(opts.out_dir + "/metrics.csv", result);
  std::cout << "setting        dV      dX      |delta|  |a|     min_d   fail\n";
  for (const auto& s : result.settings) {
    std::printf("%-12s %7.3f %7.3f %8.4f %7.3f %7.3f %4d\n",
                to_string(s.setting), s.mean.mean_speed_dev,
                s.mean.mean_position_dev, s.mean.mean_abs_steering,
                s.mean.mean_abs_accel, s.mean.min_distance, s.failures);
  }
  return 0;
}

int run_contingency(const CommonOptions& opts, double p_up_override,
                    bool snap) {
  ScenarioConfig cfg = load_scenario(opts.config_path);
  if (!cfg.contingency)
    throw ConfigError("$.contingency: required by the contingency command");
  if (p_up_override >= 0.0) cfg.contingency->p_up = p_up_override;

  auto [hypotheses, base] = build_contingency_inputs(cfg);
  ContingencyConfig ccfg;
  ccfg.ego = cfg.contingency->ego;
  ccfg.branching_step = cfg.contingency->branching_step;
  ccfg.q_contingency = cfg.contingency->q_contingency;
  auto [game, graph] = build_contingency_game(hypotheses, ccfg, base);

  const SolverParams params = make_params(opts, &cfg);
  AdmmSolver solver(game, graph, params);
  SolveResult result = solver.solve(default_initial_strategy(game));
  if (snap) snap_pre_branch(game, hypotheses, ccfg, result.strategy);

  fs::create_directories(opts.out_dir);
  write_trajectories(opts.out_dir + "/trajectories.csv", game,
                     result.strategy);
  // One plan file per hypothesis: the ego and rival trajectories under it.
  for (int h = 0; h < hypotheses.num_hypotheses(); ++h) {
    GameSpec sub;
    sub.horizon = game.horizon;
    sub.dt = game.dt;
    sub.wheelbase = game.wheelbase;
    sub.collision = game.collision;
    sub.footprint = game.footprint;
    JointStrategy plans;
    std::vector<std::vector<double>> trivial;
    for (AgentId i = 0; i < hypotheses.num_agents(); ++i) {
      const int v = game.vertex_index(i, h);
      TypePlayer tp = game.players[v];
      tp.type_index = 0;
      sub.players.push_back(tp);
      sub.q_state.push_back(game.q_state[v]);
      sub.r_control.push_back(game.r_control[v]);
      plans.push_back(result.strategy[v]);
      trivial.push_back({1.0});
    }
    sub.prior = BeliefPrior::independent(trivial);
    write_trajectories(
        opts.out_dir + "/plan_h" + std::to_string(h) + ".csv", sub, plans);
  }
  write_summary_json(opts.out_dir + "/summary.json", result.diagnostics);
  if (opts.json_diagnostics) {
    write_diagnostics_jsonl(opts.out_dir + "/diagnostics.jsonl",
                            result.diagnostics);
  }
  std::cout << "final potential " << result.diagnostics.final_potential
            << ", " << hypotheses.num_hypotheses() << " hypotheses, "
            << graph.edges.size() << " edges" << std::endl;
  return result.diagnostics.stalled ? 3 : 0;
}

int run_bench(const CommonOptions& opts, std::vector<int> samples, int reps,
              int horizon_override) {
  ScenarioConfig cfg = load_scenario(opts.config_path);
  if (horizon_override > 0) cfg.horizon = horizon_override;
  if (samples.empty()) samples = {1, 2, 3, 4, 5, 6};

  struct Row {
    std::string solver;
    std::vector<double> median_s;
    std::vector<double> potential;
  };
  std::vector<Row> rows = {{"centralized", {}, {}},
                           {"distributed-1", {}, {}},
                           {"distributed-" + std::to_string(opts.workers), {}, {}}};
  std::vector<int> type_counts;

  for (int k : samples) {
    ScenarioConfig variant = cfg;
    for (auto& agent : variant.agents) {
      if (agent.intent.mixture) agent.intent.samples_per_mode = k;
    }
    variant.finalize();
    const GameSpec game = build_game(variant);
    const InteractionGraph graph = build_bayesian_graph(game);
    const JointStrategy init = default_initial_strategy(game);
    type_counts.push_back(game.num_vertices());

    const auto time_solver = [&](auto&& solve_fn) {
      std::vector<double> times;
      double pot = 0.0;
      for (int rep = 0; rep < reps; ++rep) {
        const auto t0 = std::chrono::steady_clock::now();
        const SolveResult res = solve_fn();
        times.push_back(std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count());
        pot = res.diagnostics.final_potential;
      }
      std::sort(times.begin(), times.end());
      return std::make_pair(times[times.size() / 2], pot);
    };

    SolverParams params = make_params(opts);
    params.workers = 1;
    const auto central = time_solver(
        [&] { return centralized_solve(game, graph, init, params); });
    const auto dist1 =
        time_solver([&] { return solve(game, graph, init, params); });
    SolverParams params_w = params;
    params_w.workers = opts.workers;
    const auto dist_w =
        time_solver([&] { return solve(game, graph, init, params_w); });

    rows[0].median_s.push_back(central.first);
    rows[0].potential.push_back(central.second);
    rows[1].median_s.push_back(dist1.first);
    rows[1].potential.push_back(dist1.second);
    rows[2].median_s.push_back(dist_w.first);
    rows[2].potential.push_back(dist_w.second);
    if (opts.verbosity > 0) {
      std::cout << "bench: " << game.num_vertices() << " type-players done"
                << std::endl;
    }
  }

  fs::create_directories(opts.out_dir);
  std::ofstream csv(opts.out_dir + "/bench.csv");
  csv << "solver,type_count,median_s,final_potential\n";
  std::printf("%-16s", "types");
  for (int c : type_counts) std::printf("%12d", c);
  std::printf("\n");
  for (const Row& row : rows) {
    std::printf("%-16s", row.solver.c_str());
    for (std::size_t i = 0; i < row.median_s.size(); ++i) {
      std::printf("%12.4f", row.median_s[i]);
      csv << row.solver << ',' << type_counts[i] << ','
          << format_double(row.median_s[i]) << ','
          << format_double(row.potential[i]) << '\n';
    }
    std::printf("\n");
  }
  return 0;
}

int run_verify(bool quick, std::uint64_t seed) {
  const auto results = run_verification_suites(quick, seed == 0 ? 7 : seed);
  bool all_pass = true;
  for (const SuiteResult& r : results) {
    std::printf("[%s] %-24s %6.2fs  %s\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.seconds, r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Potential-game trajectory planner under intent uncertainty"};
  app.require_subcommand(1);

  CommonOptions opts;

  auto* solve_cmd = app.add_subcommand("solve", "Open-loop Bayesian game");
  add_common(solve_cmd, opts);

  auto* sim_cmd = app.add_subcommand("simulate", "Closed-loop Monte Carlo");
  add_common(sim_cmd, opts);
  std::string setting = "all";
  int conditions = 50;
  int type_draws = 2;
  sim_cmd->add_option("--setting", setting,
                      "all | mle | bne | mle-update | bne-update");
  sim_cmd->add_option("--conditions", conditions, "Random initial conditions");
  sim_cmd->add_option("--type-draws", type_draws, "True-type draws per condition");

  auto* cont_cmd = app.add_subcommand("contingency", "Contingency planning");
  add_common(cont_cmd, opts);
  double p_up = -1.0;
  bool snap = false;
  cont_cmd->add_option("--p-up", p_up, "Override the upper-lane probability");
  cont_cmd->add_flag("--snap", snap, "Snap pre-branch controls to their mean");

  auto* bench_cmd = app.add_subcommand("bench", "Scaling benchmark");
  add_common(bench_cmd, opts);
  std::vector<int> samples;
  int reps = 5;
  int horizon_override = 0;
  bench_cmd->add_option("--samples", samples,
                        "samples-per-mode list (default 1..6)");
  bench_cmd->add_option("--reps", reps, "Repetitions per measurement");
  bench_cmd->add_option("--horizon", horizon_override, "Horizon override");

  auto* verify_cmd = app.add_subcommand("verify", "Run verification suites");
  bool quick = false;
  std::uint64_t verify_seed = 0;
  verify_cmd->add_flag("--quick", quick, "Reduced instance counts");
  verify_cmd->add_option("--seed", verify_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(solve_cmd)) return run_solve(opts);
    if (app.got_subcommand(sim_cmd))
      return run_simulate(opts, setting, conditions, type_draws);
    if (app.got_subcommand(cont_cmd)) return run_contingency(opts, p_up, snap);
    if (app.got_subcommand(bench_cmd))
      return run_bench(opts, samples, reps, horizon_override);
    if (app.got_subcommand(verify_cmd)) return run_verify(quick, verify_seed);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
