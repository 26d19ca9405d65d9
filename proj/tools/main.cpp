// Command-line front end: train, eval, sweep, oracle, calibrate, transfer.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "eeco/harness.hpp"

namespace fs = std::filesystem;
using namespace eeco;

namespace {

struct CommonOpts {
  std::string scenario = "exp_a";
  int users = 5;
  std::string threshold = "max";
  uint64_t seed = 1;
  std::string out_dir;
  bool strict = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario name (exp_a..exp_d) or config file path");
  cmd->add_option("--users,-n", o.users, "Number of active end-devices")->check(CLI::Range(1, 5));
  cmd->add_option("--threshold", o.threshold, "Accuracy threshold: min, 80, 85, 89, max");
  cmd->add_option("--seed", o.seed, "Master RNG seed");
  cmd->add_option("--out,-o", o.out_dir, "Output directory for reports");
  cmd->add_flag("--strict", o.strict,
                "Exit nonzero on non-convergence or a violated accuracy constraint");
}

fs::path ensure_out(const std::string& dir) {
  fs::path p = dir.empty() ? fs::path(".") : fs::path(dir);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream f(p);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << body;
}

std::vector<ThresholdKind> parse_thresholds(const std::string& csv) {
  std::vector<ThresholdKind> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(threshold_from_string(tok));
  if (out.empty()) throw CLI::ValidationError("--thresholds", "empty threshold list");
  return out;
}

int cmd_train(const CommonOpts& o, const std::string& agent_name, uint64_t budget,
              const std::string& save_path, const std::string& init_from, bool trace) {
  ScenarioConfig sc = resolve_scenario(o.scenario, o.users, threshold_from_string(o.threshold), o.seed);
  Environment env(sc);
  const AgentKind kind = agent_kind_from_string(agent_name);
  auto agent = make_agent(kind, sc);
  if (!init_from.empty()) {
    if (kind == AgentKind::QLearning || kind == AgentKind::Sota)
      static_cast<QLearningAgent&>(*agent).load(init_from);
    else if (kind == AgentKind::Dqn)
      static_cast<DqnAgent&>(*agent).load_network(init_from);
    else
      throw CLI::ValidationError("--init-from", "only learning agents take a warm start");
  }
  TrainingConfig cfg;
  cfg.step_budget = budget;
  const fs::path out = ensure_out(o.out_dir);
  std::ofstream trace_file;
  if (trace) {
    trace_file.open(out / "trace.csv");
    if (!trace_file) throw std::runtime_error("cannot write trace.csv");
  }
  TrainingReport rep = run_training(*agent, env, cfg, trace ? &trace_file : nullptr);
  {
    std::ofstream curve(out / "training_curve.csv");
    write_training_curve_csv(curve, rep);
  }
  EvalReport eval = run_evaluation(*agent, env);
  json j = to_json(rep);
  j["agent"] = agent_name;
  j["scenario"] = sc.name;
  j["users"] = sc.num_end_devices;
  j["threshold"] = to_string(sc.accuracy_threshold);
  j["seed"] = o.seed;
  j["evaluation"] = to_json(eval);
  write_text(out / "training_report.json", j.dump(2) + "\n");
  if (!save_path.empty()) agent->save(save_path);
  std::cout << (rep.converged ? "converged" : "did not converge") << " after "
            << (rep.converged ? rep.steps_to_convergence : rep.steps_run) << " steps; decision "
            << eval.decisions << " avg " << fmt_ms(eval.avg_response_ms) << " ms, accuracy "
            << fmt_ms(eval.avg_accuracy_pct) << "%\n";
  if (o.strict && (!rep.converged || !eval.constraint_satisfied)) return 2;
  return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& agent_name, const std::string& model_path) {
  ScenarioConfig sc = resolve_scenario(o.scenario, o.users, threshold_from_string(o.threshold), o.seed);
  Environment env(sc);
  const AgentKind kind = agent_kind_from_string(agent_name);
  auto agent = make_agent(kind, sc);
  if (!model_path.empty()) {
    if (kind == AgentKind::QLearning || kind == AgentKind::Sota)
      static_cast<QLearningAgent&>(*agent).load(model_path);
    else if (kind == AgentKind::Dqn)
      static_cast<DqnAgent&>(*agent).load_network(model_path);
  } else if (is_learning(kind)) {
    throw CLI::ValidationError("--model", "evaluating a learning agent needs a trained model file");
  }
  EvalReport rep = run_evaluation(*agent, env);
  const fs::path out = ensure_out(o.out_dir);
  json j = to_json(rep);
  j["agent"] = agent_name;
  j["scenario"] = sc.name;
  j["users"] = sc.num_end_devices;
  j["threshold"] = to_string(sc.accuracy_threshold);
  write_text(out / "eval_report.json", j.dump(2) + "\n");
  std::cout << "decision " << rep.decisions << " avg " << fmt_ms(rep.avg_response_ms)
            << " ms, accuracy " << fmt_ms(rep.avg_accuracy_pct) << "%, speedup vs offload-only "
            << fmt_ms(rep.speedup_vs_sota) << "x\n";
  if (o.strict && !rep.constraint_satisfied) return 2;
  return 0;
}

int cmd_sweep(const CommonOpts& o, const std::string& scenarios_csv, const std::string& thresholds_csv,
              const std::string& users_csv, const std::string& agents_csv, uint64_t budget,
              int threads) {
  std::vector<std::string> scenarios;
  {
    std::stringstream ss(scenarios_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) scenarios.push_back(tok);
  }
  std::vector<int> users;
  {
    std::stringstream ss(users_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) users.push_back(std::stoi(tok));
  }
  std::vector<AgentKind> agents;
  {
    std::stringstream ss(agents_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) agents.push_back(agent_kind_from_string(tok));
  }
  SweepSpec spec = SweepSpec::cross(scenarios, parse_thresholds(thresholds_csv), users, agents, o.seed);
  spec.training.step_budget = budget;
  SweepReport rep = sweep(spec, threads);
  const fs::path out = ensure_out(o.out_dir);
  {
    std::ofstream csv(out / "sweep.csv");
    write_sweep_csv(csv, rep);
  }
  bool all_ok = true;
  for (const auto& c : rep.cells)
    all_ok = all_ok && c.training.converged && c.eval.constraint_satisfied;
  std::cout << "swept " << rep.cells.size() << " cells -> " << (out / "sweep.csv").string() << "\n";
  if (o.strict && !all_ok) return 2;
  return 0;
}

int cmd_oracle(const CommonOpts& o, uint64_t budget) {
  ScenarioConfig sc = resolve_scenario(o.scenario, o.users, threshold_from_string(o.threshold), o.seed);
  Environment env(sc);
  ActionSpace space = ActionSpace::full(sc);
  OracleResult best = optimal_action(env, env.state(), sc.threshold_value(), space, budget);
  std::cout << "optimal decision " << best.action.to_string() << " avg "
            << fmt_ms(best.avg_response_ms) << " ms, accuracy " << fmt_ms(best.avg_accuracy_pct)
            << "%" << (best.feasible ? "" : " (constraint unsatisfiable, unconstrained minimum)")
            << "\n";
  if (!o.out_dir.empty()) {
    const fs::path out = ensure_out(o.out_dir);
    const auto states = reachable_states(env, space, budget);
    std::ofstream f(out / "oracle_table.csv");
    write_oracle_table(f, env, sc.threshold_value(), space, states);
    std::cout << "wrote " << states.size() << " states -> " << (out / "oracle_table.csv").string()
              << "\n";
  }
  return best.feasible || !o.strict ? 0 : 2;
}

int cmd_calibrate(const std::string& targets_path, const std::string& out_path,
                  const std::string& report_path) {
  CalibrationTargets targets = load_calibration_targets(targets_path);
  FitReport fit;
  CalibrationTable table = calibrate(targets, &fit);
  save_calibration(table, out_path);
  json jr;
  jr["params"] = json::object();
  for (size_t i = 0; i < calibration_params().size(); ++i)
    jr["params"][calibration_params()[i]] = fit.params[i];
  jr["residuals"] = json::array();
  for (const auto& r : fit.residuals)
    jr["residuals"].push_back({{"label", r.label},
                               {"target_ms", r.target},
                               {"fitted_ms", r.fitted},
                               {"relative", r.relative}});
  jr["max_abs_relative"] = fit.max_abs_relative;
  if (!report_path.empty()) write_text(report_path, jr.dump(2) + "\n");
  std::cout << "fitted " << targets.aggregates.size() << " aggregate rows, max |residual| "
            << fmt_ms(100.0 * fit.max_abs_relative) << "% -> " << out_path << "\n";
  if (fit.warned) {
    std::cerr << "warning: residuals above 15% on:\n";
    for (const auto& r : fit.residuals)
      if (std::abs(r.relative) > 0.15)
        std::cerr << "  " << r.label << ": target " << r.target << " fitted " << r.fitted << " ("
                  << fmt_ms(100.0 * r.relative) << "%)\n";
  }
  return 0;
}

int cmd_transfer(const CommonOpts& o, const std::string& agent_name, uint64_t budget) {
  TrainingConfig cfg;
  cfg.step_budget = budget;
  cfg.trace_curve = false;
  TransferReport rep = transfer_experiment(o.scenario, o.users, threshold_from_string(o.threshold),
                                           agent_kind_from_string(agent_name), o.seed, cfg);
  const fs::path out = ensure_out(o.out_dir);
  json j = to_json(rep);
  j["scenario"] = o.scenario;
  j["users"] = o.users;
  j["target_threshold"] = o.threshold;
  j["agent"] = agent_name;
  write_text(out / "transfer_report.json", j.dump(2) + "\n");
  std::cout << "cold " << (rep.cold.converged ? rep.cold.steps_to_convergence : rep.cold.steps_run)
            << " steps vs warm "
            << (rep.warm.converged ? rep.warm.steps_to_convergence : rep.warm.steps_run)
            << " steps: " << fmt_ms(rep.step_ratio) << "x\n";
  if (o.strict && (!rep.cold.converged || !rep.warm.converged)) return 2;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"End-edge-cloud DL inference orchestration: simulator, RL agents, experiments"};
  app.require_subcommand(1);

  CommonOpts train_o, eval_o, sweep_o, oracle_o, transfer_o;
  std::string train_agent = "ql", eval_agent = "ql", transfer_agent = "ql";
  uint64_t train_budget = 2'000'000, sweep_budget = 2'000'000, oracle_budget = kDefaultOracleBudget,
           transfer_budget = 4'000'000;
  std::string save_path, init_from, eval_model;
  bool trace = false;

  auto* train = app.add_subcommand("train", "Train an agent until convergence or budget");
  add_common(train, train_o);
  train->add_option("--agent", train_agent, "ql, dqn or sota");
  train->add_option("--budget", train_budget, "Step budget");
  train->add_option("--save-model", save_path, "Write the trained Q-table / network here");
  train->add_option("--init-from", init_from, "Warm-start from a saved model");
  train->add_flag("--trace", trace, "Stream per-step rows to trace.csv");

  auto* eval = app.add_subcommand("eval", "Evaluate a trained or fixed agent greedily");
  add_common(eval, eval_o);
  eval->add_option("--agent", eval_agent, "ql, dqn, sota, device_only, edge_only, cloud_only");
  eval->add_option("--model", eval_model, "Trained model file for learning agents");

  std::string sweep_scenarios = "exp_a,exp_b,exp_c,exp_d", sweep_thresholds = "min,80,85,89,max",
              sweep_users = "1,2,3,4,5", sweep_agents = "ql";
  int sweep_threads = 0;
  auto* sw = app.add_subcommand("sweep", "Run the scenario x threshold x users x agent grid");
  add_common(sw, sweep_o);
  sw->add_option("--scenarios", sweep_scenarios, "Comma-separated scenario names");
  sw->add_option("--thresholds", sweep_thresholds, "Comma-separated thresholds");
  sw->add_option("--user-counts", sweep_users, "Comma-separated device counts");
  sw->add_option("--agents", sweep_agents, "Comma-separated agent kinds");
  sw->add_option("--budget", sweep_budget, "Per-cell step budget");
  sw->add_option("--threads", sweep_threads, "Worker threads (0 = hardware)");

  auto* orc = app.add_subcommand("oracle", "Brute-force optimum for a scenario");
  add_common(orc, oracle_o);
  orc->add_option("--budget", oracle_budget, "Joint-action evaluation budget");

  std::string targets_path = "data/calibration/targets.json",
              calib_out = "data/calibration/default.json", calib_report;
  auto* cal = app.add_subcommand("calibrate", "Fit the latency calibration to aggregate targets");
  cal->add_option("--targets", targets_path, "Aggregate targets JSON");
  cal->add_option("--out", calib_out, "Fitted calibration JSON");
  cal->add_option("--report", calib_report, "Residual report JSON");

  auto* tr = app.add_subcommand("transfer", "Cold vs warm start from a Min-threshold model");
  add_common(tr, transfer_o);
  tr->add_option("--agent", transfer_agent, "ql or dqn");
  tr->add_option("--budget", transfer_budget, "Per-training step budget");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed())
      return cmd_train(train_o, train_agent, train_budget, save_path, init_from, trace);
    if (eval->parsed()) return cmd_eval(eval_o, eval_agent, eval_model);
    if (sw->parsed())
      return cmd_sweep(sweep_o, sweep_scenarios, sweep_thresholds, sweep_users, sweep_agents,
                       sweep_budget, sweep_threads);
    if (orc->parsed()) return cmd_oracle(oracle_o, oracle_budget);
    if (cal->parsed()) return cmd_calibrate(targets_path, calib_out, calib_report);
    if (tr->parsed()) return cmd_transfer(transfer_o, transfer_agent, transfer_budget);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
