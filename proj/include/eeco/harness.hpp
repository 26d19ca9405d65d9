#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include "eeco/config_io.hpp"
#include "eeco/oracle.hpp"

namespace eeco {

enum class AgentKind { QLearning, Dqn, Sota, DeviceOnly, EdgeOnly, CloudOnly };

inline const char* to_string(AgentKind k) {
  switch (k) {
    case AgentKind::QLearning: return "ql";
    case AgentKind::Dqn: return "dqn";
    case AgentKind::Sota: return "sota";
    case AgentKind::DeviceOnly: return "device_only";
    case AgentKind::EdgeOnly: return "edge_only";
    case AgentKind::CloudOnly: return "cloud_only";
  }
  return "?";
}

inline AgentKind agent_kind_from_string(const std::string& s) {
  if (s == "ql") return AgentKind::QLearning;
  if (s == "dqn") return AgentKind::Dqn;
  if (s == "sota") return AgentKind::Sota;
  if (s == "device_only") return AgentKind::DeviceOnly;
  if (s == "edge_only") return AgentKind::EdgeOnly;
  if (s == "cloud_only") return AgentKind::CloudOnly;
  throw std::invalid_argument("unknown agent kind: " + s);
}

inline bool is_learning(AgentKind k) {
  return k == AgentKind::QLearning || k == AgentKind::Dqn || k == AgentKind::Sota;
}

inline std::unique_ptr<Agent> make_agent(AgentKind kind, const ScenarioConfig& sc,
                                         const HyperParams* override_hp = nullptr) {
  const int users = sc.num_end_devices;
  switch (kind) {
    case AgentKind::QLearning: {
      HyperParams hp = override_hp ? *override_hp : HyperParams::q_learning_defaults(users);
      return std::make_unique<QLearningAgent>(ActionSpace::full(sc), hp);
    }
    case AgentKind::Sota: {
      HyperParams hp = override_hp ? *override_hp : HyperParams::q_learning_defaults(users);
      return std::make_unique<QLearningAgent>(ActionSpace::offload_only(sc), hp);
    }
    case AgentKind::Dqn: {
      HyperParams hp = override_hp ? *override_hp : HyperParams::dqn_defaults(users);
      return std::make_unique<DqnAgent>(ActionSpace::full(sc), hp, sc.rng_seed);
    }
    case AgentKind::DeviceOnly:
    case AgentKind::EdgeOnly:
    case AgentKind::CloudOnly: {
      ActionSpace space = ActionSpace::full(sc);
      const FixedKind fk = kind == AgentKind::DeviceOnly ? FixedKind::DeviceOnly
                           : kind == AgentKind::EdgeOnly ? FixedKind::EdgeOnly
                                                         : FixedKind::CloudOnly;
      const uint64_t idx = space.encode(fixed_policy(fk, sc));
      return std::make_unique<FixedAgent>(std::move(space), idx);
    }
  }
  throw std::logic_error("unreachable");
}

struct TrainingConfig {
  uint64_t step_budget = 2'000'000;
  int check_interval = 100;     // convergence probe cadence, in steps
  int consecutive_checks = 10;  // probes that must all match the oracle
  int eval_warmup = 5;
  int eval_states = 10;
  bool trace_curve = true;
};

struct CurvePoint {
  uint64_t step = 0;
  double epsilon = 0.0;
  double mean_reward = 0.0;
  double prediction_accuracy = 0.0;
};

struct TrainingReport {
  bool converged = false;
  uint64_t steps_to_convergence = 0;  // step of the first probe of the passing streak
  uint64_t steps_run = 0;
  double final_prediction_accuracy = 0.0;
  double wall_clock_seconds = 0.0;
  std::vector<CurvePoint> curve;
};

// Train until the greedy policy's outcomes match the brute-force optimum on
// the evaluation states for `consecutive_checks` probes in a row, or the
// budget runs out. Deterministic under (scenario, seed). An optional trace
// stream receives one CSV row per environment step.
inline TrainingReport run_training(Agent& agent, Environment& env, const TrainingConfig& cfg,
                                   std::ostream* trace = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  env.reset();
  Rng rng(mix_seed(env.scenario().rng_seed, 0x747261696eULL));
  OracleCache cache(env, env.scenario().threshold_value(), agent.space());
  TrainingReport report;
  if (trace) *trace << "step,state,action,per_device_ms,avg_response_ms,avg_accuracy_pct,reward\n";
  double reward_sum = 0.0;
  int streak = 0;
  uint64_t streak_start = 0;
  for (uint64_t step = 1; step <= cfg.step_budget; ++step) {
    const DiscreteState s = env.state();
    const uint64_t a = agent.select_action(s, rng);
    const JointAction joint = agent.space().decode(a);
    const StepOutcome out = env.step(joint);
    agent.observe(s, a, out.reward, out.next_state, rng);
    reward_sum += out.reward;
    report.steps_run = step;
    if (trace) {
      *trace << step << ',' << s.to_string() << ',' << joint.to_string() << ',';
      for (size_t i = 0; i < out.per_device_response_ms.size(); ++i) {
        if (i) *trace << '|';
        char buf[48];
        std::snprintf(buf, sizeof buf, "%.6f", out.per_device_response_ms[i]);
        *trace << buf;
      }
      char buf[160];
      std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", out.avg_response_ms,
                    out.avg_accuracy_pct, out.reward);
      *trace << buf;
    }
    if (step % cfg.check_interval == 0) {
      const auto states = evaluation_states(env, agent, cfg.eval_warmup, cfg.eval_states);
      const double acc = prediction_accuracy(agent, env, cache.threshold(), states, &cache);
      if (cfg.trace_curve)
        report.curve.push_back({step, agent.epsilon(), reward_sum / cfg.check_interval, acc});
      reward_sum = 0.0;
      report.final_prediction_accuracy = acc;
      if (acc == 1.0) {
        if (streak == 0) streak_start = step;
        if (++streak >= cfg.consecutive_checks) {
          report.converged = true;
          report.steps_to_convergence = streak_start;
          break;
        }
      } else {
        streak = 0;
      }
    }
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

struct EvalReport {
  std::string decisions;
  double avg_response_ms = 0.0;
  double avg_accuracy_pct = 0.0;
  bool constraint_satisfied = false;
  double device_only_ms = 0.0;
  double edge_only_ms = 0.0;
  double cloud_only_ms = 0.0;
  double sota_optimum_ms = 0.0;  // offload-only optimum: the converged baseline's value
  double speedup_vs_sota = 0.0;
};

// Greedy rollout with a short warmup, then report the settled decision and
// how it compares against the fixed strategies and the offload-only optimum.
inline EvalReport run_evaluation(Agent& agent, const Environment& env, int warmup = 5) {
  EvalReport rep;
  const auto states = evaluation_states(env, agent, warmup, 1);
  const JointAction decision = agent.space().decode(agent.greedy_action(states.front()));
  const auto [avg_ms, acc] = env.evaluate_cost(decision);
  rep.decisions = decision.to_string();
  rep.avg_response_ms = avg_ms;
  rep.avg_accuracy_pct = acc;
  rep.constraint_satisfied = env.accuracy_satisfied(acc);
  rep.device_only_ms = env.evaluate_cost(fixed_policy(FixedKind::DeviceOnly, env.scenario())).first;
  rep.edge_only_ms = env.evaluate_cost(fixed_policy(FixedKind::EdgeOnly, env.scenario())).first;
  rep.cloud_only_ms = env.evaluate_cost(fixed_policy(FixedKind::CloudOnly, env.scenario())).first;
  const ActionSpace sota_space = ActionSpace::offload_only(env.scenario());
  rep.sota_optimum_ms =
      optimal_action(env, states.front(), 0.0, sota_space).avg_response_ms;
  rep.speedup_vs_sota = rep.sota_optimum_ms / rep.avg_response_ms;
  return rep;
}

// ---------------------------------------------------------------------------
// Calibration fit
// ---------------------------------------------------------------------------

// Names of the free parameters of the latency model, in solver order.
inline const std::vector<std::string>& calibration_params() {
  static const std::vector<std::string> names = {
      "transmit_regular", "transmit_weak",    "compute_end_d0", "compute_end_d1",
      "compute_end_d2",   "compute_end_d3",   "compute_end_d4", "compute_end_d5",
      "compute_end_d6",   "compute_end_d7",   "compute_edge_d0", "compute_cloud_d0"};
  return names;
}

struct AggregateRow {
  std::string label;
  std::string scenario;                // exp_a..exp_d
  std::vector<DeviceAction> decisions; // one per active user, S1 first
  double avg_response_ms = 0.0;
  double weight = 1.0;
};

struct PriorRow {
  std::string param;
  double value = 0.0;
  double weight = 1.0;
};

struct TieRow {
  std::vector<std::pair<std::string, double>> terms;
  double value = 0.0;
  double weight = 1.0;
};

struct CalibrationTargets {
  std::vector<AggregateRow> aggregates;
  std::vector<PriorRow> priors;
  std::vector<TieRow> ties;
  // Constants not fitted: measured broadcast latencies and the emulated
  // per-packet weak delay.
  std::array<double, 2> decision_ms{1.0, 2.0};
  std::array<double, 2> broadcast_update_ms{0.4, 2.0};
  double weak_extra_delay_ms = 20.0;
  double max_response_penalty_ms = 1500.0;
};

struct FitRowResidual {
  std::string label;
  double target = 0.0;
  double fitted = 0.0;
  double relative = 0.0;
};

struct FitReport {
  std::vector<double> params;
  std::vector<FitRowResidual> residuals;
  double max_abs_relative = 0.0;
  bool warned = false;
};

namespace detail {

inline int param_index(const std::string& name) {
  const auto& names = calibration_params();
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("unknown calibration parameter: " + name);
}

// Coefficient row of the latency model for one aggregate observation. Must
// mirror Environment::response_time exactly; the round-trip unit test pins
// the two together.
inline void aggregate_coefficients(const AggregateRow& row, const CalibrationTargets& t,
                                   std::vector<double>& coef, double& constant) {
  const int n = static_cast<int>(row.decisions.size());
  ScenarioConfig sc;
  sc.num_end_devices = n;
  apply_link_pattern(sc, row.scenario);
  coef.assign(calibration_params().size(), 0.0);
  constant = 0.0;
  int edge_load = 0, cloud_load = 0;
  for (const auto& d : row.decisions) {
    if (d.placement == Tier::Edge) ++edge_load;
    if (d.placement == Tier::Cloud) ++cloud_load;
  }
  const double wx = t.weak_extra_delay_ms;
  for (int i = 0; i < n; ++i) {
    const bool weak = sc.device_links[i] == LinkCondition::Weak;
    const bool edge_weak = sc.edge_link == LinkCondition::Weak;
    const int dev_c = weak ? 1 : 0;
    const int edge_c = edge_weak ? 1 : 0;
    // orchestration overhead: request + update out, decision back
    coef[dev_c] += 1.0;
    constant += t.broadcast_update_ms[dev_c] + t.decision_ms[dev_c] + (weak ? 2.0 * wx : 0.0);
    const auto& d = row.decisions[i];
    switch (d.placement) {
      case Tier::End:
        coef[2 + d.model] += 1.0;
        break;
      case Tier::Edge:
        coef[dev_c] += 1.0;
        coef[edge_c] += 1.0;
        constant += (weak ? wx : 0.0) + (edge_weak ? wx : 0.0);
        coef[10] += contention_factor(edge_load, default_device_spec(Tier::Edge).vcpus);
        break;
      case Tier::Cloud:
        coef[dev_c] += 1.0;
        coef[edge_c] += 2.0;
        constant += (weak ? wx : 0.0) + (edge_weak ? 2.0 * wx : 0.0);
        coef[11] += contention_factor(cloud_load, default_device_spec(Tier::Cloud).vcpus);
        break;
    }
  }
  for (auto& c : coef) c /= n;
  constant /= n;
}

// Gaussian elimination with partial pivoting on the normal equations.
inline std::vector<double> solve_normal_equations(std::vector<std::vector<double>> a,
                                                  std::vector<double> b) {
  const size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t pivot = col;
    for (size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    if (std::abs(a[pivot][col]) < 1e-12)
      throw std::runtime_error("calibrate: singular normal equations; targets do not identify "
                               "every parameter");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = b[i] / a[i][i];
  return x;
}

}  // namespace detail

// Weighted linear least squares of the latency-model parameters against the
// aggregate response-time targets, then assembly into a full calibration
// table. Models never observed in the aggregates are positioned by the tie
// rows; the MAC-monotonicity invariant is enforced by a final upward repair.
inline CalibrationTable calibrate(const CalibrationTargets& targets, FitReport* report = nullptr,
                                  double warn_relative = 0.15) {
  const size_t np = calibration_params().size();
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs, weights;
  std::vector<double> constants;
  for (const auto& agg : targets.aggregates) {
    std::vector<double> coef;
    double constant = 0.0;
    detail::aggregate_coefficients(agg, targets, coef, constant);
    rows.push_back(std::move(coef));
    rhs.push_back(agg.avg_response_ms - constant);
    constants.push_back(constant);
    weights.push_back(agg.weight);
  }
  for (const auto& p : targets.priors) {
    std::vector<double> coef(np, 0.0);
    coef[detail::param_index(p.param)] = 1.0;
    rows.push_back(std::move(coef));
    rhs.push_back(p.value);
    constants.push_back(0.0);
    weights.push_back(p.weight);
  }
  for (const auto& tie : targets.ties) {
    std::vector<double> coef(np, 0.0);
    for (const auto& [name, c] : tie.terms) coef[detail::param_index(name)] += c;
    rows.push_back(std::move(coef));
    rhs.push_back(tie.value);
    constants.push_back(0.0);
    weights.push_back(tie.weight);
  }
  if (rows.empty()) throw std::invalid_argument("calibrate: no target rows");

  std::vector<std::vector<double>> ata(np, std::vector<double>(np, 0.0));
  std::vector<double> atb(np, 0.0);
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t i = 0; i < np; ++i) {
      if (rows[r][i] == 0.0) continue;
      atb[i] += weights[r] * rows[r][i] * rhs[r];
      for (size_t j = 0; j < np; ++j) ata[i][j] += weights[r] * rows[r][i] * rows[r][j];
    }
  }
  std::vector<double> x = detail::solve_normal_equations(std::move(ata), std::move(atb));
  for (auto& v : x) v = std::max(v, 0.0);

  // MAC monotonicity repair: every end-tier compute time must be at least the
  // largest one among models with fewer MACs.
  {
    const auto pool = default_model_pool();
    std::vector<int> order{3, 7, 2, 6, 1, 5, 0, 4};  // ascending MACs
    double floor_ms = 0.0;
    double group_max = 0.0;
    double current_macs = -1.0;
    for (int m : order) {
      if (pool[m].macs_millions != current_macs) {
        floor_ms = group_max;
        current_macs = pool[m].macs_millions;
      }
      x[2 + m] = std::max(x[2 + m], floor_ms);
      group_max = std::max(group_max, x[2 + m]);
    }
  }
  if (x[1] <= x[0]) x[1] = x[0] + 0.5;  // weak transmit must exceed regular

  CalibrationTable table;
  table.transmit_request_ms = {x[0], x[1]};
  table.broadcast_update_ms = targets.broadcast_update_ms;
  table.decision_ms = targets.decision_ms;
  table.weak_extra_delay_ms = targets.weak_extra_delay_ms;
  table.max_response_penalty_ms = targets.max_response_penalty_ms;
  const double edge_ratio = x[10] / x[2];
  const double cloud_ratio = x[11] / x[2];
  if (!(cloud_ratio < edge_ratio && edge_ratio < 1.0))
    throw std::runtime_error("calibrate: fitted tier speeds violate end > edge > cloud ordering");
  table.compute_ms.resize(8);
  for (int m = 0; m < 8; ++m)
    table.compute_ms[m] = {x[2 + m], x[2 + m] * edge_ratio, x[2 + m] * cloud_ratio};

  if (report) {
    report->params = x;
    report->residuals.clear();
    report->max_abs_relative = 0.0;
    for (size_t r = 0; r < targets.aggregates.size(); ++r) {
      double fitted = constants[r];
      for (size_t i = 0; i < np; ++i) fitted += rows[r][i] * x[i];
      const double rel = (fitted - targets.aggregates[r].avg_response_ms) /
                         targets.aggregates[r].avg_response_ms;
      report->residuals.push_back({targets.aggregates[r].label,
                                   targets.aggregates[r].avg_response_ms, fitted, rel});
      report->max_abs_relative = std::max(report->max_abs_relative, std::abs(rel));
    }
    report->warned = report->max_abs_relative > warn_relative;
  }
  table.validate(8);
  return table;
}

// --- targets file I/O ---

inline DeviceAction decision_from_token(const std::string& tok) {
  // "d4,L" / "d0,E" / "d0,C"
  const auto comma = tok.find(',');
  if (tok.size() < 4 || tok[0] != 'd' || comma == std::string::npos || comma + 1 >= tok.size())
    throw std::invalid_argument("bad decision token: " + tok);
  DeviceAction d;
  d.model = std::stoi(tok.substr(1, comma - 1));
  switch (tok[comma + 1]) {
    case 'L': d.placement = Tier::End; break;
    case 'E': d.placement = Tier::Edge; break;
    case 'C': d.placement = Tier::Cloud; break;
    default: throw std::invalid_argument("bad placement in decision token: " + tok);
  }
  return d;
}

inline CalibrationTargets load_calibration_targets(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open calibration targets: " + path);
  json j;
  f >> j;
  CalibrationTargets t;
  const auto& fixed = j.at("fixed");
  t.decision_ms = {fixed.at("decision_ms").at(0).get<double>(),
                   fixed.at("decision_ms").at(1).get<double>()};
  t.broadcast_update_ms = {fixed.at("broadcast_update_ms").at(0).get<double>(),
                           fixed.at("broadcast_update_ms").at(1).get<double>()};
  t.weak_extra_delay_ms = fixed.at("weak_extra_delay_ms").get<double>();
  t.max_response_penalty_ms = fixed.at("max_response_penalty_ms").get<double>();
  for (const auto& a : j.at("aggregates")) {
    AggregateRow row;
    row.label = a.at("label").get<std::string>();
    row.scenario = a.at("scenario").get<std::string>();
    for (const auto& tok : a.at("decisions")) row.decisions.push_back(decision_from_token(tok));
    row.avg_response_ms = a.at("avg_response_ms").get<double>();
    row.weight = a.value("weight", 1.0);
    t.aggregates.push_back(std::move(row));
  }
  if (j.contains("priors"))
    for (const auto& p : j["priors"])
      t.priors.push_back({p.at("param").get<std::string>(), p.at("value").get<double>(),
                          p.value("weight", 1.0)});
  if (j.contains("ties")) {
    for (const auto& tie : j["ties"]) {
      TieRow row;
      for (const auto& term : tie.at("terms"))
        row.terms.emplace_back(term.at(0).get<std::string>(), term.at(1).get<double>());
      row.value = tie.value("value", 0.0);
      row.weight = tie.value("weight", 1.0);
      t.ties.push_back(std::move(row));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

struct SweepCell {
  std::string scenario;
  int users = 5;
  ThresholdKind threshold = ThresholdKind::Max;
  AgentKind agent = AgentKind::QLearning;
};

struct SweepSpec {
  std::vector<SweepCell> cells;
  uint64_t seed = 1;
  TrainingConfig training;

  static SweepSpec cross(const std::vector<std::string>& scenarios,
                         const std::vector<ThresholdKind>& thresholds,
                         const std::vector<int>& users, const std::vector<AgentKind>& agents,
                         uint64_t seed) {
    SweepSpec spec;
    spec.seed = seed;
    for (const auto& sc : scenarios)
      for (auto th : thresholds)
        for (int n : users)
          for (auto ag : agents) spec.cells.push_back({sc, n, th, ag});
    return spec;
  }
};

struct SweepCellResult {
  SweepCell cell;
  uint64_t seed = 0;
  TrainingReport training;
  EvalReport eval;
};

struct SweepReport {
  std::vector<SweepCellResult> cells;
};

inline SweepCellResult run_sweep_cell(const SweepCell& cell, uint64_t seed,
                                      const TrainingConfig& tcfg) {
  SweepCellResult res;
  res.cell = cell;
  res.seed = seed;
  ScenarioConfig sc = resolve_scenario(cell.scenario, cell.users, cell.threshold, seed);
  Environment env(sc);
  auto agent = make_agent(cell.agent, sc);
  if (is_learning(cell.agent)) {
    TrainingConfig cfg = tcfg;
    cfg.trace_curve = false;
    res.training = run_training(*agent, env, cfg);
  } else {
    const auto states = evaluation_states(env, *agent, tcfg.eval_warmup, tcfg.eval_states);
    res.training.converged = true;
    res.training.final_prediction_accuracy =
        prediction_accuracy(*agent, env, sc.threshold_value(), states);
  }
  res.eval = run_evaluation(*agent, env, tcfg.eval_warmup);
  return res;
}

// Cells run in parallel on worker threads; each owns its environment, agent
// and seed, and results aggregate in cell order.
inline SweepReport sweep(const SweepSpec& spec, int threads = 0) {
  SweepReport report;
  report.cells.resize(spec.cells.size());
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(spec.cells.size())));
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= spec.cells.size()) return;
      report.cells[i] =
          run_sweep_cell(spec.cells[i], mix_seed(spec.seed, i), spec.training);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return report;
}

// ---------------------------------------------------------------------------
// Transfer learning
// ---------------------------------------------------------------------------

struct TransferReport {
  TrainingReport pretrain_min;
  TrainingReport cold;
  TrainingReport warm;
  double step_ratio = 0.0;  // cold steps / warm steps
};

// Trains a Min-threshold agent from scratch, then compares a cold start
// against a warm start from it at the target threshold.
inline TransferReport transfer_experiment(const std::string& scenario, int users,
                                          ThresholdKind target, AgentKind kind, uint64_t seed,
                                          const TrainingConfig& tcfg) {
  if (kind != AgentKind::QLearning && kind != AgentKind::Dqn)
    throw std::invalid_argument("transfer_experiment: needs a learning agent");
  TransferReport rep;

  ScenarioConfig sc_min = resolve_scenario(scenario, users, ThresholdKind::Min, seed);
  Environment env_min(sc_min);
  auto pre = make_agent(kind, sc_min);
  rep.pretrain_min = run_training(*pre, env_min, tcfg);

  ScenarioConfig sc_target = resolve_scenario(scenario, users, target, seed);
  Environment env_cold(sc_target);
  auto cold = make_agent(kind, sc_target);
  rep.cold = run_training(*cold, env_cold, tcfg);

  Environment env_warm(sc_target);
  auto warm = make_agent(kind, sc_target);
  if (kind == AgentKind::QLearning)
    static_cast<QLearningAgent&>(*warm).warm_start_from(static_cast<QLearningAgent&>(*pre));
  else
    static_cast<DqnAgent&>(*warm).warm_start_from(static_cast<DqnAgent&>(*pre));
  rep.warm = run_training(*warm, env_warm, tcfg);

  const auto steps = [](const TrainingReport& r) {
    return r.converged ? std::max<uint64_t>(r.steps_to_convergence, 1) : r.steps_run;
  };
  rep.step_ratio = static_cast<double>(steps(rep.cold)) / static_cast<double>(steps(rep.warm));
  return rep;
}

// ---------------------------------------------------------------------------
// Report writers (deterministic formatting)
// ---------------------------------------------------------------------------

inline std::string fmt_ms(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline void write_training_curve_csv(std::ostream& os, const TrainingReport& rep) {
  os << "step,epsilon,mean_reward,prediction_accuracy\n";
  for (const auto& p : rep.curve)
    os << p.step << ',' << fmt_ms(p.epsilon) << ',' << fmt_ms(p.mean_reward) << ','
       << fmt_ms(p.prediction_accuracy) << '\n';
}

inline json to_json(const TrainingReport& r) {
  return json{{"converged", r.converged},
              {"steps_to_convergence", r.steps_to_convergence},
              {"steps_run", r.steps_run},
              {"final_prediction_accuracy", r.final_prediction_accuracy},
              {"wall_clock_seconds", r.wall_clock_seconds}};
}

inline json to_json(const EvalReport& r) {
  return json{{"decisions", r.decisions},
              {"avg_response_ms", r.avg_response_ms},
              {"avg_accuracy_pct", r.avg_accuracy_pct},
              {"constraint_satisfied", r.constraint_satisfied},
              {"device_only_ms", r.device_only_ms},
              {"edge_only_ms", r.edge_only_ms},
              {"cloud_only_ms", r.cloud_only_ms},
              {"sota_optimum_ms", r.sota_optimum_ms},
              {"speedup_vs_sota", r.speedup_vs_sota}};
}

inline void write_sweep_csv(std::ostream& os, const SweepReport& rep) {
  os << "scenario,users,threshold,agent,seed,converged,steps_to_convergence,"
        "prediction_accuracy,decisions,avg_response_ms,avg_accuracy_pct,"
        "sota_optimum_ms,speedup_vs_sota,device_only_ms,edge_only_ms,cloud_only_ms\n";
  for (const auto& c : rep.cells) {
    os << c.cell.scenario << ',' << c.cell.users << ',' << to_string(c.cell.threshold) << ','
       << to_string(c.cell.agent) << ',' << c.seed << ',' << (c.training.converged ? 1 : 0) << ','
       << c.training.steps_to_convergence << ',' << fmt_ms(c.training.final_prediction_accuracy)
       << ',' << c.eval.decisions << ',' << fmt_ms(c.eval.avg_response_ms) << ','
       << fmt_ms(c.eval.avg_accuracy_pct) << ',' << fmt_ms(c.eval.sota_optimum_ms) << ','
       << fmt_ms(c.eval.speedup_vs_sota) << ',' << fmt_ms(c.eval.device_only_ms) << ','
       << fmt_ms(c.eval.edge_only_ms) << ',' << fmt_ms(c.eval.cloud_only_ms) << '\n';
  }
}

inline json to_json(const TransferReport& r) {
  return json{{"pretrain_min", to_json(r.pretrain_min)},
              {"cold", to_json(r.cold)},
              {"warm", to_json(r.warm)},
              {"step_ratio", r.step_ratio}};
}

}  // namespace eeco
