#include <catch2/catch_amalgamated.hpp>

#include "eeco/agents.hpp"
#include "eeco/env.hpp"
#include "eeco/rng.hpp"

using namespace eeco;

namespace {

JointAction actions_of(std::initializer_list<DeviceAction> list) {
  JointAction a;
  a.devices = list;
  return a;
}

constexpr DeviceAction L(int m) { return {Tier::End, m}; }
constexpr DeviceAction E0{Tier::Edge, 0};
constexpr DeviceAction C0{Tier::Cloud, 0};

bool within_pct(double value, double reference, double pct) {
  return std::abs(value - reference) <= pct / 100.0 * reference;
}

}  // namespace

TEST_CASE("contention factor") {
  CHECK(contention_factor(4, 4) == 1);  // within capacity
  CHECK(contention_factor(5, 2) == 3);
  CHECK(contention_factor(1, 1) == 1);
  CHECK(contention_factor(3, 2) == 2);
  CHECK(contention_factor(2, 4) == 1);
  CHECK_THROWS_AS(contention_factor(1, 0), std::invalid_argument);
}

TEST_CASE("single regular user offloading to the cloud lands near the measured average") {
  Environment env(make_scenario("exp_a", 1));
  const auto [ms, acc] = env.evaluate_cost(actions_of({C0}));
  CHECK(within_pct(ms, 363.47, 15.0));
  CHECK(acc == 89.9);
}

TEST_CASE("local response with a zero-overhead calibration is exactly the compute time") {
  ScenarioConfig sc = make_scenario("exp_a", 1);
  for (auto& c : {&sc.calibration.transmit_request_ms, &sc.calibration.broadcast_update_ms,
                  &sc.calibration.decision_ms})
    (*c) = {0.0, 0.5};  // weak must stay above regular
  sc.calibration.weak_extra_delay_ms = 0.0;
  Environment env(sc);
  const auto [ms, acc] = env.evaluate_cost(actions_of({L(7)}));
  CHECK(ms == sc.calibration.compute_ms[7][0]);
  CHECK(acc == 72.8);
}

TEST_CASE("five local d7 users reproduce the unconstrained average") {
  Environment env(make_scenario("exp_a", 5));
  const auto [ms, acc] = env.evaluate_cost(actions_of({L(7), L(7), L(7), L(7), L(7)}));
  CHECK(within_pct(ms, 72.08, 15.0));
  CHECK(acc == 72.8);
}

TEST_CASE("average accuracy is the spatial mean of the chosen models") {
  Environment env(make_scenario("exp_a", 5));
  CHECK(env.average_accuracy(actions_of({L(0), L(0), L(0), L(0), L(0)})) == 89.9);
  CHECK(env.average_accuracy(actions_of({L(7), L(7), L(7), L(7), L(7)})) == 72.8);
  const double mixed = env.average_accuracy(actions_of({L(4), L(4), L(4), E0, L(4)}));
  CHECK_THAT(mixed, Catch::Matchers::WithinAbs(89.10, 1e-9));
}

TEST_CASE("reward branches") {
  ScenarioConfig sc = make_scenario("exp_a", 5, ThresholdKind::P89);
  Environment env(sc);
  CHECK(env.reward_of(418.91, 89.9) == -418.91);
  CHECK(env.reward_of(100.0, 72.8) == -sc.calibration.max_response_penalty_ms);

  Environment env_min(make_scenario("exp_a", 5, ThresholdKind::Min));
  Rng rng(11);
  ActionSpace space = ActionSpace::full(env_min.scenario());
  for (int i = 0; i < 200; ++i) {
    const StepOutcome out = env_min.evaluate(space.decode(rng.below(space.joint_count())));
    CHECK(out.reward == -out.avg_response_ms);  // Min never triggers the penalty
    CHECK(out.reward <= 0.0);
  }
}

TEST_CASE("step reproduces the reported joint decisions within tolerance") {
  Environment exp_a(make_scenario("exp_a", 5));
  const StepOutcome a = exp_a.step(actions_of({E0, L(0), L(0), C0, L(0)}));
  CHECK(within_pct(a.avg_response_ms, 418.91, 15.0));
  CHECK(a.avg_accuracy_pct == 89.9);

  Environment exp_d(make_scenario("exp_d", 5));
  const StepOutcome d = exp_d.step(actions_of({L(0), C0, E0, L(0), L(0)}));
  CHECK(within_pct(d.avg_response_ms, 506.62, 15.0));
}

TEST_CASE("single-device outcome: reward equals negative response under Min") {
  Environment env(make_scenario("exp_a", 1, ThresholdKind::Min));
  const StepOutcome out = env.step(actions_of({L(7)}));
  REQUIRE(out.per_device_response_ms.size() == 1);
  CHECK(out.avg_response_ms == out.per_device_response_ms[0]);
  CHECK(out.reward == -out.avg_response_ms);
}

TEST_CASE("apply_scenario swaps the link pattern") {
  Environment env(make_scenario("exp_a", 5));
  env.apply_scenario("exp_b");
  CHECK(env.scenario().device_links ==
        std::vector<LinkCondition>{LinkCondition::Regular, LinkCondition::Weak,
                                   LinkCondition::Regular, LinkCondition::Weak,
                                   LinkCondition::Regular});
  CHECK(env.scenario().edge_link == LinkCondition::Weak);
  CHECK_THROWS_AS(env.apply_scenario("exp_x"), std::invalid_argument);
}

TEST_CASE("identical seed and action sequence give bit-identical outcomes") {
  ScenarioConfig sc = make_scenario("exp_c", 4, ThresholdKind::P85, 42);
  Environment a(sc), b(sc);
  ActionSpace space = ActionSpace::full(sc);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const JointAction act = space.decode(rng.below(space.joint_count()));
    const StepOutcome oa = a.step(act);
    const StepOutcome ob = b.step(act);
    REQUIRE(oa.per_device_response_ms == ob.per_device_response_ms);
    REQUIRE(oa.avg_response_ms == ob.avg_response_ms);
    REQUIRE(oa.reward == ob.reward);
    REQUIRE(oa.next_state == ob.next_state);
  }
}

TEST_CASE("device-only average is independent of the user count") {
  std::vector<double> values;
  for (int n = 1; n <= 5; ++n) {
    Environment env(make_scenario("exp_a", n));
    values.push_back(env.evaluate_cost(fixed_policy(FixedKind::DeviceOnly, env.scenario())).first);
  }
  for (int n = 1; n < 5; ++n) CHECK(values[n] == values[0]);
}

TEST_CASE("edge/cloud-only averages grow with users; edge is worse at five") {
  std::vector<double> edge, cloud;
  for (int n = 1; n <= 5; ++n) {
    Environment env(make_scenario("exp_a", n));
    edge.push_back(env.evaluate_cost(fixed_policy(FixedKind::EdgeOnly, env.scenario())).first);
    cloud.push_back(env.evaluate_cost(fixed_policy(FixedKind::CloudOnly, env.scenario())).first);
  }
  for (int n = 1; n < 5; ++n) {
    CHECK(edge[n] >= edge[n - 1]);
    CHECK(cloud[n] >= cloud[n - 1]);
  }
  CHECK(edge[4] > cloud[4]);
}

TEST_CASE("response time is non-decreasing in model MACs for local placement") {
  Environment env(make_scenario("exp_a", 1));
  const auto pool = default_model_pool();
  for (const auto& a : pool)
    for (const auto& b : pool) {
      if (a.macs_millions >= b.macs_millions) continue;
      const double ms_a = env.evaluate_cost(actions_of({L(a.id)})).first;
      const double ms_b = env.evaluate_cost(actions_of({L(b.id)})).first;
      CHECK(ms_a <= ms_b + 1e-12);
    }
}

TEST_CASE("weak links never speed anything up") {
  ActionSpace space = ActionSpace::full(make_scenario("exp_a", 5));
  Environment regular(make_scenario("exp_a", 5));
  Environment weak(make_scenario("exp_d", 5));
  Rng rng(9);
  for (int i = 0; i < 300; ++i) {
    const JointAction act = space.decode(rng.below(space.joint_count()));
    const StepOutcome r = regular.evaluate(act);
    const StepOutcome w = weak.evaluate(act);
    for (size_t d = 0; d < r.per_device_response_ms.size(); ++d)
      CHECK(w.per_device_response_ms[d] >= r.per_device_response_ms[d]);
  }
}

TEST_CASE("penalty must dominate the worst achievable average response") {
  ScenarioConfig sc = make_scenario("exp_d", 5);
  sc.calibration.max_response_penalty_ms = 100.0;
  CHECK_THROWS_AS(Environment(sc), std::invalid_argument);
  ScenarioConfig ok = make_scenario("exp_d", 5);
  Environment env(ok);
  CHECK(ok.calibration.max_response_penalty_ms >= env.worst_case_avg_response_ms());
}

TEST_CASE("next state reflects the round's resource footprint") {
  ScenarioConfig sc = make_scenario("exp_a", 3);
  Environment env(sc);

  const StepOutcome all_local = env.evaluate(actions_of({L(0), L(1), L(2)}));
  // order: edge(P,M,B), cloud(P,M,B), then devices
  CHECK(all_local.next_state.levels[0] == 0);
  CHECK(all_local.next_state.levels[3] == 0);
  for (int d = 0; d < 3; ++d) {
    CHECK(all_local.next_state.levels[6 + 3 * d] == 1);      // CPU busy
    CHECK(all_local.next_state.levels[6 + 3 * d + 1] == 0);  // memory still available
  }

  const StepOutcome one_each = env.evaluate(actions_of({E0, C0, L(0)}));
  CHECK(one_each.next_state.levels[0] == 4);  // edge at 1/2 utilization
  CHECK(one_each.next_state.levels[3] == 2);  // cloud at 1/4 utilization
  CHECK(one_each.next_state.levels[6] == 0);

  const StepOutcome edge_heavy = env.evaluate(actions_of({E0, E0, E0}));
  CHECK(edge_heavy.next_state.levels[0] == 8);  // saturated
  CHECK(edge_heavy.next_state.levels[1] == 1);  // memory below the cutoff at 3 requests
}

TEST_CASE("invalid actions are rejected") {
  Environment env(make_scenario("exp_a", 2));
  CHECK_THROWS_AS(env.evaluate(actions_of({{Tier::Edge, 3}, L(0)})), std::invalid_argument);
  CHECK_THROWS_AS(env.evaluate(actions_of({{Tier::End, 12}, L(0)})), std::invalid_argument);
  CHECK_THROWS_AS(env.evaluate(actions_of({L(0)})), std::invalid_argument);
}
