#include <catch2/catch_amalgamated.hpp>

#include "eeco/domain.hpp"
#include "eeco/rng.hpp"

using namespace eeco;

TEST_CASE("default model pool matches the published variants") {
  const auto pool = default_model_pool();
  REQUIRE(pool.size() == 8);
  CHECK(pool[0].top5_accuracy_pct == 89.9);
  CHECK(pool[7].top5_accuracy_pct == 72.8);
  double best = 0.0;
  for (const auto& m : pool) {
    CHECK(m.top5_accuracy_pct > 0.0);
    CHECK(m.top5_accuracy_pct <= 100.0);
    CHECK(m.top1_accuracy_pct <= m.top5_accuracy_pct);
    best = std::max(best, m.top5_accuracy_pct);
  }
  CHECK(best == pool[0].top5_accuracy_pct);
}

TEST_CASE("threshold values") {
  ScenarioConfig sc = make_scenario("exp_a");
  sc.accuracy_threshold = ThresholdKind::Min;
  CHECK(sc.threshold_value() == 0.0);
  sc.accuracy_threshold = ThresholdKind::P80;
  CHECK(sc.threshold_value() == 80.0);
  sc.accuracy_threshold = ThresholdKind::P85;
  CHECK(sc.threshold_value() == 85.0);
  sc.accuracy_threshold = ThresholdKind::P89;
  CHECK(sc.threshold_value() == 89.0);
  sc.accuracy_threshold = ThresholdKind::Max;
  CHECK(sc.threshold_value() == 89.9);
}

TEST_CASE("link patterns follow the experiment table") {
  using LC = LinkCondition;
  auto links = [](const ScenarioConfig& sc) {
    std::vector<LC> v = sc.device_links;
    v.push_back(sc.edge_link);
    return v;
  };
  CHECK(links(make_scenario("exp_a")) ==
        std::vector<LC>{LC::Regular, LC::Regular, LC::Regular, LC::Regular, LC::Regular, LC::Regular});
  CHECK(links(make_scenario("exp_b")) ==
        std::vector<LC>{LC::Regular, LC::Weak, LC::Regular, LC::Weak, LC::Regular, LC::Weak});
  CHECK(links(make_scenario("exp_c")) ==
        std::vector<LC>{LC::Weak, LC::Weak, LC::Weak, LC::Regular, LC::Regular, LC::Regular});
  CHECK(links(make_scenario("exp_d")) ==
        std::vector<LC>{LC::Weak, LC::Weak, LC::Weak, LC::Weak, LC::Weak, LC::Weak});
  CHECK_THROWS_AS(make_scenario("exp_e"), std::invalid_argument);
  CHECK(make_scenario("exp_b", 3).device_links ==
        std::vector<LC>{LC::Regular, LC::Weak, LC::Regular});
}

TEST_CASE("scenario validation catches malformed configs") {
  ScenarioConfig sc = make_scenario("exp_a");
  sc.device_links.pop_back();
  CHECK_THROWS_AS(sc.validate(), std::invalid_argument);

  ScenarioConfig sc2 = make_scenario("exp_a");
  sc2.model_pool.clear();
  CHECK_THROWS_AS(sc2.validate(), std::invalid_argument);

  ScenarioConfig sc3 = make_scenario("exp_a");
  sc3.model_pool[2].id = 7;
  CHECK_THROWS_AS(sc3.validate(), std::invalid_argument);
}

static ResourceSnapshot idle_snapshot(int n) {
  ResourceSnapshot s;
  s.devices.resize(n);
  return s;
}

TEST_CASE("discretize: idle world maps to the zero state") {
  ScenarioConfig sc = make_scenario("exp_a", 3);
  const DiscreteState st = discretize(idle_snapshot(3), sc);
  REQUIRE(st.levels.size() == 3u * (3 + 2));
  for (uint8_t v : st.levels) CHECK(v == 0);
}

TEST_CASE("discretize: edge utilization binning") {
  ScenarioConfig sc = make_scenario("exp_a", 1);
  ResourceSnapshot s = idle_snapshot(1);
  s.edge.cpu_utilization = 1.0;
  CHECK(discretize(s, sc).levels[0] == 8);  // clamped maximum
  s.edge.cpu_utilization = 0.5;
  CHECK(discretize(s, sc).levels[0] == 4);  // floor(9 * 0.5)
  s.edge.cpu_utilization = 0.0;
  CHECK(discretize(s, sc).levels[0] == 0);
}

TEST_CASE("discretize: binary components use the configured cutoffs") {
  ScenarioConfig sc = make_scenario("exp_a", 1);
  ResourceSnapshot s = idle_snapshot(1);
  s.devices[0].cpu_utilization = 0.5;  // busy strictly above the cutoff
  CHECK(discretize(s, sc).levels[6] == 0);
  s.devices[0].cpu_utilization = 0.51;
  CHECK(discretize(s, sc).levels[6] == 1);
  s.devices[0].memory_free_fraction = 0.5;  // busy strictly below the cutoff
  CHECK(discretize(s, sc).levels[7] == 0);
  s.devices[0].memory_free_fraction = 0.49;
  CHECK(discretize(s, sc).levels[7] == 1);
  s.devices[0].link = LinkCondition::Weak;
  CHECK(discretize(s, sc).levels[8] == 1);
}

TEST_CASE("discretize is deterministic on random snapshots") {
  ScenarioConfig sc = make_scenario("exp_a", 4);
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    ResourceSnapshot s = idle_snapshot(4);
    auto randomize = [&](ResourceSnapshot::Node& n) {
      n.cpu_utilization = rng.uniform();
      n.memory_free_fraction = rng.uniform();
      n.link = rng.uniform() < 0.5 ? LinkCondition::Regular : LinkCondition::Weak;
    };
    for (auto& d : s.devices) randomize(d);
    randomize(s.edge);
    randomize(s.cloud);
    const DiscreteState a = discretize(s, sc);
    const DiscreteState b = discretize(s, sc);
    CHECK(a == b);
    CHECK(a.key() == b.key());
  }
}

TEST_CASE("enumerate_actions: canonical order and size") {
  ScenarioConfig sc = make_scenario("exp_a");
  const auto acts = enumerate_actions(sc);
  REQUIRE(acts.size() == 10);  // l + 2 with the default pool
  for (int m = 0; m < 8; ++m) {
    CHECK(acts[m].placement == Tier::End);
    CHECK(acts[m].model == m);
  }
  CHECK(acts[8] == DeviceAction{Tier::Edge, 0});
  CHECK(acts[9] == DeviceAction{Tier::Cloud, 0});

  ScenarioConfig tiny = sc;
  tiny.model_pool = {default_model_pool()[0]};
  CHECK(enumerate_actions(tiny).size() == 3);  // one local choice plus two offloads
}

TEST_CASE("action space: joint indexing round trip") {
  ScenarioConfig sc = make_scenario("exp_a", 3);
  ActionSpace space = ActionSpace::full(sc);
  CHECK(space.joint_count() == 1000);  // 10^3
  CHECK(space.decode(0).devices == std::vector<DeviceAction>{{Tier::End, 0}, {Tier::End, 0}, {Tier::End, 0}});
  CHECK(space.decode(999).devices ==
        std::vector<DeviceAction>{{Tier::Cloud, 0}, {Tier::Cloud, 0}, {Tier::Cloud, 0}});
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const uint64_t idx = rng.below(space.joint_count());
    const JointAction a = space.decode(idx);
    REQUIRE(a.devices.size() == 3);
    for (const auto& d : a.devices)
      if (d.placement != Tier::End) CHECK(d.model == 0);
    CHECK(space.encode(a) == idx);
  }
  CHECK_THROWS_AS(space.decode(1000), std::out_of_range);
}

TEST_CASE("offload-only space never leaves d0") {
  ScenarioConfig sc = make_scenario("exp_a", 5);
  ActionSpace space = ActionSpace::offload_only(sc);
  CHECK(space.joint_count() == 243);  // 3^5
  for (uint64_t i = 0; i < space.joint_count(); ++i)
    for (const auto& d : space.decode(i).devices) CHECK(d.model == 0);
}

TEST_CASE("state-action space size") {
  CHECK(state_action_space_size(make_scenario("exp_a", 3)) == 663'552'000ULL);  // ~6.6e8
  CHECK(state_action_space_size(make_scenario("exp_a", 5)) == 4'246'732'800'000ULL);  // ~4.2e12
  CHECK(state_action_space_size(make_scenario("exp_a", 4)) == 53'084'160'000ULL);  // ~5.3e10
  CHECK(state_action_space_size(make_scenario("exp_a", 1), 1) == 10'368ULL);  // 8 * 36^2
  ScenarioConfig big = make_scenario("exp_a", 5);
  big.num_end_devices = 40;
  big.device_links.assign(40, LinkCondition::Regular);
  CHECK_THROWS_AS(state_action_space_size(big), std::overflow_error);
}

TEST_CASE("discrete state keys are unique over reachable levels") {
  // distinct level vectors must map to distinct keys
  ScenarioConfig sc = make_scenario("exp_a", 2);
  std::vector<uint64_t> keys;
  for (int edge_p = 0; edge_p < 9; ++edge_p)
    for (int cloud_p = 0; cloud_p < 9; ++cloud_p)
      for (int bits = 0; bits < 16; ++bits) {
        DiscreteState st;
        st.levels = {static_cast<uint8_t>(edge_p), 0, 0, static_cast<uint8_t>(cloud_p),
                     0, 0,
                     static_cast<uint8_t>(bits & 1), static_cast<uint8_t>((bits >> 1) & 1), 0,
                     static_cast<uint8_t>((bits >> 2) & 1), static_cast<uint8_t>((bits >> 3) & 1), 0};
        keys.push_back(st.key());
      }
  std::sort(keys.begin(), keys.end());
  CHECK(std::adjacent_find(keys.begin(), keys.end()) == keys.end());
}
