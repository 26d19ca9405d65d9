#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "eeco/domain.hpp"
#include "eeco/rng.hpp"

namespace eeco {

// Active request counts per node for one synchronous round.
struct NodeLoad {
  std::vector<int> end_devices;  // at most 1 each: a device runs only its own request
  int edge = 0;
  int cloud = 0;
};

// Requests up to the node's vCPU count run unscaled; beyond that they are
// served in FIFO batches of vcpus, so every request in the round sees the
// full batch count.
inline int contention_factor(int active_requests, int vcpus) {
  if (vcpus < 1) throw std::invalid_argument("contention_factor: vcpus must be >= 1");
  if (active_requests <= vcpus) return 1;
  return (active_requests + vcpus - 1) / vcpus;
}

struct StepOutcome {
  std::vector<double> per_device_response_ms;
  double avg_response_ms = 0.0;
  double avg_accuracy_pct = 0.0;
  double reward = 0.0;
  DiscreteState next_state;
};

// Deterministic single-round simulator. All N requests of a round are issued
// synchronously; response times depend only on the round's own placements and
// the (static) link conditions, and the next discrete state is the resource
// footprint those placements leave behind.
class Environment {
 public:
  explicit Environment(ScenarioConfig sc)
      : scenario_(std::move(sc)), rng_(mix_seed(scenario_.rng_seed, 0x656e76)) {
    scenario_.validate();
    device_links_ = scenario_.device_links;
    edge_link_ = scenario_.edge_link;
    const double worst = worst_case_avg_response_ms();
    if (scenario_.calibration.max_response_penalty_ms < worst)
      throw std::invalid_argument(
          "calibration: max_response_penalty_ms must cover the worst achievable average "
          "response (" + std::to_string(worst) + " ms for this scenario)");
    reset();
  }

  const ScenarioConfig& scenario() const { return scenario_; }
  const DiscreteState& state() const { return state_; }
  int num_devices() const { return scenario_.num_end_devices; }
  uint64_t steps_taken() const { return steps_; }

  void reset() {
    state_ = discretize(idle_snapshot(), scenario_);
    steps_ = 0;
  }

  // Swap in a named Table-5 link pattern, keeping everything else.
  void apply_scenario(const std::string& name) {
    apply_link_pattern(scenario_, name);
    device_links_ = scenario_.device_links;
    edge_link_ = scenario_.edge_link;
    reset();
  }

  // Response time of one device's request given the round's load. Sum of the
  // orchestration round trip, the transfer hops of the chosen placement, and
  // the contention-scaled compute time.
  double response_time(int device_index, const DeviceAction& action, const NodeLoad& load) const {
    check_action(action);
    const auto& cal = scenario_.calibration;
    const LinkCondition link = device_links_.at(device_index);
    double t = overhead_ms(link);
    switch (action.placement) {
      case Tier::End: {
        const int active = load.end_devices.at(device_index);
        t += cal.compute_ms[action.model][0] *
             contention_factor(std::max(active, 1), scenario_.end_spec.vcpus);
        break;
      }
      case Tier::Edge:
        t += hop_ms(link) + hop_ms(edge_link_);
        t += cal.compute_ms[action.model][1] *
             contention_factor(std::max(load.edge, 1), scenario_.edge_spec.vcpus);
        break;
      case Tier::Cloud:
        // Two edge-side hops: the request is relayed edge-to-cloud and the
        // result comes back through the edge.
        t += hop_ms(link) + 2.0 * hop_ms(edge_link_);
        t += cal.compute_ms[action.model][2] *
             contention_factor(std::max(load.cloud, 1), scenario_.cloud_spec.vcpus);
        break;
    }
    return t;
  }

  // Spatial average Top-5 accuracy of the models chosen for one round.
  double average_accuracy(const JointAction& action) const {
    double sum = 0.0;
    for (const auto& d : action.devices) {
      check_action(d);
      sum += scenario_.model_pool[d.placement == Tier::End ? d.model : 0].top5_accuracy_pct;
    }
    return sum / static_cast<double>(action.devices.size());
  }

  double reward_of(double avg_response_ms, double avg_accuracy_pct) const {
    if (accuracy_satisfied(avg_accuracy_pct)) return -avg_response_ms;
    return -scenario_.calibration.max_response_penalty_ms;
  }

  bool accuracy_satisfied(double avg_accuracy_pct) const {
    // Tolerant strict inequality: the Max threshold equals the best pool
    // accuracy, which the all-d0 round attains exactly.
    return avg_accuracy_pct > scenario_.threshold_value() - 1e-9;
  }

  // Average response and accuracy only; the hot path for brute-force sweeps.
  std::pair<double, double> evaluate_cost(const JointAction& action) const {
    const NodeLoad load = load_of(action);
    double sum = 0.0;
    for (size_t i = 0; i < action.devices.size(); ++i)
      sum += response_time(static_cast<int>(i), action.devices[i], load);
    return {sum / static_cast<double>(action.devices.size()), average_accuracy(action)};
  }

  // Full outcome without advancing the environment.
  StepOutcome evaluate(const JointAction& action) const {
    if (action.devices.size() != static_cast<size_t>(scenario_.num_end_devices))
      throw std::invalid_argument("evaluate: joint action must cover every end-device");
    const NodeLoad load = load_of(action);
    StepOutcome out;
    out.per_device_response_ms.resize(action.devices.size());
    for (size_t i = 0; i < action.devices.size(); ++i)
      out.per_device_response_ms[i] = response_time(static_cast<int>(i), action.devices[i], load);
    out.avg_response_ms =
        std::accumulate(out.per_device_response_ms.begin(), out.per_device_response_ms.end(), 0.0) /
        static_cast<double>(action.devices.size());
    out.avg_accuracy_pct = average_accuracy(action);
    out.reward = reward_of(out.avg_response_ms, out.avg_accuracy_pct);
    out.next_state = discretize(snapshot_after(load), scenario_);
    return out;
  }

  StepOutcome step(const JointAction& action) {
    if (scenario_.link_flip_probability > 0.0) flip_links();
    StepOutcome out = evaluate(action);
    state_ = out.next_state;
    ++steps_;
    return out;
  }

  // Upper bound on the average response of any joint action, used to check
  // the penalty constant at construction.
  double worst_case_avg_response_ms() const {
    const auto& cal = scenario_.calibration;
    const int n = scenario_.num_end_devices;
    double worst_oh = 0.0, worst_hop = 0.0;
    for (int i = 0; i < n; ++i) {
      worst_oh = std::max(worst_oh, overhead_ms(scenario_.device_links[i]));
      worst_hop = std::max(worst_hop, hop_ms(scenario_.device_links[i]));
    }
    double worst = 0.0;
    for (const auto& m : scenario_.model_pool)
      worst = std::max(worst, worst_oh + cal.compute_ms[m.id][0]);
    worst = std::max(worst, worst_oh + worst_hop + hop_ms(scenario_.edge_link) +
                                cal.compute_ms[0][1] * contention_factor(n, scenario_.edge_spec.vcpus));
    worst = std::max(worst, worst_oh + worst_hop + 2.0 * hop_ms(scenario_.edge_link) +
                                cal.compute_ms[0][2] * contention_factor(n, scenario_.cloud_spec.vcpus));
    return worst;
  }

  NodeLoad load_of(const JointAction& action) const {
    NodeLoad load;
    load.end_devices.assign(action.devices.size(), 0);
    for (size_t i = 0; i < action.devices.size(); ++i) {
      switch (action.devices[i].placement) {
        case Tier::End: load.end_devices[i] = 1; break;
        case Tier::Edge: ++load.edge; break;
        case Tier::Cloud: ++load.cloud; break;
      }
    }
    return load;
  }

 private:
  double hop_ms(LinkCondition c) const {
    const auto& cal = scenario_.calibration;
    double t = cal.transmit_request_ms[c == LinkCondition::Weak ? 1 : 0];
    if (c == LinkCondition::Weak) t += cal.weak_extra_delay_ms;
    return t;
  }

  // Orchestration round trip charged to every request: service request and
  // monitoring update out of the device, decision back.
  double overhead_ms(LinkCondition c) const {
    const auto& cal = scenario_.calibration;
    const int k = c == LinkCondition::Weak ? 1 : 0;
    double t = cal.transmit_request_ms[k] + cal.broadcast_update_ms[k] + cal.decision_ms[k];
    if (c == LinkCondition::Weak) t += 2.0 * cal.weak_extra_delay_ms;
    return t;
  }

  void check_action(const DeviceAction& a) const {
    if (a.model < 0 || a.model >= static_cast<int>(scenario_.model_pool.size()))
      throw std::invalid_argument("action: model index outside the pool");
    if (a.placement != Tier::End && a.model != 0)
      throw std::invalid_argument("action: offloaded inference must use the most accurate model");
  }

  ResourceSnapshot idle_snapshot() const {
    ResourceSnapshot s;
    s.devices.resize(scenario_.num_end_devices);
    for (int i = 0; i < scenario_.num_end_devices; ++i) s.devices[i].link = device_links_[i];
    s.edge.link = edge_link_;
    s.cloud.link = LinkCondition::Regular;
    return s;
  }

  ResourceSnapshot snapshot_after(const NodeLoad& load) const {
    ResourceSnapshot s = idle_snapshot();
    const double share = scenario_.memory_share_per_request;
    for (size_t i = 0; i < load.end_devices.size(); ++i) {
      s.devices[i].cpu_utilization = load.end_devices[i] > 0 ? 1.0 : 0.0;
      s.devices[i].memory_free_fraction = std::max(0.0, 1.0 - share * load.end_devices[i]);
    }
    s.edge.cpu_utilization =
        std::min(1.0, static_cast<double>(load.edge) / scenario_.edge_spec.vcpus);
    s.edge.memory_free_fraction = std::max(0.0, 1.0 - share * load.edge);
    s.cloud.cpu_utilization =
        std::min(1.0, static_cast<double>(load.cloud) / scenario_.cloud_spec.vcpus);
    s.cloud.memory_free_fraction = std::max(0.0, 1.0 - share * load.cloud);
    return s;
  }

  void flip_links() {
    auto flip = [&](LinkCondition& c) {
      if (rng_.uniform() < scenario_.link_flip_probability)
        c = c == LinkCondition::Regular ? LinkCondition::Weak : LinkCondition::Regular;
    };
    for (auto& c : device_links_) flip(c);
    flip(edge_link_);
  }

  ScenarioConfig scenario_;
  std::vector<LinkCondition> device_links_;
  LinkCondition edge_link_;
  DiscreteState state_;
  Rng rng_;
  uint64_t steps_ = 0;
};

}  // namespace eeco
