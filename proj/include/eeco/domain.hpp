#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "eeco/calibration.hpp"

namespace eeco {

enum class Tier { End, Edge, Cloud };
enum class LinkCondition { Regular, Weak };
enum class NumericFormat { Fp32, Int8 };

inline const char* to_string(Tier t) {
  switch (t) {
    case Tier::End: return "end";
    case Tier::Edge: return "edge";
    case Tier::Cloud: return "cloud";
  }
  return "?";
}

inline const char* to_string(LinkCondition c) {
  return c == LinkCondition::Regular ? "regular" : "weak";
}

// One deployable DL model variant. `id` is the index into the pool (d0..d7
// for the default MobileNetV1 pool).
struct ModelSpec {
  int id = 0;
  double macs_millions = 0.0;
  NumericFormat format = NumericFormat::Fp32;
  double top1_accuracy_pct = 0.0;
  double top5_accuracy_pct = 0.0;
};

// MobileNetV1 width/format variants with their published accuracies.
inline std::vector<ModelSpec> default_model_pool() {
  using NF = NumericFormat;
  return {
      {0, 569, NF::Fp32, 70.9, 89.9},  // 1.0-224
      {1, 317, NF::Fp32, 68.4, 88.2},  // 0.75-224
      {2, 150, NF::Fp32, 63.3, 84.9},  // 0.5-224
      {3, 41, NF::Fp32, 49.8, 74.2},   // 0.25-224
      {4, 569, NF::Int8, 70.1, 88.9},
      {5, 317, NF::Int8, 66.8, 87.0},
      {6, 150, NF::Int8, 60.7, 83.2},
      {7, 41, NF::Int8, 48.0, 72.8},
  };
}

struct DeviceSpec {
  Tier tier = Tier::End;
  int vcpus = 1;
  double memory_gib = 2.0;
  double frequency_ghz = 2.3;
};

inline DeviceSpec default_device_spec(Tier tier) {
  switch (tier) {
    case Tier::End: return {Tier::End, 1, 2.0, 2.3};
    case Tier::Edge: return {Tier::Edge, 2, 4.0, 2.3};
    case Tier::Cloud: return {Tier::Cloud, 4, 8.0, 2.3};
  }
  throw std::logic_error("unreachable");
}

enum class ThresholdKind { Min, P80, P85, P89, Max };

inline const char* to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::Min: return "min";
    case ThresholdKind::P80: return "80";
    case ThresholdKind::P85: return "85";
    case ThresholdKind::P89: return "89";
    case ThresholdKind::Max: return "max";
  }
  return "?";
}

inline ThresholdKind threshold_from_string(const std::string& s) {
  if (s == "min") return ThresholdKind::Min;
  if (s == "80") return ThresholdKind::P80;
  if (s == "85") return ThresholdKind::P85;
  if (s == "89") return ThresholdKind::P89;
  if (s == "max") return ThresholdKind::Max;
  throw std::invalid_argument("unknown accuracy threshold: " + s);
}

// Scenario: the static world an environment runs in. All fields have
// table-default values; link conditions come from the experiment files.
struct ScenarioConfig {
  std::string name = "custom";
  int num_end_devices = 5;
  DeviceSpec end_spec = default_device_spec(Tier::End);
  DeviceSpec edge_spec = default_device_spec(Tier::Edge);
  DeviceSpec cloud_spec = default_device_spec(Tier::Cloud);
  std::vector<LinkCondition> device_links;  // one per end-device
  LinkCondition edge_link = LinkCondition::Regular;
  std::vector<ModelSpec> model_pool = default_model_pool();
  ThresholdKind accuracy_threshold = ThresholdKind::Max;
  CalibrationTable calibration = default_calibration();
  uint64_t rng_seed = 1;

  // Discretization cutoffs. The binary busy/available split is a modelling
  // choice, so it stays configurable.
  double busy_cpu_cutoff = 0.5;
  double busy_memory_cutoff = 0.5;
  // Fraction of a node's memory held by one active inference.
  double memory_share_per_request = 0.2;
  // Probability that a link flips condition on a step (exploration stress
  // tests only; the shipped experiments are static).
  double link_flip_probability = 0.0;

  double threshold_value() const {
    switch (accuracy_threshold) {
      case ThresholdKind::Min: return 0.0;
      case ThresholdKind::P80: return 80.0;
      case ThresholdKind::P85: return 85.0;
      case ThresholdKind::P89: return 89.0;
      case ThresholdKind::Max: {
        double best = 0.0;
        for (const auto& m : model_pool) best = std::max(best, m.top5_accuracy_pct);
        return best;
      }
    }
    throw std::logic_error("unreachable");
  }

  const DeviceSpec& spec_for(Tier t) const {
    switch (t) {
      case Tier::End: return end_spec;
      case Tier::Edge: return edge_spec;
      case Tier::Cloud: return cloud_spec;
    }
    throw std::logic_error("unreachable");
  }

  void validate() const {
    if (num_end_devices < 1) throw std::invalid_argument("scenario: need at least one end-device");
    if (device_links.size() != static_cast<size_t>(num_end_devices))
      throw std::invalid_argument("scenario: device_links must list one condition per end-device");
    if (model_pool.empty()) throw std::invalid_argument("scenario: model pool is empty");
    for (size_t i = 0; i < model_pool.size(); ++i) {
      const auto& m = model_pool[i];
      if (m.id != static_cast<int>(i)) throw std::invalid_argument("scenario: pool ids must be 0..l-1 in order");
      if (m.top5_accuracy_pct <= 0.0 || m.top5_accuracy_pct > 100.0)
        throw std::invalid_argument("scenario: top5 accuracy out of range");
      if (m.top1_accuracy_pct > m.top5_accuracy_pct)
        throw std::invalid_argument("scenario: top1 accuracy above top5");
    }
    if (end_spec.vcpus < 1 || edge_spec.vcpus < 1 || cloud_spec.vcpus < 1)
      throw std::invalid_argument("scenario: vcpus must be >= 1");
    calibration.validate(model_pool.size());
  }
};

// Table-5 link patterns. Index 0..4 = S1..S5, last = edge.
inline void apply_link_pattern(ScenarioConfig& sc, const std::string& name) {
  using LC = LinkCondition;
  const LC R = LC::Regular, W = LC::Weak;
  std::array<LC, 6> pat{};
  std::string key = name;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  if (key == "exp_a") pat = {R, R, R, R, R, R};
  else if (key == "exp_b") pat = {R, W, R, W, R, W};
  else if (key == "exp_c") pat = {W, W, W, R, R, R};
  else if (key == "exp_d") pat = {W, W, W, W, W, W};
  else throw std::invalid_argument("unknown scenario name: " + name);
  if (sc.num_end_devices > 5)
    throw std::invalid_argument("link pattern " + name + " covers at most 5 end-devices");
  sc.name = key;
  sc.device_links.assign(pat.begin(), pat.begin() + sc.num_end_devices);
  sc.edge_link = pat[5];
}

inline ScenarioConfig make_scenario(const std::string& name, int users = 5,
                                    ThresholdKind threshold = ThresholdKind::Max,
                                    uint64_t seed = 1) {
  ScenarioConfig sc;
  sc.num_end_devices = users;
  sc.accuracy_threshold = threshold;
  sc.rng_seed = seed;
  apply_link_pattern(sc, name);
  sc.validate();
  return sc;
}

// Raw (continuous) view of the world used as discretization input.
struct ResourceSnapshot {
  struct Node {
    double cpu_utilization = 0.0;     // [0, 1]
    double memory_free_fraction = 1.0;  // [0, 1]
    LinkCondition link = LinkCondition::Regular;
  };
  std::vector<Node> devices;
  Node edge;
  Node cloud;
};

// Discretized state vector, ordered edge, cloud, then end-devices, three
// components (P, M, B) per node. Edge/cloud P uses nine levels (0..8); every
// other component is binary.
struct DiscreteState {
  std::vector<uint8_t> levels;

  bool operator==(const DiscreteState& o) const { return levels == o.levels; }

  int num_devices() const { return static_cast<int>(levels.size()) / 3 - 2; }

  // Mixed-radix packing. Fits comfortably in 64 bits for the supported
  // device counts; the guard keeps an oversized scenario from silently
  // aliasing states.
  uint64_t key() const {
    uint64_t k = 0;
    for (size_t i = 0; i < levels.size(); ++i) {
      const uint64_t radix = (i == 0 || i == 3) ? 9 : 2;  // edge P, cloud P
      if (k > (~0ULL - levels[i]) / radix)
        throw std::overflow_error("DiscreteState::key: too many devices to pack");
      k = k * radix + levels[i];
    }
    return k;
  }

  std::string to_string() const {
    std::string s;
    for (size_t i = 0; i < levels.size(); ++i) {
      if (i) s += '|';
      s += std::to_string(int(levels[i]));
    }
    return s;
  }
};

inline DiscreteState discretize(const ResourceSnapshot& snap, const ScenarioConfig& sc) {
  if (snap.devices.size() != static_cast<size_t>(sc.num_end_devices))
    throw std::invalid_argument("discretize: snapshot does not cover all end-devices");
  DiscreteState st;
  st.levels.reserve(3 * (snap.devices.size() + 2));
  auto nine_level = [](double util) {
    int lvl = static_cast<int>(std::floor(9.0 * util));
    return static_cast<uint8_t>(std::clamp(lvl, 0, 8));
  };
  auto busy = [](double v, double cutoff, bool below) {
    return static_cast<uint8_t>(below ? (v < cutoff) : (v > cutoff));
  };
  auto push_node = [&](const ResourceSnapshot::Node& n, bool nine) {
    st.levels.push_back(nine ? nine_level(n.cpu_utilization)
                             : busy(n.cpu_utilization, sc.busy_cpu_cutoff, false));
    st.levels.push_back(busy(n.memory_free_fraction, sc.busy_memory_cutoff, true));
    st.levels.push_back(static_cast<uint8_t>(n.link == LinkCondition::Weak));
  };
  push_node(snap.edge, true);
  push_node(snap.cloud, true);
  for (const auto& d : snap.devices) push_node(d, false);
  return st;
}

// One per-device decision: where to run and which model. Offloaded inference
// always uses the most accurate model (d0).
struct DeviceAction {
  Tier placement = Tier::End;
  int model = 0;

  bool operator==(const DeviceAction& o) const {
    return placement == o.placement && model == o.model;
  }
};

struct JointAction {
  std::vector<DeviceAction> devices;

  bool operator==(const JointAction& o) const { return devices == o.devices; }

  std::string to_string() const {
    std::string s;
    for (size_t i = 0; i < devices.size(); ++i) {
      if (i) s += ' ';
      s += "d" + std::to_string(devices[i].model) + ",";
      s += devices[i].placement == Tier::End ? 'L' : devices[i].placement == Tier::Edge ? 'E' : 'C';
    }
    return s;
  }
};

// Canonical per-device action list: Local d0..d(l-1), then Edge d0, Cloud d0.
// The order is fixed so argmax tie-breaking is reproducible.
inline std::vector<DeviceAction> enumerate_actions(const ScenarioConfig& sc) {
  if (sc.model_pool.empty()) throw std::invalid_argument("enumerate_actions: empty model pool");
  std::vector<DeviceAction> out;
  out.reserve(sc.model_pool.size() + 2);
  for (const auto& m : sc.model_pool) out.push_back({Tier::End, m.id});
  out.push_back({Tier::Edge, 0});
  out.push_back({Tier::Cloud, 0});
  return out;
}

// A fixed per-device action list plus mixed-radix joint indexing. The full
// space has l+2 per-device actions; the offload-only space (the baseline
// agent's) restricts to Local/Edge/Cloud with d0.
class ActionSpace {
 public:
  static ActionSpace full(const ScenarioConfig& sc) {
    return ActionSpace(enumerate_actions(sc), sc.num_end_devices);
  }

  static ActionSpace offload_only(const ScenarioConfig& sc) {
    std::vector<DeviceAction> acts{{Tier::End, 0}, {Tier::Edge, 0}, {Tier::Cloud, 0}};
    return ActionSpace(std::move(acts), sc.num_end_devices);
  }

  ActionSpace(std::vector<DeviceAction> device_actions, int num_devices)
      : device_actions_(std::move(device_actions)), num_devices_(num_devices) {
    if (device_actions_.empty()) throw std::invalid_argument("ActionSpace: empty action list");
    joint_count_ = 1;
    for (int i = 0; i < num_devices_; ++i) {
      if (__builtin_mul_overflow(joint_count_, device_actions_.size(), &joint_count_))
        throw std::overflow_error("ActionSpace: joint space exceeds 64 bits");
    }
  }

  const std::vector<DeviceAction>& device_actions() const { return device_actions_; }
  size_t per_device_count() const { return device_actions_.size(); }
  int num_devices() const { return num_devices_; }
  uint64_t joint_count() const { return joint_count_; }

  // Device 0 is the most significant digit, so lexicographic order over
  // (device0, device1, ...) matches numeric order over indices.
  JointAction decode(uint64_t index) const {
    if (index >= joint_count_) throw std::out_of_range("ActionSpace::decode: index out of range");
    JointAction a;
    a.devices.resize(num_devices_);
    const uint64_t k = device_actions_.size();
    for (int i = num_devices_ - 1; i >= 0; --i) {
      a.devices[i] = device_actions_[index % k];
      index /= k;
    }
    return a;
  }

  uint64_t encode(const JointAction& a) const {
    if (a.devices.size() != static_cast<size_t>(num_devices_))
      throw std::invalid_argument("ActionSpace::encode: wrong device count");
    const uint64_t k = device_actions_.size();
    uint64_t idx = 0;
    for (const auto& d : a.devices) {
      size_t j = 0;
      while (j < device_actions_.size() && !(device_actions_[j] == d)) ++j;
      if (j == device_actions_.size())
        throw std::invalid_argument("ActionSpace::encode: action not in space");
      idx = idx * k + j;
    }
    return idx;
  }

 private:
  std::vector<DeviceAction> device_actions_;
  int num_devices_;
  uint64_t joint_count_;
};

// Brute-force State x Action complexity: end-devices contribute 2*2*2 levels
// each, edge and cloud 9*2*2 each, and the action space (l+2)^N.
inline uint64_t state_action_space_size(const ScenarioConfig& sc, uint64_t actions_per_device = 0) {
  if (actions_per_device == 0) actions_per_device = sc.model_pool.size() + 2;
  uint64_t total = 1;
  auto mul = [&](uint64_t f) {
    if (__builtin_mul_overflow(total, f, &total))
      throw std::overflow_error("state_action_space_size: exceeds 64 bits");
  };
  for (int i = 0; i < sc.num_end_devices; ++i) mul(2 * 2 * 2);
  mul(9 * 2 * 2);
  mul(9 * 2 * 2);
  for (int i = 0; i < sc.num_end_devices; ++i) mul(actions_per_device);
  return total;
}

}  // namespace eeco
