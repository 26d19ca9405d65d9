#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "eeco/domain.hpp"

namespace eeco {

using nlohmann::json;

inline LinkCondition link_from_string(const std::string& s) {
  if (s == "regular") return LinkCondition::Regular;
  if (s == "weak") return LinkCondition::Weak;
  throw std::invalid_argument("unknown link condition: " + s);
}

inline json to_json(const CalibrationTable& t) {
  json j;
  json rows = json::array();
  for (const auto& r : t.compute_ms) rows.push_back({r[0], r[1], r[2]});
  j["compute_ms"] = rows;
  j["compute_ms_tiers"] = {"end", "edge", "cloud"};
  j["transmit_request_ms"] = {t.transmit_request_ms[0], t.transmit_request_ms[1]};
  j["broadcast_update_ms"] = {t.broadcast_update_ms[0], t.broadcast_update_ms[1]};
  j["decision_ms"] = {t.decision_ms[0], t.decision_ms[1]};
  j["condition_order"] = {"regular", "weak"};
  j["weak_extra_delay_ms"] = t.weak_extra_delay_ms;
  j["max_response_penalty_ms"] = t.max_response_penalty_ms;
  return j;
}

inline CalibrationTable calibration_from_json(const json& j) {
  CalibrationTable t;
  t.compute_ms.clear();
  for (const auto& row : j.at("compute_ms"))
    t.compute_ms.push_back({row.at(0).get<double>(), row.at(1).get<double>(), row.at(2).get<double>()});
  auto pair = [&](const char* key, std::array<double, 2>& dst) {
    dst = {j.at(key).at(0).get<double>(), j.at(key).at(1).get<double>()};
  };
  pair("transmit_request_ms", t.transmit_request_ms);
  pair("broadcast_update_ms", t.broadcast_update_ms);
  pair("decision_ms", t.decision_ms);
  t.weak_extra_delay_ms = j.at("weak_extra_delay_ms").get<double>();
  t.max_response_penalty_ms = j.at("max_response_penalty_ms").get<double>();
  return t;
}

inline CalibrationTable load_calibration(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open calibration file: " + path);
  json j;
  f >> j;
  return calibration_from_json(j);
}

inline void save_calibration(const CalibrationTable& t, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write calibration file: " + path);
  f << to_json(t).dump(2) << '\n';
}

inline json to_json(const ScenarioConfig& sc) {
  json j;
  j["name"] = sc.name;
  j["users"] = sc.num_end_devices;
  json links = json::array();
  for (auto c : sc.device_links) links.push_back(to_string(c));
  j["device_links"] = links;
  j["edge_link"] = to_string(sc.edge_link);
  j["accuracy_threshold"] = to_string(sc.accuracy_threshold);
  j["rng_seed"] = sc.rng_seed;
  auto dev = [](const DeviceSpec& d) {
    return json{{"vcpus", d.vcpus}, {"memory_gib", d.memory_gib}, {"frequency_ghz", d.frequency_ghz}};
  };
  j["devices"] = {{"end", dev(sc.end_spec)}, {"edge", dev(sc.edge_spec)}, {"cloud", dev(sc.cloud_spec)}};
  json pool = json::array();
  for (const auto& m : sc.model_pool)
    pool.push_back({{"id", m.id},
                    {"macs_millions", m.macs_millions},
                    {"format", m.format == NumericFormat::Int8 ? "int8" : "fp32"},
                    {"top1_accuracy_pct", m.top1_accuracy_pct},
                    {"top5_accuracy_pct", m.top5_accuracy_pct}});
  j["model_pool"] = pool;
  j["calibration"] = "default";
  j["busy_cpu_cutoff"] = sc.busy_cpu_cutoff;
  j["busy_memory_cutoff"] = sc.busy_memory_cutoff;
  j["memory_share_per_request"] = sc.memory_share_per_request;
  j["link_flip_probability"] = sc.link_flip_probability;
  return j;
}

// `base_dir` resolves a relative calibration path inside the scenario file.
inline ScenarioConfig scenario_from_json(const json& j, const std::filesystem::path& base_dir = {}) {
  ScenarioConfig sc;
  sc.name = j.value("name", std::string("custom"));
  sc.num_end_devices = j.at("users").get<int>();
  sc.device_links.clear();
  for (const auto& s : j.at("device_links")) sc.device_links.push_back(link_from_string(s));
  sc.edge_link = link_from_string(j.at("edge_link"));
  sc.accuracy_threshold = threshold_from_string(j.value("accuracy_threshold", std::string("max")));
  sc.rng_seed = j.value("rng_seed", 1ULL);
  if (j.contains("devices")) {
    auto dev = [&](const char* key, DeviceSpec base) {
      if (!j["devices"].contains(key)) return base;
      const auto& d = j["devices"][key];
      base.vcpus = d.value("vcpus", base.vcpus);
      base.memory_gib = d.value("memory_gib", base.memory_gib);
      base.frequency_ghz = d.value("frequency_ghz", base.frequency_ghz);
      return base;
    };
    sc.end_spec = dev("end", sc.end_spec);
    sc.edge_spec = dev("edge", sc.edge_spec);
    sc.cloud_spec = dev("cloud", sc.cloud_spec);
  }
  if (j.contains("model_pool")) {
    sc.model_pool.clear();
    for (const auto& m : j["model_pool"]) {
      ModelSpec ms;
      ms.id = m.at("id").get<int>();
      ms.macs_millions = m.at("macs_millions").get<double>();
      ms.format = m.at("format").get<std::string>() == "int8" ? NumericFormat::Int8 : NumericFormat::Fp32;
      ms.top1_accuracy_pct = m.at("top1_accuracy_pct").get<double>();
      ms.top5_accuracy_pct = m.at("top5_accuracy_pct").get<double>();
      sc.model_pool.push_back(ms);
    }
  }
  if (j.contains("calibration")) {
    const auto& c = j["calibration"];
    if (c.is_string()) {
      const std::string ref = c.get<std::string>();
      if (ref != "default")
        sc.calibration = load_calibration((base_dir / ref).string());
    } else {
      sc.calibration = calibration_from_json(c);
    }
  }
  sc.busy_cpu_cutoff = j.value("busy_cpu_cutoff", sc.busy_cpu_cutoff);
  sc.busy_memory_cutoff = j.value("busy_memory_cutoff", sc.busy_memory_cutoff);
  sc.memory_share_per_request = j.value("memory_share_per_request", sc.memory_share_per_request);
  sc.link_flip_probability = j.value("link_flip_probability", sc.link_flip_probability);
  sc.validate();
  return sc;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file: " + path);
  json j;
  f >> j;
  return scenario_from_json(j, std::filesystem::path(path).parent_path());
}

inline void save_scenario(const ScenarioConfig& sc, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write scenario file: " + path);
  f << to_json(sc).dump(2) << '\n';
}

// Resolves a scenario given either a Table-5 name (exp_a..exp_d) or a path.
inline ScenarioConfig resolve_scenario(const std::string& ref, int users, ThresholdKind threshold,
                                       uint64_t seed) {
  if (ref == "exp_a" || ref == "exp_b" || ref == "exp_c" || ref == "exp_d")
    return make_scenario(ref, users, threshold, seed);
  ScenarioConfig sc = load_scenario(ref);
  if (users > 0 && users != sc.num_end_devices) {
    if (users > static_cast<int>(sc.device_links.size()))
      throw std::invalid_argument("scenario file lists too few device links for --users");
    sc.num_end_devices = users;
    sc.device_links.resize(users);
  }
  sc.accuracy_threshold = threshold;
  sc.rng_seed = seed;
  sc.validate();
  return sc;
}

}  // namespace eeco
