#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace eeco {

// Latency parameters that make the response-time model numeric. The shipped
// table is produced by the `calibrate` least-squares fit against the
// aggregate averages measured on the reference AWS deployment; see
// data/calibration/targets.json for the inputs.
struct CalibrationTable {
  // compute_ms[model][tier], tier order End, Edge, Cloud.
  std::vector<std::array<double, 3>> compute_ms;
  // Indexed by link condition: [0] regular, [1] weak.
  std::array<double, 2> transmit_request_ms{0.0, 0.0};
  std::array<double, 2> broadcast_update_ms{0.0, 0.0};
  std::array<double, 2> decision_ms{0.0, 0.0};
  // Extra delay charged per outgoing packet on a weak link.
  double weak_extra_delay_ms = 20.0;
  // Reward assigned when the accuracy constraint is violated; must dominate
  // every achievable average response time.
  double max_response_penalty_ms = 1500.0;

  void validate(size_t pool_size) const {
    if (compute_ms.size() != pool_size)
      throw std::invalid_argument("calibration: compute_ms must cover the model pool");
    for (size_t m = 0; m < compute_ms.size(); ++m) {
      const auto& row = compute_ms[m];
      if (row[0] <= 0 || row[1] <= 0 || row[2] <= 0)
        throw std::invalid_argument("calibration: compute times must be positive");
      if (!(row[0] > row[1] && row[1] > row[2]))
        throw std::invalid_argument(
            "calibration: compute time must strictly decrease end > edge > cloud");
    }
    if (!(transmit_request_ms[1] > transmit_request_ms[0]))
      throw std::invalid_argument("calibration: weak transmit time must exceed regular");
    for (double v : {transmit_request_ms[0], broadcast_update_ms[0], broadcast_update_ms[1],
                     decision_ms[0], decision_ms[1], weak_extra_delay_ms})
      if (v < 0) throw std::invalid_argument("calibration: negative latency constant");
    if (max_response_penalty_ms <= 0)
      throw std::invalid_argument("calibration: penalty must be positive");
  }
};

// Fitted against the Exp-A..Exp-D aggregates; regenerate with
// `eeco calibrate` after changing the latency model or the targets.
inline CalibrationTable default_calibration() {
  CalibrationTable t;
  const double end_ms[8] = {425.34274034876563, 160.17373539526176, 104.78318734998221,
                            79.29135355012028,  215.56428344054137, 165.96114994235802,
                            93.63647843817348,  53.571661965051824};
  const double edge_d0 = 353.00303552367916;
  const double cloud_d0 = 296.0347774477193;
  t.compute_ms.resize(8);
  for (int m = 0; m < 8; ++m) {
    const double edge_ratio = edge_d0 / end_ms[0];
    const double cloud_ratio = cloud_d0 / end_ms[0];
    t.compute_ms[m] = {end_ms[m], end_ms[m] * edge_ratio, end_ms[m] * cloud_ratio};
  }
  t.transmit_request_ms = {22.460275847553568, 28.8498410018572};
  t.broadcast_update_ms = {0.4, 2.0};
  t.decision_ms = {1.0, 2.0};
  t.weak_extra_delay_ms = 20.0;
  t.max_response_penalty_ms = 1500.0;
  return t;
}

}  // namespace eeco
