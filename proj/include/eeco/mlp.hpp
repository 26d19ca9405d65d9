#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "eeco/rng.hpp"

namespace eeco {

// Fully connected net with one ReLU hidden layer and a scalar linear output:
// the Q-value head. Weights are public; the training code and the agents
// operate on them directly.
struct Mlp {
  int input_dim = 0;
  int hidden_dim = 0;
  std::vector<double> w1;  // hidden_dim x input_dim, row-major
  std::vector<double> b1;  // hidden_dim
  std::vector<double> w2;  // hidden_dim
  double b2 = 0.0;

  static Mlp xavier(int input_dim, int hidden_dim, Rng& rng) {
    Mlp net;
    net.input_dim = input_dim;
    net.hidden_dim = hidden_dim;
    net.w1.resize(static_cast<size_t>(hidden_dim) * input_dim);
    net.b1.assign(hidden_dim, 0.0);
    net.w2.resize(hidden_dim);
    auto uniform_pm = [&](double bound) { return (2.0 * rng.uniform() - 1.0) * bound; };
    const double bound1 = std::sqrt(6.0 / (input_dim + hidden_dim));
    for (auto& w : net.w1) w = uniform_pm(bound1);
    const double bound2 = std::sqrt(6.0 / (hidden_dim + 1));
    for (auto& w : net.w2) w = uniform_pm(bound2);
    return net;
  }

  size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + 1; }

  double forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim)
      throw std::invalid_argument("Mlp::forward: input dimension mismatch");
    double out = b2;
    for (int h = 0; h < hidden_dim; ++h) {
      const double* row = w1.data() + static_cast<size_t>(h) * input_dim;
      double z = b1[h];
      for (int j = 0; j < input_dim; ++j) z += row[j] * x[j];
      if (z > 0.0) out += w2[h] * z;
    }
    return out;
  }

  // Hidden pre-activations, exposed for tests that need to stay clear of the
  // ReLU kinks.
  std::vector<double> preactivations(std::span<const double> x) const {
    std::vector<double> z(hidden_dim);
    for (int h = 0; h < hidden_dim; ++h) {
      const double* row = w1.data() + static_cast<size_t>(h) * input_dim;
      double v = b1[h];
      for (int j = 0; j < input_dim; ++j) v += row[j] * x[j];
      z[h] = v;
    }
    return z;
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("Mlp::save: cannot open " + path);
    f.write("EECONN1\n", 8);
    auto put_i = [&](int64_t v) { f.write(reinterpret_cast<const char*>(&v), sizeof v); };
    auto put_d = [&](const double* p, size_t n) {
      f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    };
    put_i(input_dim);
    put_i(hidden_dim);
    put_d(w1.data(), w1.size());
    put_d(b1.data(), b1.size());
    put_d(w2.data(), w2.size());
    put_d(&b2, 1);
    if (!f) throw std::runtime_error("Mlp::save: write failed for " + path);
  }

  static Mlp load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("Mlp::load: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::string(magic, 8) != "EECONN1\n")
      throw std::runtime_error("Mlp::load: not a network file: " + path);
    auto get_i = [&]() { int64_t v; f.read(reinterpret_cast<char*>(&v), sizeof v); return v; };
    Mlp net;
    net.input_dim = static_cast<int>(get_i());
    net.hidden_dim = static_cast<int>(get_i());
    if (net.input_dim <= 0 || net.hidden_dim <= 0)
      throw std::runtime_error("Mlp::load: corrupt dimensions in " + path);
    net.w1.resize(static_cast<size_t>(net.input_dim) * net.hidden_dim);
    net.b1.resize(net.hidden_dim);
    net.w2.resize(net.hidden_dim);
    auto get_d = [&](double* p, size_t n) {
      f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    };
    get_d(net.w1.data(), net.w1.size());
    get_d(net.b1.data(), net.b1.size());
    get_d(net.w2.data(), net.w2.size());
    get_d(&net.b2, 1);
    if (!f) throw std::runtime_error("Mlp::load: truncated file: " + path);
    return net;
  }
};

struct MlpGrads {
  std::vector<double> w1, b1, w2;
  double b2 = 0.0;

  void resize_like(const Mlp& net) {
    w1.assign(net.w1.size(), 0.0);
    b1.assign(net.b1.size(), 0.0);
    w2.assign(net.w2.size(), 0.0);
    b2 = 0.0;
  }

  double max_abs() const {
    double m = std::abs(b2);
    for (double v : w1) m = std::max(m, std::abs(v));
    for (double v : b1) m = std::max(m, std::abs(v));
    for (double v : w2) m = std::max(m, std::abs(v));
    return m;
  }
};

// Mean squared error over a batch with fixed targets; gradients accumulate
// into `grads` (zeroed here). Returns the loss.
inline double mse_loss_and_grads(const Mlp& net, std::span<const std::vector<double>> inputs,
                                 std::span<const double> targets, MlpGrads& grads) {
  if (inputs.empty() || inputs.size() != targets.size())
    throw std::invalid_argument("mse_loss_and_grads: batch shape mismatch");
  grads.resize_like(net);
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0.0;
  std::vector<double> z(net.hidden_dim);
  for (size_t k = 0; k < inputs.size(); ++k) {
    const auto& x = inputs[k];
    if (static_cast<int>(x.size()) != net.input_dim)
      throw std::invalid_argument("mse_loss_and_grads: input dimension mismatch");
    double q = net.b2;
    for (int h = 0; h < net.hidden_dim; ++h) {
      const double* row = net.w1.data() + static_cast<size_t>(h) * net.input_dim;
      double v = net.b1[h];
      for (int j = 0; j < net.input_dim; ++j) v += row[j] * x[j];
      z[h] = v;
      if (v > 0.0) q += net.w2[h] * v;
    }
    const double err = q - targets[k];
    loss += err * err * inv_n;
    const double dq = 2.0 * err * inv_n;
    grads.b2 += dq;
    for (int h = 0; h < net.hidden_dim; ++h) {
      if (z[h] > 0.0) {
        grads.w2[h] += dq * z[h];
        const double dh = dq * net.w2[h];
        grads.b1[h] += dh;
        double* grow = grads.w1.data() + static_cast<size_t>(h) * net.input_dim;
        for (int j = 0; j < net.input_dim; ++j) grow[j] += dh * x[j];
      }
    }
  }
  return loss;
}

// One temporal-difference record: an encoded state-action input, the observed
// reward, and the encoded candidates for the next step's greedy value.
struct TdRecord {
  std::vector<double> input;
  double reward = 0.0;
  std::span<const std::vector<double>> next_inputs;
};

// TD loss over a batch: target_k = r_k + gamma * max over next candidates of
// the current net's value. Targets are constants; no gradient flows through
// the bootstrap. Returns the mean squared TD error.
inline double td_loss_and_grads(const Mlp& net, std::span<const TdRecord> batch, double gamma,
                                MlpGrads& grads) {
  if (batch.empty()) throw std::invalid_argument("td_loss_and_grads: empty batch");
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  inputs.reserve(batch.size());
  targets.reserve(batch.size());
  for (const auto& rec : batch) {
    double target = rec.reward;
    if (gamma != 0.0 && !rec.next_inputs.empty()) {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& nx : rec.next_inputs) best = std::max(best, net.forward(nx));
      target += gamma * best;
    }
    inputs.push_back(rec.input);
    targets.push_back(target);
  }
  return mse_loss_and_grads(net, inputs, targets, grads);
}

inline void sgd_step(Mlp& net, const MlpGrads& grads, double lr) {
  if (grads.w1.size() != net.w1.size() || grads.w2.size() != net.w2.size())
    throw std::invalid_argument("sgd_step: gradient shape mismatch");
  for (size_t i = 0; i < net.w1.size(); ++i) net.w1[i] -= lr * grads.w1[i];
  for (size_t i = 0; i < net.b1.size(); ++i) net.b1[i] -= lr * grads.b1[i];
  for (size_t i = 0; i < net.w2.size(); ++i) net.w2[i] -= lr * grads.w2[i];
  net.b2 -= lr * grads.b2;
}

// Checks the analytic gradient of the squared error (forward(x) - target)^2
// against central finite differences. Returns the worst relative error over
// all parameters. Meaningful away from ReLU kinks; epsilon around 1e-5 keeps
// truncation and roundoff both small for these magnitudes.
inline double finite_diff_check(const Mlp& net, std::span<const double> x, double target,
                                double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("finite_diff_check: epsilon must be positive");
  MlpGrads grads;
  {
    std::vector<std::vector<double>> in{std::vector<double>(x.begin(), x.end())};
    std::vector<double> tg{target};
    mse_loss_and_grads(net, in, tg, grads);
  }
  Mlp probe = net;
  auto loss_at = [&]() {
    const double err = probe.forward(x) - target;
    return err * err;
  };
  double worst = 0.0;
  auto check_param = [&](double& slot, double analytic) {
    const double saved = slot;
    slot = saved + epsilon;
    const double up = loss_at();
    slot = saved - epsilon;
    const double down = loss_at();
    slot = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-10});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  for (size_t i = 0; i < probe.w1.size(); ++i) check_param(probe.w1[i], grads.w1[i]);
  for (size_t i = 0; i < probe.b1.size(); ++i) check_param(probe.b1[i], grads.b1[i]);
  for (size_t i = 0; i < probe.w2.size(); ++i) check_param(probe.w2[i], grads.w2[i]);
  check_param(probe.b2, grads.b2);
  return worst;
}

}  // namespace eeco
