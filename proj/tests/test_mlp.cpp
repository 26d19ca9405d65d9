#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "eeco/mlp.hpp"

using namespace eeco;

namespace {

// Straight-line recomputation of the forward pass, independent of Mlp's own
// loops; the reference for the derived forward-value checks.
double naive_forward(const Mlp& net, const std::vector<double>& x) {
  std::vector<double> h(net.hidden_dim, 0.0);
  for (int i = 0; i < net.hidden_dim; ++i) {
    double z = net.b1[i];
    for (int j = 0; j < net.input_dim; ++j) z += net.w1[i * net.input_dim + j] * x[j];
    h[i] = z > 0.0 ? z : 0.0;
  }
  double y = net.b2;
  for (int i = 0; i < net.hidden_dim; ++i) y += net.w2[i] * h[i];
  return y;
}

std::vector<double> random_input(int dim, Rng& rng) {
  std::vector<double> x(dim);
  for (auto& v : x) v = rng.uniform();
  return x;
}

// Redraw until every hidden unit is safely away from its ReLU kink, so the
// central differences see a locally smooth function.
std::vector<double> input_away_from_kinks(const Mlp& net, Rng& rng, double margin = 1e-3) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    auto x = random_input(net.input_dim, rng);
    const auto z = net.preactivations(x);
    bool ok = true;
    for (double v : z) ok = ok && std::abs(v) > margin;
    if (ok) return x;
  }
  throw std::runtime_error("could not find an input away from the kinks");
}

}  // namespace

TEST_CASE("forward: zero weights give zero output") {
  Mlp net;
  net.input_dim = 4;
  net.hidden_dim = 3;
  net.w1.assign(12, 0.0);
  net.b1.assign(3, 0.0);
  net.w2.assign(3, 0.0);
  const std::vector<double> x{1.0, -2.0, 3.0, 0.5};
  CHECK(net.forward(x) == 0.0);
}

TEST_CASE("forward: hand-computed 1x1 max-affine composition") {
  Mlp net;
  net.input_dim = 1;
  net.hidden_dim = 1;
  net.w1 = {2.0};
  net.b1 = {-1.0};
  net.w2 = {3.0};
  net.b2 = 0.25;
  // y = 3 * relu(2x - 1) + 0.25
  CHECK(net.forward(std::vector<double>{2.0}) == 3.0 * 3.0 + 0.25);
  CHECK(net.forward(std::vector<double>{0.0}) == 0.25);  // clipped branch
  CHECK_THROWS_AS(net.forward(std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("forward matches an independent recomputation on random nets") {
  Rng rng(0);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp net = Mlp::xavier(9, 16, rng);
    const auto x = random_input(9, rng);
    CHECK_THAT(net.forward(x), Catch::Matchers::WithinAbs(naive_forward(net, x), 1e-12));
  }
}

TEST_CASE("xavier init stays within the symmetric bound") {
  Rng rng(1);
  Mlp net = Mlp::xavier(45, 48, rng);
  const double bound = std::sqrt(6.0 / (45 + 48));
  for (double w : net.w1) CHECK(std::abs(w) <= bound);
  for (double b : net.b1) CHECK(b == 0.0);
}

TEST_CASE("td loss with zero discount is the mean squared reward error") {
  Rng rng(2);
  Mlp net = Mlp::xavier(6, 8, rng);
  std::vector<std::vector<double>> nexts{random_input(6, rng)};
  std::vector<TdRecord> batch;
  std::vector<double> rewards{-3.0, -1.0, -2.5};
  double expected = 0.0;
  std::vector<std::vector<double>> inputs;
  for (double r : rewards) {
    inputs.push_back(random_input(6, rng));
    batch.push_back({inputs.back(), r, nexts});
    const double err = r - net.forward(inputs.back());
    expected += err * err / rewards.size();
  }
  MlpGrads grads;
  CHECK_THAT(td_loss_and_grads(net, batch, 0.0, grads),
             Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("td target bootstraps from the best next candidate") {
  Rng rng(3);
  Mlp net = Mlp::xavier(4, 6, rng);
  std::vector<std::vector<double>> nexts{random_input(4, rng), random_input(4, rng),
                                         random_input(4, rng)};
  const std::vector<double> input = random_input(4, rng);
  const double r = -5.0, gamma = 0.4;
  std::vector<TdRecord> batch{{input, r, nexts}};
  MlpGrads grads;
  const double loss = td_loss_and_grads(net, batch, gamma, grads);
  double best = -1e300;
  for (const auto& nx : nexts) best = std::max(best, net.forward(nx));
  const double err = r + gamma * best - net.forward(input);
  CHECK_THAT(loss, Catch::Matchers::WithinAbs(err * err, 1e-12));
}

TEST_CASE("a record already at its target yields zero loss and zero gradients") {
  Rng rng(4);
  Mlp net = Mlp::xavier(5, 7, rng);
  const auto x = random_input(5, rng);
  std::vector<TdRecord> batch{{x, net.forward(x), {}}};
  MlpGrads grads;
  const double loss = td_loss_and_grads(net, batch, 0.9, grads);
  CHECK_THAT(loss, Catch::Matchers::WithinAbs(0.0, 1e-18));
  CHECK(grads.max_abs() < 1e-12);
}

TEST_CASE("sgd step") {
  Mlp net;
  net.input_dim = 1;
  net.hidden_dim = 1;
  net.w1 = {1.0};
  net.b1 = {0.0};
  net.w2 = {1.0};
  net.b2 = 0.0;
  MlpGrads g;
  g.resize_like(net);

  SECTION("zero learning rate leaves the net unchanged") {
    g.w1[0] = 2.0;
    sgd_step(net, g, 0.0);
    CHECK(net.w1[0] == 1.0);
  }
  SECTION("zero gradients leave the net unchanged") {
    sgd_step(net, g, 0.5);
    CHECK(net.w1[0] == 1.0);
    CHECK(net.w2[0] == 1.0);
  }
  SECTION("scalar arithmetic") {
    g.w1[0] = 2.0;
    sgd_step(net, g, 0.1);
    CHECK_THAT(net.w1[0], Catch::Matchers::WithinAbs(0.8, 1e-15));
  }
}

TEST_CASE("gradient check: linear region is exact to rounding") {
  Rng rng(5);
  Mlp net = Mlp::xavier(6, 10, rng);
  for (auto& b : net.b1) b = 5.0;  // push every unit deep into the linear region
  const auto x = random_input(6, rng);
  CHECK(finite_diff_check(net, x, 1.0, 1e-5) < 1e-7);
}

TEST_CASE("gradient check: random nets away from kinks") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    Mlp net = Mlp::xavier(12, 16, rng);
    const auto x = input_away_from_kinks(net, rng);
    CHECK(finite_diff_check(net, x, -2.0, 1e-5) < 1e-4);
  }
}

TEST_CASE("gradient check degrades with a coarse epsilon") {
  Rng rng(7);
  Mlp net = Mlp::xavier(8, 12, rng);
  const auto x = input_away_from_kinks(net, rng);
  const double fine = finite_diff_check(net, x, 0.5, 1e-5);
  const double coarse = finite_diff_check(net, x, 0.5, 1e-1);
  CHECK(fine < 1e-4);
  // truncation error grows with epsilon; the comparison documents the trend
  CHECK(coarse >= fine);
}

TEST_CASE("full-batch descent on a fixed regression set decreases the loss") {
  Rng rng(8);
  Mlp net = Mlp::xavier(4, 16, rng);
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
  for (int i = 0; i < 32; ++i) {
    inputs.push_back(random_input(4, rng));
    targets.push_back(2.0 * inputs.back()[0] - inputs.back()[2] + 0.5);
  }
  double prev = 1e300;
  for (int step = 0; step < 100; ++step) {
    MlpGrads grads;
    const double loss = mse_loss_and_grads(net, inputs, targets, grads);
    CHECK(loss <= prev + 1e-12);
    prev = loss;
    sgd_step(net, grads, 1e-3);
  }
}

TEST_CASE("weights serialize to a flat file and back") {
  Rng rng(9);
  Mlp net = Mlp::xavier(7, 5, rng);
  const auto path = std::filesystem::temp_directory_path() / "eeco_mlp_roundtrip.bin";
  net.save(path.string());
  const Mlp back = Mlp::load(path.string());
  CHECK(back.input_dim == net.input_dim);
  CHECK(back.hidden_dim == net.hidden_dim);
  CHECK(back.w1 == net.w1);
  CHECK(back.b1 == net.b1);
  CHECK(back.w2 == net.w2);
  CHECK(back.b2 == net.b2);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(Mlp::load("/nonexistent/net.bin"), std::runtime_error);
}
