#include <doctest.h>

#include <cmath>
#include <cstring>
#include <nlohmann/json.hpp>

#include "huca/checkpoint.hpp"
#include "huca/errors.hpp"
#include "huca/netcore.hpp"

using namespace huca;
using net::Activation;
using net::LayerSpec;

namespace {

// Independent oracle: central finite differences of the scalar map
// params -> upstream . forward(input). Built before the backward path it
// checks and kept free of any reverse-mode code.
Eigen::VectorXd fd_param_gradient(net::Mlp net, const Eigen::VectorXd& input,
                                  const Eigen::VectorXd& upstream,
                                  double h = 1e-5) {
  Eigen::VectorXd grad(net.params.size());
  for (Eigen::Index i = 0; i < net.params.size(); ++i) {
    const double saved = net.params[i];
    net.params[i] = saved + h;
    const double up = upstream.dot(net::forward(net, input));
    net.params[i] = saved - h;
    const double down = upstream.dot(net::forward(net, input));
    net.params[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Eigen::VectorXd fd_input_gradient(const net::Mlp& net, Eigen::VectorXd input,
                                  const Eigen::VectorXd& upstream,
                                  double h = 1e-5) {
  Eigen::VectorXd grad(input.size());
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    const double saved = input[i];
    input[i] = saved + h;
    const double up = upstream.dot(net::forward(net, input));
    input[i] = saved - h;
    const double down = upstream.dot(net::forward(net, input));
    input[i] = saved;
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

bool close_to_fd(const Eigen::VectorXd& analytic, const Eigen::VectorXd& fd) {
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double diff = std::abs(analytic[i] - fd[i]);
    if (diff > std::max(1e-6, 1e-4 * std::abs(fd[i]))) return false;
  }
  return true;
}

net::Mlp random_small_net(Rng& rng) {
  const int n_layers = static_cast<int>(rng.uniform_int(1, 3));
  std::vector<LayerSpec> layers;
  int in = static_cast<int>(rng.uniform_int(1, 8));
  for (int l = 0; l < n_layers; ++l) {
    const int out = static_cast<int>(rng.uniform_int(1, 8));
    const Activation act = static_cast<Activation>(rng.uniform_int(0, 3));
    layers.push_back({in, out, act});
    in = out;
  }
  return net::make_mlp(layers, rng);
}

// Redraws inputs that put a relu unit too close to its kink, where central
// differences are not trustworthy.
Eigen::VectorXd safe_input_for(const net::Mlp& net, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    Eigen::VectorXd input(net.input_dim());
    for (Eigen::Index i = 0; i < input.size(); ++i) input[i] = rng.normal(0.0, 1.0);
    const auto trace = net::forward_trace(net, input.transpose());
    bool near_kink = false;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      if (net.layers[l].activation != Activation::relu) continue;
      near_kink = near_kink || (trace.pre[l].array().abs() < 1e-3).any();
    }
    if (!near_kink) return input;
  }
  return Eigen::VectorXd::Ones(net.input_dim());
}

}  // namespace

TEST_CASE("forward basics") {
  SUBCASE("zero weights reduce the net to its bias") {
    auto mlp = net::make_mlp_zero({{3, 2, Activation::linear}});
    mlp.params[6] = 1.5;  // bias block follows the 3x2 weight block
    mlp.params[7] = -2.0;
    Eigen::VectorXd x(3);
    x << 4.0, -1.0, 0.5;
    const auto y = net::forward(mlp, x);
    CHECK(y[0] == doctest::Approx(1.5));
    CHECK(y[1] == doctest::Approx(-2.0));
  }
  SUBCASE("1x1 linear net") {
    auto mlp = net::make_mlp_zero({{1, 1, Activation::linear}});
    mlp.params[0] = 2.0;
    mlp.params[1] = 1.0;
    Eigen::VectorXd x(1);
    x << 3.0;
    CHECK(net::forward(mlp, x)[0] == doctest::Approx(7.0));
  }
  SUBCASE("sigmoid outputs stay in (0,1)") {
    Rng rng(1);
    auto mlp = net::make_mlp({{4, 4, Activation::relu}, {4, 3, Activation::sigmoid}}, rng);
    for (int i = 0; i < 20; ++i) {
      Eigen::VectorXd x(4);
      for (int j = 0; j < 4; ++j) x[j] = rng.normal(0.0, 3.0);
      const auto y = net::forward(mlp, x);
      for (int j = 0; j < 3; ++j) {
        CHECK(y[j] > 0.0);
        CHECK(y[j] < 1.0);
      }
    }
  }
  SUBCASE("dimension mismatch raises ShapeError") {
    auto mlp = net::make_mlp_zero({{3, 2, Activation::linear}});
    Eigen::VectorXd x(4);
    x.setZero();
    CHECK_THROWS_AS(net::forward(mlp, x), ShapeError);
  }
  SUBCASE("forward is bitwise deterministic") {
    Rng rng(2);
    const auto mlp = net::make_mlp({{5, 6, Activation::tanh}, {6, 2, Activation::linear}}, rng);
    Eigen::VectorXd x(5);
    for (int j = 0; j < 5; ++j) x[j] = rng.normal(0.0, 1.0);
    const auto a = net::forward(mlp, x);
    const auto b = net::forward(mlp, x);
    CHECK(std::memcmp(a.data(), b.data(), sizeof(double) * 2) == 0);
  }
}

TEST_CASE("backward basics") {
  SUBCASE("zero upstream gives a zero gradient") {
    Rng rng(3);
    const auto mlp = net::make_mlp({{3, 3, Activation::tanh}, {3, 2, Activation::linear}}, rng);
    Eigen::VectorXd x(3);
    x << 1.0, 2.0, 3.0;
    Eigen::VectorXd up = Eigen::VectorXd::Zero(2);
    const auto grads = net::backward(mlp, x, up);
    CHECK(grads.params.norm() == doctest::Approx(0.0));
    CHECK(grads.inputs.norm() == doctest::Approx(0.0));
  }
  SUBCASE("1x1 linear net by hand") {
    auto mlp = net::make_mlp_zero({{1, 1, Activation::linear}});
    mlp.params[0] = 2.0;
    mlp.params[1] = 1.0;
    Eigen::VectorXd x(1), up(1);
    x << 3.0;
    up << 1.0;
    const auto grads = net::backward(mlp, x, up);
    CHECK(grads.params[0] == doctest::Approx(3.0));  // d/dw
    CHECK(grads.params[1] == doctest::Approx(1.0));  // d/db
    CHECK(grads.inputs(0, 0) == doctest::Approx(2.0));
  }
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(12345);
  for (int trial = 0; trial < 30; ++trial) {
    const auto mlp = random_small_net(rng);
    const Eigen::VectorXd input = safe_input_for(mlp, rng);
    Eigen::VectorXd upstream(mlp.output_dim());
    for (Eigen::Index i = 0; i < upstream.size(); ++i)
      upstream[i] = rng.normal(0.0, 1.0);

    const auto grads = net::backward(mlp, input, upstream);
    CHECK(close_to_fd(grads.params, fd_param_gradient(mlp, input, upstream)));
    CHECK(close_to_fd(grads.inputs.row(0).transpose(),
                      fd_input_gradient(mlp, input, upstream)));
  }
}

TEST_CASE("batched backward sums the per-sample gradients") {
  Rng rng(77);
  const auto mlp = net::make_mlp({{3, 5, Activation::relu}, {5, 2, Activation::linear}}, rng);
  Eigen::MatrixXd inputs(4, 3);
  Eigen::MatrixXd upstream(4, 2);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) inputs(i, j) = rng.normal(0.0, 1.0);
    for (int j = 0; j < 2; ++j) upstream(i, j) = rng.normal(0.0, 1.0);
  }
  const auto trace = net::forward_trace(mlp, inputs);
  const auto batched = net::backward(mlp, trace, upstream);

  Eigen::VectorXd summed = Eigen::VectorXd::Zero(mlp.param_count());
  for (int i = 0; i < 4; ++i)
    summed += net::backward(mlp, inputs.row(i).transpose(),
                            upstream.row(i).transpose())
                  .params;
  CHECK((batched.params - summed).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("optimizer_step") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto mlp = net::make_mlp_zero({{1, 1, Activation::linear}});
    mlp.params << 2.0, 1.0;
    auto opt = net::make_optimizer(1e-2, 2);
    const Eigen::VectorXd before = mlp.params;
    net::optimizer_step(opt, mlp, Eigen::VectorXd::Zero(2));
    CHECK((mlp.params - before).norm() == doctest::Approx(0.0));
  }
  SUBCASE("constant gradient sign moves monotonically downhill") {
    auto mlp = net::make_mlp_zero({{1, 1, Activation::linear}});
    auto opt = net::make_optimizer(1e-2, 2);
    Eigen::VectorXd grad(2);
    grad << 1.0, 0.0;
    double prev = mlp.params[0];
    for (int i = 0; i < 50; ++i) {
      net::optimizer_step(opt, mlp, grad);
      CHECK(mlp.params[0] < prev);
      prev = mlp.params[0];
    }
  }
  SUBCASE("quadratic (p-3)^2 converges from zero") {
    auto mlp = net::make_mlp_zero({{1, 1, Activation::linear}});
    mlp.params.setZero();
    auto opt = net::make_optimizer(1e-2, 2);
    Eigen::VectorXd grad(2);
    for (int i = 0; i < 5000; ++i) {
      grad << 2.0 * (mlp.params[0] - 3.0), 0.0;
      net::optimizer_step(opt, mlp, grad);
    }
    CHECK(std::abs(mlp.params[0] - 3.0) < 1e-3);
  }
  SUBCASE("non-finite gradient raises NumericalFault") {
    auto mlp = net::make_mlp_zero({{1, 1, Activation::linear}});
    auto opt = net::make_optimizer(1e-2, 2);
    Eigen::VectorXd grad(2);
    grad << std::nan(""), 0.0;
    CHECK_THROWS_AS(net::optimizer_step(opt, mlp, grad), NumericalFault);
  }
}

TEST_CASE("soft_update") {
  Rng rng(9);
  const std::vector<LayerSpec> spec{{2, 3, Activation::tanh}, {3, 1, Activation::linear}};
  auto online = net::make_mlp(spec, rng);
  auto target = net::make_mlp(spec, rng);

  SUBCASE("tau = 1 copies, tau = 0 is a no-op") {
    auto t1 = target;
    net::soft_update(t1, online, 1.0);
    CHECK((t1.params - online.params).norm() == doctest::Approx(0.0));
    auto t0 = target;
    net::soft_update(t0, online, 0.0);
    CHECK((t0.params - target.params).norm() == doctest::Approx(0.0));
  }
  SUBCASE("scalar blend") {
    auto t = net::make_mlp_zero({{1, 1, Activation::linear}});
    auto o = net::make_mlp_zero({{1, 1, Activation::linear}});
    o.params.setOnes();
    net::soft_update(t, o, 0.005);
    CHECK(t.params[0] == doctest::Approx(0.005));
  }
  SUBCASE("two updates with tau compose to one with 1-(1-tau)^2") {
    const double tau = 0.12;
    auto twice = target;
    net::soft_update(twice, online, tau);
    net::soft_update(twice, online, tau);
    auto once = target;
    net::soft_update(once, online, 1.0 - (1.0 - tau) * (1.0 - tau));
    CHECK((twice.params - once.params).lpNorm<Eigen::Infinity>() < 1e-12);
  }
  SUBCASE("spec mismatch raises ShapeError") {
    auto small = net::make_mlp_zero({{2, 1, Activation::linear}});
    CHECK_THROWS_AS(net::soft_update(small, online, 0.5), ShapeError);
  }
}

TEST_CASE("checkpoints round-trip bit-exactly") {
  Rng rng(31);
  net::ActorCritic agent = net::make_actor_critic(
      {{4, 8, Activation::relu}, {8, 1, Activation::linear}},
      {{5, 8, Activation::relu}, {8, 1, Activation::linear}}, 1e-4, 1e-3, rng);
  // Give the optimizer state some history.
  Eigen::VectorXd grad(agent.critic.param_count());
  for (Eigen::Index i = 0; i < grad.size(); ++i) grad[i] = rng.normal(0.0, 1.0);
  net::optimizer_step(agent.opt_critic, agent.critic, grad);

  const std::string text = net::to_json(agent).dump();
  const net::ActorCritic back = net::actor_critic_from_json(nlohmann::json::parse(text));

  const auto same = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  };
  CHECK(same(agent.actor.params, back.actor.params));
  CHECK(same(agent.critic.params, back.critic.params));
  CHECK(same(agent.target_actor.params, back.target_actor.params));
  CHECK(same(agent.target_critic.params, back.target_critic.params));
  CHECK(same(agent.opt_critic.first_moment, back.opt_critic.first_moment));
  CHECK(same(agent.opt_critic.second_moment, back.opt_critic.second_moment));
  CHECK(agent.opt_critic.step_count == back.opt_critic.step_count);
}
