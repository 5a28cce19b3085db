#include <doctest.h>

#include <cmath>

#include "huca/errors.hpp"
#include "huca/locontrol.hpp"

using namespace huca;
using net::Activation;

namespace {

lo::LowState docked_state(Rng& rng, int a_disc) {
  lo::LowState s;
  s.soc_now = rng.uniform(0.2, 0.9);
  s.p_max_kw = rng.uniform(5.0, 30.0);
  s.p_min_kw = -s.p_max_kw;
  s.high_action_disc = a_disc;
  s.high_critic_value = rng.normal(0.0, 2.0);
  s.docked = true;
  return s;
}

std::vector<net::ActorCritic> make_agents(int n, double lr_actor, double lr_critic,
                                          Rng& rng) {
  const int joint = lo::kLowStateDim * n + n;
  std::vector<net::ActorCritic> agents;
  for (int i = 0; i < n; ++i)
    agents.push_back(net::make_actor_critic(
        {{lo::kLowStateDim, 8, Activation::relu}, {8, 1, Activation::linear}},
        {{joint, 8, Activation::relu}, {8, 1, Activation::linear}}, lr_actor,
        lr_critic, rng));
  return agents;
}

lo::LowTransition random_transition(Rng& rng, int n, bool gated = true) {
  lo::LowTransition t;
  t.x.states.resize(static_cast<std::size_t>(n));
  t.x_next.states.resize(static_cast<std::size_t>(n));
  const int a_disc = rng.uniform01() < 0.5 ? 1 : 0;
  for (int i = 0; i < n; ++i) {
    t.x.states[static_cast<std::size_t>(i)] = docked_state(rng, a_disc);
    t.x_next.states[static_cast<std::size_t>(i)] = docked_state(rng, a_disc);
    const double g = rng.normal(0.0, 1.0);
    t.actions.push_back(gated ? lo::map_action(g, a_disc) : net::sigmoid(g));
    t.rewards.push_back(rng.normal(-0.5, 0.5));
    t.terminals.push_back(rng.uniform01() < 0.2 ? 1 : 0);
    lo::UncertaintyInputs u;
    u.delta_soc = rng.uniform(-0.2, 0.5);
    u.delta_t = static_cast<double>(rng.uniform_int(1, 10));
    t.uncertainty.push_back(u);
  }
  return t;
}

}  // namespace

TEST_CASE("map_action gates the sigmoid by the high-level branch") {
  CHECK(lo::map_action(0.0, 1) == doctest::Approx(0.75));
  CHECK(lo::map_action(0.0, 0) == doctest::Approx(0.25));
  CHECK(lo::map_action(-40.0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(lo::map_action(40.0, 1) == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("every logit lands inside the branch's range") {
    Rng rng(5);
    for (int i = 0; i < 2000; ++i) {
      const double g = rng.normal(0.0, 5.0);
      const double charge = lo::map_action(g, 1);
      const double discharge = lo::map_action(g, 0);
      CHECK(charge >= 0.5);
      CHECK(charge <= 1.0);
      CHECK(discharge >= 0.0);
      CHECK(discharge < 0.5);
    }
  }
}

TEST_CASE("optimal_power is the affine blend of the bounds") {
  CHECK(lo::optimal_power(0.0, -15.0, 15.0) == doctest::Approx(-15.0));
  CHECK(lo::optimal_power(1.0, -15.0, 15.0) == doctest::Approx(15.0));
  CHECK(lo::optimal_power(0.5, -15.0, 15.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(lo::optimal_power(0.5, 2.0, 1.0), DomainError);

  SUBCASE("monotone in a and always inside the bounds") {
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
      const double p_min = rng.uniform(-30.0, 5.0);
      const double p_max = p_min + rng.uniform(0.0, 40.0);
      double prev = lo::optimal_power(0.0, p_min, p_max);
      for (double a = 0.1; a <= 1.0 + 1e-12; a += 0.1) {
        const double p = lo::optimal_power(a, p_min, p_max);
        CHECK(p >= prev - 1e-12);
        CHECK(p >= p_min - 1e-9);
        CHECK(p <= p_max + 1e-9);
        prev = p;
      }
    }
  }
}

TEST_CASE("uncertainty_factor") {
  lo::UncertaintyInputs u;
  u.epsilon = 0.0;

  SUBCASE("met targets produce zero urgency") {
    u.delta_soc = -0.1;
    u.delta_t = 4.0;
    CHECK(lo::uncertainty_factor(0.3, u) == doctest::Approx(0.0));
  }
  SUBCASE("hand value at a quarter action") {
    u.delta_soc = 0.4;
    u.delta_t = 4.0;
    CHECK(lo::uncertainty_factor(0.25, u) ==
          doctest::Approx(2.0 * std::sqrt(0.1)).epsilon(1e-12));
  }
  SUBCASE("a = 1 with a small epsilon is almost free") {
    u.delta_soc = 0.4;
    u.delta_t = 4.0;
    u.epsilon = 1e-6;
    CHECK(std::abs(std::log2(1.0 + 1e-6)) == doctest::Approx(1.4427e-6).epsilon(1e-3));
    CHECK(lo::uncertainty_factor(1.0, u) < 1e-6);
  }
  SUBCASE("nonincreasing in delta_t, nondecreasing in delta_soc") {
    u.delta_soc = 0.4;
    double prev = 1e300;
    for (double dt = 1.0; dt <= 12.0; dt += 1.0) {
      u.delta_t = dt;
      const double f = lo::uncertainty_factor(0.3, u);
      CHECK(f <= prev + 1e-15);
      prev = f;
    }
    u.delta_t = 4.0;
    prev = -1.0;
    for (double ds = -0.5; ds <= 0.6; ds += 0.05) {
      u.delta_soc = ds;
      const double f = lo::uncertainty_factor(0.3, u);
      CHECK(f >= prev - 1e-15);
      prev = f;
    }
  }
}

TEST_CASE("augment_q") {
  lo::UncertaintyInputs u;
  u.delta_soc = 0.4;
  u.delta_t = 4.0;
  u.epsilon = 0.0;

  SUBCASE("rho = 0 disables the augmentation") {
    u.rho = 0.0;
    CHECK(lo::augment_q(-3.2, 0.25, u) == doctest::Approx(-3.2));
  }
  SUBCASE("zero SoC gap disables the augmentation") {
    u.rho = 10.0;
    u.delta_soc = 0.0;
    CHECK(lo::augment_q(1.7, 0.1, u) == doctest::Approx(1.7));
  }
  SUBCASE("a at one minus epsilon disables the augmentation") {
    u.rho = 10.0;
    u.epsilon = 1e-6;
    CHECK(lo::augment_q(2.5, 1.0 - 1e-6, u) == doctest::Approx(2.5).epsilon(1e-9));
  }
  SUBCASE("literal multiplier may flip the sign") {
    u.rho = 10.0;
    const double expected = 1.0 * (1.0 - 10.0 * 2.0 * std::sqrt(0.1));
    CHECK(lo::augment_q(1.0, 0.25, u) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(lo::augment_q(1.0, 0.25, u) < 0.0);
  }
  SUBCASE("optional clamp floors the multiplier at zero") {
    u.rho = 10.0;
    CHECK(lo::augment_q(1.0, 0.25, u, true) == doctest::Approx(0.0));
    u.rho = 0.1;  // multiplier stays positive, clamp inert
    CHECK(lo::augment_q(1.0, 0.25, u, true) ==
          doctest::Approx(lo::augment_q(1.0, 0.25, u, false)));
  }
}

TEST_CASE("low_reward") {
  CHECK(lo::low_reward(0.0, 0.05, 0.8, 0.8, 0.5) == doctest::Approx(0.0));
  CHECK(lo::low_reward(10.0, 0.05, 0.6, 0.8, 0.5) == doctest::Approx(-0.45));
  SUBCASE("discharging at a positive price earns the cost term") {
    const double r = lo::low_reward(-10.0, 0.05, 0.8, 0.8, 0.5);
    CHECK(r == doctest::Approx(0.25));
    CHECK(r > 0.0);
  }
}

TEST_CASE("low_critic_target") {
  Rng rng(21);
  auto agents = make_agents(2, 1e-4, 1e-3, rng);
  // Constant target critic for agent 0.
  agents[0].target_critic =
      net::make_mlp_zero({{lo::kLowStateDim * 2 + 2, 1, Activation::linear}});
  agents[0].target_critic.params[agents[0].target_critic.param_count() - 1] = -1.0;

  lo::JointObservation x_next;
  x_next.states.resize(2);
  x_next.states[0] = docked_state(rng, 1);
  x_next.states[1].docked = false;

  CHECK(lo::low_critic_target(-0.45, x_next, agents, 0, 0.99, true, true) ==
        doctest::Approx(-0.45));
  CHECK(lo::low_critic_target(-0.45, x_next, agents, 0, 0.0, false, true) ==
        doctest::Approx(-0.45));
  CHECK(lo::low_critic_target(-0.45, x_next, agents, 0, 0.99, false, true) ==
        doctest::Approx(-1.44));
}

TEST_CASE("update_low") {
  Rng rng(33);
  const int n = 2;

  SUBCASE("exact critic is a fixed point") {
    auto agents = make_agents(n, 1e-4, 1e-3, rng);
    agents[0].critic = net::make_mlp_zero({{lo::kLowStateDim * n + n, 1, Activation::linear}});
    agents[0].critic.params[agents[0].critic.param_count() - 1] = 0.25;
    agents[0].target_critic = agents[0].critic;
    agents[0].opt_critic = net::make_optimizer(1e-3, agents[0].critic.param_count());

    std::vector<lo::LowTransition> batch;
    for (int i = 0; i < 8; ++i) {
      auto t = random_transition(rng, n);
      t.rewards[0] = 0.25;
      t.terminals[0] = 1;
      batch.push_back(std::move(t));
    }
    const Eigen::VectorXd before = agents[0].critic.params;
    const double loss = lo::update_low_critic(0, batch, agents, 0.99, true);
    CHECK(loss == doctest::Approx(0.0));
    CHECK((agents[0].critic.params - before).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SUBCASE("rho = 0 matches an update whose uncertainty inputs are inert") {
    auto agents_a = make_agents(n, 1e-3, 1e-3, rng);
    auto agents_b = agents_a;
    std::vector<lo::LowTransition> batch;
    for (int i = 0; i < 16; ++i) batch.push_back(random_transition(rng, n));

    auto batch_inert = batch;
    for (auto& t : batch_inert)
      for (auto& u : t.uncertainty) u.delta_soc = 0.0;  // factor vanishes

    lo::update_low(0, batch, agents_a, 0.99, 0.0, 1e-6, true);
    lo::update_low(0, batch_inert, agents_b, 0.99, 10.0, 1e-6, true);
    CHECK((agents_a[0].actor.params - agents_b[0].actor.params)
              .lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((agents_a[0].critic.params - agents_b[0].critic.params)
              .lpNorm<Eigen::Infinity>() < 1e-12);
  }

  SUBCASE("constant positive critic with large rho pushes actions toward one") {
    auto agents = make_agents(n, 1e-2, 1e-3, rng);
    const int joint = lo::kLowStateDim * n + n;
    agents[0].critic = net::make_mlp_zero({{joint, 1, Activation::linear}});
    agents[0].critic.params[agents[0].critic.param_count() - 1] = 2.0;
    agents[0].target_critic = agents[0].critic;
    agents[0].opt_critic = net::make_optimizer(1e-3, agents[0].critic.param_count());
    agents[0].opt_actor = net::make_optimizer(1e-2, agents[0].actor.param_count());

    std::vector<lo::LowTransition> batch;
    for (int i = 0; i < 16; ++i) {
      auto t = random_transition(rng, n);
      for (auto& s : t.x.states) s.high_action_disc = 1;  // charging branch
      for (auto& u : t.uncertainty) {
        u.delta_soc = 0.4;
        u.delta_t = 4.0;
      }
      t.rewards[0] = 2.0;
      t.terminals[0] = 1;  // keeps the constant critic in place
      batch.push_back(std::move(t));
    }

    const auto mean_action = [&]() {
      double sum = 0.0;
      for (const auto& t : batch) {
        const double g = net::forward(agents[0].actor,
                                      lo::encode(t.x.states[0]))[0];
        sum += lo::map_action(g, 1);
      }
      return sum / static_cast<double>(batch.size());
    };
    const double before = mean_action();
    for (int step = 0; step < 5; ++step)
      lo::update_low(0, batch, agents, 0.99, 10.0, 1e-6, true);
    const double after = mean_action();
    CHECK(after > before);
    CHECK(after <= 1.0);
    CHECK(after > 0.5);
  }

  SUBCASE("empty-pile entries are excluded from the actor pass") {
    auto agents = make_agents(n, 1e-3, 1e-3, rng);
    std::vector<lo::LowTransition> batch;
    for (int i = 0; i < 8; ++i) {
      auto t = random_transition(rng, n);
      t.x.states[0].docked = false;  // agent 0 idle everywhere
      t.actions[0] = lo::kIdleAction;
      t.rewards[0] = 0.0;
      batch.push_back(std::move(t));
    }
    const Eigen::VectorXd before = agents[0].actor.params;
    int rows = -1;
    lo::update_low_actor(0, batch, agents, 10.0, 1e-6, true, false, &rows);
    CHECK(rows == 0);
    CHECK((agents[0].actor.params - before).lpNorm<Eigen::Infinity>() ==
          doctest::Approx(0.0));
  }
}
