#include <doctest.h>

#include <cmath>

#include "huca/errors.hpp"
#include "huca/hicontrol.hpp"

using namespace huca;
using net::Activation;

namespace {

sim::TraceSet traces_with_prices(std::vector<double> prices, double load = 100.0) {
  sim::TraceSet t;
  t.load.values.assign(prices.size(), load);
  t.price.values = std::move(prices);
  return t;
}

hi::HighState some_state(Rng& rng) {
  hi::HighState s;
  s.price_now = rng.uniform(0.02, 0.15);
  s.price_avg_past_n = rng.uniform(0.02, 0.15);
  s.price_historical = rng.uniform(0.02, 0.15);
  s.load_now = rng.uniform(150.0, 700.0);
  s.ev_count = static_cast<int>(rng.uniform_int(0, 10));
  s.ev_energy_delivered_kw = rng.uniform(-150.0, 150.0);
  s.low_critic_mean = rng.normal(0.0, 3.0);
  s.low_critic_std = rng.uniform(0.0, 2.0);
  return s;
}

}  // namespace

TEST_CASE("discretize_action thresholds at 0.5") {
  CHECK(hi::discretize_action(0.5) == 1);
  CHECK(hi::discretize_action(0.49) == 0);
  CHECK(hi::discretize_action(1.0) == 1);
  CHECK(hi::discretize_action(0.0) == 0);
  CHECK_THROWS_AS(hi::discretize_action(1.1), DomainError);
  CHECK_THROWS_AS(hi::discretize_action(-0.1), DomainError);

  SUBCASE("monotone nondecreasing") {
    int prev = 0;
    for (double a = 0.0; a <= 1.0; a += 0.001) {
      const int d = hi::discretize_action(a);
      CHECK(d >= prev);
      prev = d;
    }
  }
}

TEST_CASE("build_high_state") {
  SUBCASE("constant trace collapses all price features") {
    const auto traces = traces_with_prices(std::vector<double>(400, 0.07));
    const auto s = hi::build_high_state(traces, 200, 3, 2, 5.0, 0.0, 0.0);
    CHECK(s.price_now == doctest::Approx(0.07));
    CHECK(s.price_avg_past_n == doctest::Approx(0.07));
    CHECK(s.price_historical == doctest::Approx(0.07));
  }
  SUBCASE("trailing window mean") {
    const auto traces = traces_with_prices({1.0, 2.0, 3.0});
    const auto s = hi::build_high_state(traces, 2, 3, 0, 0.0, 0.0, 0.0);
    CHECK(s.price_avg_past_n == doctest::Approx(2.0));
  }
  SUBCASE("historical price prefers last week, then yesterday, then now") {
    std::vector<double> prices(400, 0.05);
    prices[2] = 0.99;   // one week before slot 170
    prices[6] = 0.42;   // one day before slot 30
    const auto traces = traces_with_prices(std::move(prices));
    CHECK(hi::build_high_state(traces, 170, 3, 0, 0, 0, 0).price_historical ==
          doctest::Approx(0.99));
    CHECK(hi::build_high_state(traces, 30, 3, 0, 0, 0, 0).price_historical ==
          doctest::Approx(0.42));
    CHECK(hi::build_high_state(traces, 3, 3, 0, 0, 0, 0).price_historical ==
          doctest::Approx(0.05));
  }
  SUBCASE("defaults at the start of time") {
    const auto traces = traces_with_prices(std::vector<double>(48, 0.05));
    const auto s = hi::build_high_state(traces, 0, 3, 0, 0.0, 0.0, 0.0);
    CHECK(s.low_critic_mean == doctest::Approx(0.0));
    CHECK(s.low_critic_std == doctest::Approx(0.0));
    CHECK(s.ev_energy_delivered_kw == doctest::Approx(0.0));
  }
}

TEST_CASE("high_reward") {
  SUBCASE("single slot below contract") {
    hi::CostLedger ledger;
    ledger.add_slot(100.0, 0.05, 700.0, 1.0);
    CHECK(hi::high_reward(ledger, 100.0, 100.0, 0.1, 0.1) == doctest::Approx(-0.5));
  }
  SUBCASE("all-zero world gives zero reward") {
    const hi::CostLedger ledger;
    CHECK(hi::high_reward(ledger, 0.0, 0.0, 0.1, 0.1) == doctest::Approx(0.0));
  }
  SUBCASE("ten excess kW cost exactly kappa*phi*10") {
    hi::CostLedger base;
    base.energy_cost_usd = 5.0;
    hi::CostLedger with_excess = base;
    with_excess.excess_kw_sum = 10.0;
    const double drop = hi::high_reward(base, 50.0, 50.0, 0.1, 0.1) -
                        hi::high_reward(with_excess, 50.0, 50.0, 0.1, 0.1);
    CHECK(drop == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("doubling prices doubles only the kappa-weighted term") {
    const double kappa = 0.1, phi = 0.1;
    hi::CostLedger once, twice;
    const double loads[] = {300.0, 650.0, 720.0};
    const double prices[] = {0.05, 0.12, 0.08};
    for (int i = 0; i < 3; ++i) {
      once.add_slot(loads[i], prices[i], 700.0, 1.0);
      twice.add_slot(loads[i], 2.0 * prices[i], 700.0, 1.0);
    }
    const double r1 = hi::high_reward(once, 650.0, 500.0, kappa, phi);
    const double r2 = hi::high_reward(twice, 650.0, 500.0, kappa, phi);
    CHECK(r2 - r1 == doctest::Approx(-kappa * once.energy_cost_usd).epsilon(1e-12));
  }
}

TEST_CASE("high_critic_target") {
  auto target_actor = net::make_mlp_zero({{hi::kHighStateDim, 1, Activation::linear}});
  auto target_critic =
      net::make_mlp_zero({{hi::kHighStateDim + 1, 1, Activation::linear}});
  target_critic.params[target_critic.param_count() - 1] = 2.0;  // constant output

  hi::HighState s_next;
  SUBCASE("terminal bootstraps nothing") {
    CHECK(hi::high_critic_target(1.0, s_next, target_actor, target_critic, 0.99,
                                 true, 10) == doctest::Approx(1.0));
  }
  SUBCASE("one-step bootstrap") {
    CHECK(hi::high_critic_target(1.0, s_next, target_actor, target_critic, 0.99,
                                 false, 10) == doctest::Approx(2.98));
  }
  SUBCASE("gamma = 0 is myopic") {
    CHECK(hi::high_critic_target(1.0, s_next, target_actor, target_critic, 0.0,
                                 false, 10) == doctest::Approx(1.0));
  }
}

TEST_CASE("update_high") {
  Rng rng(17);
  const int n_piles = 10;

  SUBCASE("exact critic is a fixed point") {
    net::ActorCritic nets;
    nets.actor = net::make_mlp({{hi::kHighStateDim, 1, Activation::linear}}, rng);
    nets.critic = net::make_mlp_zero({{hi::kHighStateDim + 1, 1, Activation::linear}});
    nets.critic.params[nets.critic.param_count() - 1] = 0.7;
    nets.target_actor = nets.actor;
    nets.target_critic = nets.critic;
    nets.opt_actor = net::make_optimizer(1e-4, nets.actor.param_count());
    nets.opt_critic = net::make_optimizer(1e-3, nets.critic.param_count());

    std::vector<hi::HighTransition> batch(8);
    for (auto& t : batch) {
      t.s = some_state(rng);
      t.a = rng.uniform01();
      t.r = 0.7;  // terminal target equals the constant prediction
      t.terminal = true;
    }
    const Eigen::VectorXd before = nets.critic.params;
    const auto stats = hi::update_high(batch, nets, 0.99, n_piles);
    CHECK(stats.critic_loss == doctest::Approx(0.0));
    CHECK((nets.critic.params - before).lpNorm<Eigen::Infinity>() < 1e-10);
  }

  SUBCASE("one-transition batch reports its squared TD error") {
    net::ActorCritic nets;
    nets.actor = net::make_mlp({{hi::kHighStateDim, 1, Activation::linear}}, rng);
    nets.critic = net::make_mlp_zero({{hi::kHighStateDim + 1, 1, Activation::linear}});
    nets.target_actor = nets.actor;
    nets.target_critic = nets.critic;
    nets.opt_actor = net::make_optimizer(1e-4, nets.actor.param_count());
    nets.opt_critic = net::make_optimizer(1e-3, nets.critic.param_count());

    std::vector<hi::HighTransition> batch(1);
    batch[0].s = some_state(rng);
    batch[0].a = 0.3;
    batch[0].r = -2.0;
    batch[0].terminal = true;
    const auto stats = hi::update_high(batch, nets, 0.99, n_piles);
    CHECK(stats.critic_loss == doctest::Approx(4.0));  // prediction 0 vs target -2
  }

  SUBCASE("actor ascends a critic that pays for larger actions") {
    net::ActorCritic nets;
    nets.actor = net::make_mlp(
        {{hi::kHighStateDim, 8, Activation::relu}, {8, 1, Activation::linear}}, rng);
    // Q(s, a) = a: unit weight on the action column.
    nets.critic = net::make_mlp_zero({{hi::kHighStateDim + 1, 1, Activation::linear}});
    nets.critic.params[hi::kHighStateDim] = 1.0;
    nets.target_actor = nets.actor;
    nets.target_critic = nets.critic;
    nets.opt_actor = net::make_optimizer(1e-3, nets.actor.param_count());
    nets.opt_critic = net::make_optimizer(1e-3, nets.critic.param_count());

    std::vector<hi::HighTransition> batch(16);
    for (auto& t : batch) {
      t.s = some_state(rng);
      t.a = hi::policy_action(nets.actor, t.s, n_piles);
      t.r = t.a;  // keeps the critic's residual at zero
      t.terminal = true;
    }
    double mean_before = 0.0;
    for (const auto& t : batch) mean_before += hi::policy_action(nets.actor, t.s, n_piles);
    hi::update_high(batch, nets, 0.99, n_piles);
    double mean_after = 0.0;
    for (const auto& t : batch) mean_after += hi::policy_action(nets.actor, t.s, n_piles);
    CHECK(mean_after > mean_before);
  }

  SUBCASE("critic loss does not increase after one small-lr step") {
    for (int trial = 0; trial < 20; ++trial) {
      net::ActorCritic nets = net::make_actor_critic(
          {{hi::kHighStateDim, 16, Activation::relu}, {16, 1, Activation::linear}},
          {{hi::kHighStateDim + 1, 16, Activation::relu}, {16, 1, Activation::linear}},
          1e-4, 1e-4, rng);
      std::vector<hi::HighTransition> batch(32);
      for (auto& t : batch) {
        t.s = some_state(rng);
        t.a = rng.uniform01();
        t.r = rng.normal(-1.0, 1.0);
        t.s_next = some_state(rng);
        t.terminal = rng.uniform01() < 0.2;
      }
      // Recomputable targets: the update must not touch the target nets.
      const auto loss_now = [&]() {
        double sum = 0.0;
        for (const auto& t : batch) {
          const double y = hi::high_critic_target(
              t.r, t.s_next, nets.target_actor, nets.target_critic, 0.99,
              t.terminal, n_piles);
          Eigen::VectorXd sa(hi::kHighStateDim + 1);
          sa << hi::encode(t.s, n_piles), t.a;
          const double q = net::forward(nets.critic, sa)[0];
          sum += (q - y) * (q - y);
        }
        return sum / static_cast<double>(batch.size());
      };
      const double before = loss_now();
      const auto stats = hi::update_high(batch, nets, 0.99, n_piles);
      CHECK(stats.critic_loss == doctest::Approx(before));
      CHECK(loss_now() <= before + 1e-12);
    }
  }
}
