#include "huca/hicontrol.hpp"

#include <cmath>

#include "huca/errors.hpp"

namespace huca::hi {

Eigen::VectorXd encode(const HighState& s, int n_piles) {
  Eigen::VectorXd v(kHighStateDim);
  v << s.price_now * kPriceScale, s.price_avg_past_n * kPriceScale,
      s.price_historical * kPriceScale, s.load_now * kLoadScale,
      static_cast<double>(s.ev_count) / std::max(1, n_piles),
      s.ev_energy_delivered_kw * kLoadScale, s.low_critic_mean * kValueScale,
      s.low_critic_std * kValueScale;
  return v;
}

HighState build_high_state(const sim::TraceSet& traces, std::int64_t index,
                           int n_hours, int ev_count,
                           double ev_energy_delivered_kw, double low_critic_mean,
                           double low_critic_std) {
  HighState s;
  s.price_now = traces.price.at_clamped(index);
  s.load_now = traces.load.at_clamped(index);

  double sum = 0.0;
  int count = 0;
  for (std::int64_t k = std::max<std::int64_t>(0, index - n_hours + 1); k <= index; ++k) {
    sum += traces.price.at_clamped(k);
    ++count;
  }
  s.price_avg_past_n = count > 0 ? sum / count : s.price_now;

  if (index - 168 >= 0)
    s.price_historical = traces.price.at(index - 168);
  else if (index - 24 >= 0)
    s.price_historical = traces.price.at(index - 24);
  else
    s.price_historical = s.price_now;

  s.ev_count = ev_count;
  s.ev_energy_delivered_kw = ev_energy_delivered_kw;
  s.low_critic_mean = low_critic_mean;
  s.low_critic_std = low_critic_std;
  return s;
}

int discretize_action(double a_h) {
  if (!(a_h >= 0.0 && a_h <= 1.0))
    throw DomainError("high-level action " + std::to_string(a_h) +
                      " outside [0,1]");
  return a_h >= 0.5 ? 1 : 0;
}

double high_reward(const CostLedger& ledger, double load_now_kw,
                   double load_avg_kw, double kappa, double phi) {
  return kappa * (-ledger.energy_cost_usd - ledger.excess_kw_sum * phi) -
         std::abs(load_now_kw - load_avg_kw);
}

double policy_action(const net::Mlp& actor, const HighState& s, int n_piles) {
  return net::sigmoid(net::forward(actor, encode(s, n_piles))[0]);
}

double high_critic_target(double r, const HighState& s_next,
                          const net::Mlp& target_actor,
                          const net::Mlp& target_critic, double gamma,
                          bool terminal, int n_piles) {
  if (terminal) return r;
  const Eigen::VectorXd sv = encode(s_next, n_piles);
  const double a_next = net::sigmoid(net::forward(target_actor, sv)[0]);
  Eigen::VectorXd sa(kHighStateDim + 1);
  sa << sv, a_next;
  return r + gamma * net::forward(target_critic, sa)[0];
}

UpdateStats update_high(const std::vector<HighTransition>& batch,
                        net::ActorCritic& nets, double gamma, int n_piles) {
  if (batch.empty()) throw DomainError("update_high: empty batch");
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());

  Eigen::MatrixXd states(b, kHighStateDim);
  Eigen::MatrixXd next_states(b, kHighStateDim);
  Eigen::VectorXd actions(b);
  Eigen::VectorXd rewards(b);
  Eigen::VectorXd not_terminal(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const HighTransition& t = batch[static_cast<std::size_t>(i)];
    states.row(i) = encode(t.s, n_piles).transpose();
    next_states.row(i) = encode(t.s_next, n_piles).transpose();
    actions[i] = t.a;
    rewards[i] = t.r;
    not_terminal[i] = t.terminal ? 0.0 : 1.0;
  }

  // Bootstrapped targets from the target pair.
  const Eigen::MatrixXd next_logits = net::forward_batch(nets.target_actor, next_states);
  const Eigen::VectorXd next_actions =
      (1.0 / (1.0 + (-next_logits.col(0).array()).exp())).matrix();
  Eigen::MatrixXd next_sa(b, kHighStateDim + 1);
  next_sa << next_states, next_actions;
  const Eigen::VectorXd next_q = net::forward_batch(nets.target_critic, next_sa).col(0);
  const Eigen::VectorXd targets =
      rewards.array() + gamma * not_terminal.array() * next_q.array();

  // Critic: mean squared TD error over the batch.
  Eigen::MatrixXd sa(b, kHighStateDim + 1);
  sa << states, actions;
  const net::ForwardTrace critic_trace = net::forward_trace(nets.critic, sa);
  const Eigen::VectorXd residual = critic_trace.output().col(0) - targets;
  const double critic_loss = residual.squaredNorm() / static_cast<double>(b);
  if (!std::isfinite(critic_loss)) throw NumericalFault("high critic loss is not finite");

  const Eigen::MatrixXd critic_up = (2.0 / static_cast<double>(b)) * residual;
  net::Gradients critic_grads = net::backward(nets.critic, critic_trace, critic_up);
  net::optimizer_step(nets.opt_critic, nets.critic, critic_grads.params);

  // Actor: ascend mean Q(s, sigmoid(actor(s))) through the frozen critic.
  const net::ForwardTrace actor_trace = net::forward_trace(nets.actor, states);
  const Eigen::ArrayXd policy_a =
      1.0 / (1.0 + (-actor_trace.output().col(0).array()).exp());
  Eigen::MatrixXd policy_sa(b, kHighStateDim + 1);
  policy_sa << states, policy_a.matrix();
  const net::ForwardTrace q_trace = net::forward_trace(nets.critic, policy_sa);
  const double actor_objective =
      q_trace.output().col(0).mean();
  if (!std::isfinite(actor_objective))
    throw NumericalFault("high actor objective is not finite");

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(b, 1);
  const net::Gradients q_in = net::backward(nets.critic, q_trace, ones);
  const Eigen::ArrayXd dq_da = q_in.inputs.col(kHighStateDim).array();
  const Eigen::ArrayXd dsigmoid = policy_a * (1.0 - policy_a);
  // Negated: the optimizer descends, the objective is ascended.
  const Eigen::MatrixXd actor_up =
      (-(dq_da * dsigmoid) / static_cast<double>(b)).matrix();
  net::Gradients actor_grads = net::backward(nets.actor, actor_trace, actor_up);
  net::optimizer_step(nets.opt_actor, nets.actor, actor_grads.params);

  return {critic_loss, actor_objective};
}

}  // namespace huca::hi
