#include "huca/locontrol.hpp"

#include <cmath>
#include <numbers>

#include "huca/errors.hpp"
#include "huca/hicontrol.hpp"

namespace huca::lo {

namespace {
constexpr double kGate = 0.5;  // action-space split point between the two branches
}

double map_action(double logit, int high_action_disc) {
  const double s = net::sigmoid(logit);
  return high_action_disc == 1 ? kGate + kGate * s : kGate * s;
}

double optimal_power(double a, double p_min_kw, double p_max_kw) {
  if (p_min_kw > p_max_kw) throw DomainError("optimal_power: p_min > p_max");
  return a * (p_max_kw - p_min_kw) + p_min_kw;
}

double uncertainty_factor(double a, const UncertaintyInputs& u) {
  const double urgency = std::max(u.delta_soc, 0.0) / u.delta_t;
  return std::abs(std::log2(a + u.epsilon)) * std::sqrt(urgency);
}

double augment_q(double q, double a, const UncertaintyInputs& u,
                 bool clamp_at_zero) {
  double multiplier = 1.0 - u.rho * uncertainty_factor(a, u);
  if (clamp_at_zero) multiplier = std::max(multiplier, 0.0);
  return q * multiplier;
}

double low_reward(double p_opt_kw, double price, double soc_now,
                  double soc_dep_expected, double omega) {
  return omega * (-p_opt_kw * price) - std::abs(soc_now - soc_dep_expected);
}

Eigen::VectorXd encode(const LowState& s) {
  Eigen::VectorXd v(kLowStateDim);
  v << s.soc_now, s.p_max_kw * hi::kLoadScale, s.p_min_kw * hi::kLoadScale,
      static_cast<double>(s.high_action_disc),
      s.high_critic_value * hi::kValueScale, s.docked ? 1.0 : 0.0;
  return v;
}

Eigen::VectorXd encode(const JointObservation& x) {
  Eigen::VectorXd v(kLowStateDim * x.n_agents());
  for (int i = 0; i < x.n_agents(); ++i)
    v.segment(static_cast<Eigen::Index>(i) * kLowStateDim, kLowStateDim) =
        encode(x.states[static_cast<std::size_t>(i)]);
  return v;
}

double target_action(const net::Mlp& target_actor, const LowState& s_next,
                     bool gated) {
  if (!s_next.docked) return kIdleAction;
  const double logit = net::forward(target_actor, encode(s_next))[0];
  return gated ? map_action(logit, s_next.high_action_disc) : net::sigmoid(logit);
}

double low_critic_target(double r, const JointObservation& x_next,
                         const std::vector<net::ActorCritic>& agents, int agent,
                         double gamma, bool terminal, bool gated) {
  if (terminal) return r;
  const int n = x_next.n_agents();
  Eigen::VectorXd xa(static_cast<Eigen::Index>(n) * kLowStateDim + n);
  xa.head(static_cast<Eigen::Index>(n) * kLowStateDim) = encode(x_next);
  for (int j = 0; j < n; ++j)
    xa[static_cast<Eigen::Index>(n) * kLowStateDim + j] = target_action(
        agents[static_cast<std::size_t>(j)].target_actor,
        x_next.states[static_cast<std::size_t>(j)], gated);
  return r + gamma *
                 net::forward(agents[static_cast<std::size_t>(agent)].target_critic,
                              xa)[0];
}

namespace {

// Batch layout shared by the critic and actor passes: encoded joint states
// followed by the N actions.
struct JointBatch {
  Eigen::MatrixXd x;        // b x (6N)
  Eigen::MatrixXd x_next;   // b x (6N)
  Eigen::MatrixXd actions;  // b x N
  int n = 0;
};

JointBatch build_joint(const std::vector<LowTransition>& batch) {
  JointBatch jb;
  jb.n = batch.front().x.n_agents();
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  jb.x.resize(b, static_cast<Eigen::Index>(jb.n) * kLowStateDim);
  jb.x_next.resize(b, static_cast<Eigen::Index>(jb.n) * kLowStateDim);
  jb.actions.resize(b, jb.n);
  for (Eigen::Index i = 0; i < b; ++i) {
    const LowTransition& t = batch[static_cast<std::size_t>(i)];
    if (t.x.n_agents() != jb.n || t.x_next.n_agents() != jb.n ||
        static_cast<int>(t.actions.size()) != jb.n)
      throw ShapeError("low transition width mismatch in batch");
    jb.x.row(i) = encode(t.x).transpose();
    jb.x_next.row(i) = encode(t.x_next).transpose();
    for (int j = 0; j < jb.n; ++j)
      jb.actions(i, j) = t.actions[static_cast<std::size_t>(j)];
  }
  return jb;
}

}  // namespace

double update_low_critic(int agent, const std::vector<LowTransition>& batch,
                         std::vector<net::ActorCritic>& agents, double gamma,
                         bool gated) {
  if (batch.empty()) throw DomainError("update_low_critic: empty batch");
  const JointBatch jb = build_joint(batch);
  const Eigen::Index b = jb.x.rows();
  const int n = jb.n;
  net::ActorCritic& self = agents[static_cast<std::size_t>(agent)];

  // Next joint action from every agent's target policy.
  Eigen::MatrixXd next_actions(b, n);
  for (int j = 0; j < n; ++j) {
    const net::Mlp& ta = agents[static_cast<std::size_t>(j)].target_actor;
    const Eigen::MatrixXd logits = net::forward_batch(
        ta, jb.x_next.middleCols(static_cast<Eigen::Index>(j) * kLowStateDim,
                                 kLowStateDim));
    for (Eigen::Index i = 0; i < b; ++i) {
      const LowState& sj =
          batch[static_cast<std::size_t>(i)].x_next.states[static_cast<std::size_t>(j)];
      if (!sj.docked) {
        next_actions(i, j) = kIdleAction;
      } else if (gated) {
        next_actions(i, j) = map_action(logits(i, 0), sj.high_action_disc);
      } else {
        next_actions(i, j) = net::sigmoid(logits(i, 0));
      }
    }
  }

  Eigen::MatrixXd next_xa(b, jb.x_next.cols() + n);
  next_xa << jb.x_next, next_actions;
  const Eigen::VectorXd next_q = net::forward_batch(self.target_critic, next_xa).col(0);

  Eigen::VectorXd targets(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const LowTransition& t = batch[static_cast<std::size_t>(i)];
    const double r = t.rewards[static_cast<std::size_t>(agent)];
    const bool terminal = t.terminals[static_cast<std::size_t>(agent)] != 0;
    targets[i] = terminal ? r : r + gamma * next_q[i];
  }

  Eigen::MatrixXd xa(b, jb.x.cols() + n);
  xa << jb.x, jb.actions;
  const net::ForwardTrace trace = net::forward_trace(self.critic, xa);
  const Eigen::VectorXd residual = trace.output().col(0) - targets;
  const double loss = residual.squaredNorm() / static_cast<double>(b);
  if (!std::isfinite(loss)) throw NumericalFault("low critic loss is not finite");

  const Eigen::MatrixXd upstream = (2.0 / static_cast<double>(b)) * residual;
  net::Gradients grads = net::backward(self.critic, trace, upstream);
  net::optimizer_step(self.opt_critic, self.critic, grads.params);
  return loss;
}

double update_low_actor(int agent, const std::vector<LowTransition>& batch,
                        std::vector<net::ActorCritic>& agents, double rho,
                        double epsilon, bool gated, bool clamp_at_zero,
                        int* actor_rows) {
  if (batch.empty()) throw DomainError("update_low_actor: empty batch");
  net::ActorCritic& self = agents[static_cast<std::size_t>(agent)];

  // Only entries where this agent's pile is occupied contribute.
  std::vector<const LowTransition*> rows;
  rows.reserve(batch.size());
  for (const LowTransition& t : batch)
    if (t.x.states[static_cast<std::size_t>(agent)].docked) rows.push_back(&t);
  if (actor_rows) *actor_rows = static_cast<int>(rows.size());
  if (rows.empty()) return 0.0;

  const Eigen::Index b = static_cast<Eigen::Index>(rows.size());
  const int n = batch.front().x.n_agents();
  Eigen::MatrixXd x(b, static_cast<Eigen::Index>(n) * kLowStateDim);
  Eigen::MatrixXd actions(b, n);
  Eigen::MatrixXd self_state(b, kLowStateDim);
  Eigen::VectorXd disc(b);
  std::vector<UncertaintyInputs> unc(rows.size());
  for (Eigen::Index i = 0; i < b; ++i) {
    const LowTransition& t = *rows[static_cast<std::size_t>(i)];
    x.row(i) = encode(t.x).transpose();
    for (int j = 0; j < n; ++j)
      actions(i, j) = t.actions[static_cast<std::size_t>(j)];
    const LowState& s = t.x.states[static_cast<std::size_t>(agent)];
    self_state.row(i) = encode(s).transpose();
    disc[i] = static_cast<double>(s.high_action_disc);
    unc[static_cast<std::size_t>(i)] =
        t.uncertainty[static_cast<std::size_t>(agent)];
    unc[static_cast<std::size_t>(i)].rho = rho;
    unc[static_cast<std::size_t>(i)].epsilon = epsilon;
  }

  // Re-derive this agent's action from its current policy; other agents'
  // actions stay as sampled.
  const net::ForwardTrace actor_trace = net::forward_trace(self.actor, self_state);
  const Eigen::ArrayXd logits = actor_trace.output().col(0).array();
  const Eigen::ArrayXd sig = 1.0 / (1.0 + (-logits).exp());
  Eigen::ArrayXd a_pi(b);
  Eigen::ArrayXd da_dlogit(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    if (gated) {
      a_pi[i] = disc[i] == 1.0 ? 0.5 + 0.5 * sig[i] : 0.5 * sig[i];
      da_dlogit[i] = 0.5 * sig[i] * (1.0 - sig[i]);
    } else {
      a_pi[i] = sig[i];
      da_dlogit[i] = sig[i] * (1.0 - sig[i]);
    }
  }

  Eigen::MatrixXd xa(b, x.cols() + n);
  Eigen::MatrixXd actions_pi = actions;
  actions_pi.col(agent) = a_pi.matrix();
  xa << x, actions_pi;

  const net::ForwardTrace q_trace = net::forward_trace(self.critic, xa);
  const Eigen::ArrayXd q = q_trace.output().col(0).array();

  // Augmented value and its action derivative (Eq. 6 applied on the actor
  // path only).
  Eigen::ArrayXd aug(b);
  Eigen::ArrayXd one_minus_rho_u(b);
  Eigen::ArrayXd dmult_da(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const UncertaintyInputs& u = unc[static_cast<std::size_t>(i)];
    const double factor = uncertainty_factor(a_pi[i], u);
    double mult = 1.0 - u.rho * factor;
    const double urgency = std::sqrt(std::max(u.delta_soc, 0.0) / u.delta_t);
    const double log2a = std::log2(a_pi[i] + u.epsilon);
    // d|log2(a+eps)|/da = sign(log2(a+eps)) / ((a+eps) ln 2)
    double dfactor = 0.0;
    if (urgency > 0.0 && log2a != 0.0) {
      const double sign = log2a > 0.0 ? 1.0 : -1.0;
      dfactor = sign / ((a_pi[i] + u.epsilon) * std::numbers::ln2) * urgency;
    }
    double dmult = -u.rho * dfactor;
    if (clamp_at_zero && mult < 0.0) {
      mult = 0.0;
      dmult = 0.0;
    }
    one_minus_rho_u[i] = mult;
    dmult_da[i] = dmult;
    aug[i] = q[i] * mult;
  }
  const double objective = aug.mean();
  if (!std::isfinite(objective))
    throw NumericalFault("low actor objective is not finite");

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(b, 1);
  const net::Gradients q_in = net::backward(self.critic, q_trace, ones);
  const Eigen::ArrayXd dq_da =
      q_in.inputs.col(x.cols() + agent).array();
  const Eigen::ArrayXd daug_da = dq_da * one_minus_rho_u + q * dmult_da;
  const Eigen::MatrixXd actor_up =
      (-(daug_da * da_dlogit) / static_cast<double>(b)).matrix();
  net::Gradients actor_grads = net::backward(self.actor, actor_trace, actor_up);
  net::optimizer_step(self.opt_actor, self.actor, actor_grads.params);
  return objective;
}

UpdateStats update_low(int agent, const std::vector<LowTransition>& batch,
                       std::vector<net::ActorCritic>& agents, double gamma,
                       double rho, double epsilon, bool gated,
                       bool clamp_at_zero) {
  UpdateStats stats;
  stats.critic_loss = update_low_critic(agent, batch, agents, gamma, gated);
  stats.actor_objective = update_low_actor(agent, batch, agents, rho, epsilon,
                                           gated, clamp_at_zero, &stats.actor_rows);
  return stats;
}

}  // namespace huca::lo
