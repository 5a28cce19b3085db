#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "huca/rng.hpp"

namespace huca::net {

enum class Activation { relu, tanh, sigmoid, linear };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::linear;
};

// Fixed-topology MLP stored as one flat parameter vector: per layer the
// row-major (out x in) weight block, then the bias block. Plain value type;
// copying a network copies its parameters.
struct Mlp {
  std::vector<LayerSpec> layers;
  Eigen::VectorXd params;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
  int output_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }
  std::int64_t param_count() const;
};

std::int64_t param_count(const std::vector<LayerSpec>& layers);

// Seeded init, uniform in +-1/sqrt(fan_in) per layer for weights and biases.
Mlp make_mlp(std::vector<LayerSpec> layers, Rng& rng);
Mlp make_mlp_zero(std::vector<LayerSpec> layers);

// Batched forward pass; rows are samples. forward() is the single-sample
// wrapper over the same path.
Eigen::MatrixXd forward_batch(const Mlp& net,
                              const Eigen::Ref<const Eigen::MatrixXd>& inputs);
Eigen::VectorXd forward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& input);

// Activations recorded during a forward pass, consumed by backward().
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
  std::vector<Eigen::MatrixXd> post;  // post[0] is the input batch
  const Eigen::MatrixXd& output() const { return post.back(); }
};

ForwardTrace forward_trace(const Mlp& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs);

struct Gradients {
  Eigen::VectorXd params;   // summed over the batch
  Eigen::MatrixXd inputs;   // one row per sample
};

// Exact reverse-mode gradient of the forward map contracted with the
// upstream batch (rows match the forward batch).
Gradients backward(const Mlp& net, const ForwardTrace& trace,
                   const Eigen::Ref<const Eigen::MatrixXd>& upstream);
Gradients backward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& input,
                   const Eigen::Ref<const Eigen::VectorXd>& upstream);

// Adam with bias correction. Moment vectors are zero-initialized and must
// stay the same length as the parameter vector they update.
struct OptimizerState {
  double learning_rate = 1e-3;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::int64_t step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimizerState make_optimizer(double learning_rate, std::int64_t n_params);

// Applies one descent step in place. Throws NumericalFault on a non-finite
// gradient.
void optimizer_step(OptimizerState& opt, Mlp& net,
                    const Eigen::Ref<const Eigen::VectorXd>& grad);

// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(Mlp& target, const Mlp& online, double tau);

// A DDPG-style agent: online and target actor/critic plus their optimizers.
struct ActorCritic {
  Mlp actor;
  Mlp critic;
  Mlp target_actor;
  Mlp target_critic;
  OptimizerState opt_actor;
  OptimizerState opt_critic;
};

ActorCritic make_actor_critic(const std::vector<LayerSpec>& actor_layers,
                              const std::vector<LayerSpec>& critic_layers,
                              double lr_actor, double lr_critic, Rng& rng);

void soft_update_all(ActorCritic& agent, double tau);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace huca::net
