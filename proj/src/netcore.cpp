#include "huca/netcore.hpp"

#include <cmath>

#include "huca/errors.hpp"

namespace huca::net {

namespace {

using RowMajorMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using RowMajorMutMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct LayerView {
  RowMajorMap weights;
  Eigen::Map<const Eigen::VectorXd> bias;
};

LayerView layer_view(const Mlp& net, std::size_t layer, std::int64_t offset) {
  const LayerSpec& spec = net.layers[layer];
  return {RowMajorMap(net.params.data() + offset, spec.out_dim, spec.in_dim),
          Eigen::Map<const Eigen::VectorXd>(
              net.params.data() + offset +
                  static_cast<std::int64_t>(spec.in_dim) * spec.out_dim,
              spec.out_dim)};
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::tanh:
      return z.array().tanh().matrix();
    case Activation::sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
    case Activation::linear:
      return z;
  }
  throw DomainError("unknown activation");
}

// Derivative expressed from pre-activation z and post-activation y.
Eigen::ArrayXXd activate_grad(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y,
                              Activation a) {
  switch (a) {
    case Activation::relu:
      return (z.array() > 0.0).cast<double>();
    case Activation::tanh:
      return 1.0 - y.array().square();
    case Activation::sigmoid:
      return y.array() * (1.0 - y.array());
    case Activation::linear:
      return Eigen::ArrayXXd::Ones(z.rows(), z.cols());
  }
  throw DomainError("unknown activation");
}

void check_layers(const std::vector<LayerSpec>& layers) {
  if (layers.empty()) throw ShapeError("network needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].in_dim < 1 || layers[i].out_dim < 1)
      throw ShapeError("layer dims must be >= 1");
    if (i > 0 && layers[i].in_dim != layers[i - 1].out_dim)
      throw ShapeError("layer " + std::to_string(i) + " input dim mismatch");
  }
}

}  // namespace

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw DomainError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "linear";
}

std::int64_t param_count(const std::vector<LayerSpec>& layers) {
  std::int64_t n = 0;
  for (const auto& l : layers)
    n += static_cast<std::int64_t>(l.in_dim) * l.out_dim + l.out_dim;
  return n;
}

std::int64_t Mlp::param_count() const { return net::param_count(layers); }

Mlp make_mlp(std::vector<LayerSpec> layers, Rng& rng) {
  check_layers(layers);
  Mlp net;
  net.layers = std::move(layers);
  net.params.resize(net.param_count());
  std::int64_t offset = 0;
  for (const auto& spec : net.layers) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in_dim));
    const std::int64_t n = static_cast<std::int64_t>(spec.in_dim) * spec.out_dim + spec.out_dim;
    for (std::int64_t i = 0; i < n; ++i)
      net.params[offset + i] = rng.uniform(-bound, bound);
    offset += n;
  }
  return net;
}

Mlp make_mlp_zero(std::vector<LayerSpec> layers) {
  check_layers(layers);
  Mlp net;
  net.layers = std::move(layers);
  net.params = Eigen::VectorXd::Zero(net.param_count());
  return net;
}

ForwardTrace forward_trace(const Mlp& net, const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (inputs.cols() != net.input_dim())
    throw ShapeError("forward: got " + std::to_string(inputs.cols()) +
                     " input columns, expected " + std::to_string(net.input_dim()));
  ForwardTrace trace;
  trace.pre.reserve(net.layers.size());
  trace.post.reserve(net.layers.size() + 1);
  trace.post.push_back(inputs);

  std::int64_t offset = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& spec = net.layers[l];
    const LayerView view = layer_view(net, l, offset);
    Eigen::MatrixXd z = trace.post.back() * view.weights.transpose();
    z.rowwise() += view.bias.transpose();
    trace.post.push_back(activate(z, spec.activation));
    trace.pre.push_back(std::move(z));
    offset += static_cast<std::int64_t>(spec.in_dim) * spec.out_dim + spec.out_dim;
  }
  return trace;
}

Eigen::MatrixXd forward_batch(const Mlp& net,
                              const Eigen::Ref<const Eigen::MatrixXd>& inputs) {
  if (inputs.cols() != net.input_dim())
    throw ShapeError("forward: got " + std::to_string(inputs.cols()) +
                     " input columns, expected " + std::to_string(net.input_dim()));
  Eigen::MatrixXd x = inputs;
  std::int64_t offset = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const LayerSpec& spec = net.layers[l];
    const LayerView view = layer_view(net, l, offset);
    Eigen::MatrixXd z = x * view.weights.transpose();
    z.rowwise() += view.bias.transpose();
    x = activate(z, spec.activation);
    offset += static_cast<std::int64_t>(spec.in_dim) * spec.out_dim + spec.out_dim;
  }
  return x;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& input) {
  const Eigen::MatrixXd row = input.transpose();
  return forward_batch(net, row).row(0).transpose();
}

Gradients backward(const Mlp& net, const ForwardTrace& trace,
                   const Eigen::Ref<const Eigen::MatrixXd>& upstream) {
  if (upstream.rows() != trace.post.front().rows() ||
      upstream.cols() != net.output_dim())
    throw ShapeError("backward: upstream shape mismatch");

  Gradients grads;
  grads.params = Eigen::VectorXd::Zero(net.param_count());

  // Per-layer parameter offsets, filled front to back.
  std::vector<std::int64_t> offsets(net.layers.size());
  std::int64_t offset = 0;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    offsets[l] = offset;
    offset += static_cast<std::int64_t>(net.layers[l].in_dim) * net.layers[l].out_dim +
              net.layers[l].out_dim;
  }

  Eigen::MatrixXd delta = upstream;
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const LayerSpec& spec = net.layers[li];
    delta = (delta.array() *
             activate_grad(trace.pre[li], trace.post[li + 1], spec.activation))
                .matrix();

    RowMajorMutMap w_grad(grads.params.data() + offsets[li], spec.out_dim, spec.in_dim);
    w_grad = delta.transpose() * trace.post[li];
    Eigen::Map<Eigen::VectorXd> b_grad(
        grads.params.data() + offsets[li] +
            static_cast<std::int64_t>(spec.in_dim) * spec.out_dim,
        spec.out_dim);
    b_grad = delta.colwise().sum().transpose();

    const LayerView view = layer_view(net, li, offsets[li]);
    delta = delta * view.weights;  // becomes the gradient w.r.t. layer input
  }
  grads.inputs = std::move(delta);
  return grads;
}

Gradients backward(const Mlp& net, const Eigen::Ref<const Eigen::VectorXd>& input,
                   const Eigen::Ref<const Eigen::VectorXd>& upstream) {
  const Eigen::MatrixXd input_row = input.transpose();
  const Eigen::MatrixXd upstream_row = upstream.transpose();
  const ForwardTrace trace = forward_trace(net, input_row);
  return backward(net, trace, upstream_row);
}

OptimizerState make_optimizer(double learning_rate, std::int64_t n_params) {
  OptimizerState opt;
  opt.learning_rate = learning_rate;
  opt.first_moment = Eigen::VectorXd::Zero(n_params);
  opt.second_moment = Eigen::VectorXd::Zero(n_params);
  return opt;
}

void optimizer_step(OptimizerState& opt, Mlp& net,
                    const Eigen::Ref<const Eigen::VectorXd>& grad) {
  if (grad.size() != net.params.size() || grad.size() != opt.first_moment.size())
    throw ShapeError("optimizer_step: gradient length mismatch");
  if (!grad.allFinite()) throw NumericalFault("non-finite gradient");

  opt.step_count += 1;
  opt.first_moment = opt.beta1 * opt.first_moment + (1.0 - opt.beta1) * grad;
  opt.second_moment =
      opt.beta2 * opt.second_moment + (1.0 - opt.beta2) * grad.cwiseProduct(grad);

  const double bias1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step_count));
  const double bias2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step_count));
  net.params.array() -= opt.learning_rate *
                        (opt.first_moment.array() / bias1) /
                        ((opt.second_moment.array() / bias2).sqrt() + opt.eps);
}

void soft_update(Mlp& target, const Mlp& online, double tau) {
  if (target.layers.size() != online.layers.size() ||
      target.params.size() != online.params.size())
    throw ShapeError("soft_update: layer spec mismatch");
  for (std::size_t i = 0; i < target.layers.size(); ++i) {
    if (target.layers[i].in_dim != online.layers[i].in_dim ||
        target.layers[i].out_dim != online.layers[i].out_dim ||
        target.layers[i].activation != online.layers[i].activation)
      throw ShapeError("soft_update: layer spec mismatch");
  }
  target.params = tau * online.params + (1.0 - tau) * target.params;
}

ActorCritic make_actor_critic(const std::vector<LayerSpec>& actor_layers,
                              const std::vector<LayerSpec>& critic_layers,
                              double lr_actor, double lr_critic, Rng& rng) {
  ActorCritic agent;
  agent.actor = make_mlp(actor_layers, rng);
  agent.critic = make_mlp(critic_layers, rng);
  agent.target_actor = agent.actor;
  agent.target_critic = agent.critic;
  agent.opt_actor = make_optimizer(lr_actor, agent.actor.param_count());
  agent.opt_critic = make_optimizer(lr_critic, agent.critic.param_count());
  return agent;
}

void soft_update_all(ActorCritic& agent, double tau) {
  soft_update(agent.target_actor, agent.actor, tau);
  soft_update(agent.target_critic, agent.critic, tau);
}

}  // namespace huca::net
