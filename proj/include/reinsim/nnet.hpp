#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "reinsim/rng.hpp"

namespace reinsim {

enum class Activation { Identity, Tanh, Relu, Softplus };

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Softplus: return "softplus";
  }
  throw std::logic_error("unreachable activation");
}

inline Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  if (name == "softplus") return Activation::Softplus;
  throw std::invalid_argument("unknown activation: " + name);
}

inline double apply_activation(Activation a, double x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Tanh: return std::tanh(x);
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Softplus: return x > 30.0 ? x : std::log1p(std::exp(x));
  }
  throw std::logic_error("unreachable activation");
}

// Derivative at pre-activation `pre` whose activation value is `post`.
inline double activation_grad(Activation a, double pre, double post) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Tanh: return 1.0 - post * post;
    case Activation::Relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::Softplus: return 1.0 / (1.0 + std::exp(-pre));
  }
  throw std::logic_error("unreachable activation");
}

struct DenseLayer {
  int in = 0;
  int out = 0;
  Activation activation = Activation::Identity;
  std::vector<double> weights;  // row-major, out x in
  std::vector<double> biases;   // out
};

/// Fully-connected network with 64-bit parameters.
struct DenseNet {
  std::vector<DenseLayer> layers;

  int input_size() const { return layers.empty() ? 0 : layers.front().in; }
  int output_size() const { return layers.empty() ? 0 : layers.back().out; }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.biases.size();
    return n;
  }
};

// Scaled uniform fan-in init: W ~ U(-1/sqrt(in), 1/sqrt(in)), biases zero.
inline DenseNet make_dense_net(const std::vector<int>& sizes,
                               const std::vector<Activation>& activations, RngStream& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("net needs at least input and output sizes");
  if (activations.size() != sizes.size() - 1) {
    throw std::invalid_argument("need one activation per layer");
  }
  DenseNet net;
  net.layers.resize(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer& layer = net.layers[l];
    layer.in = sizes[l];
    layer.out = sizes[l + 1];
    if (layer.in < 1 || layer.out < 1) throw std::invalid_argument("layer sizes must be >= 1");
    layer.activation = activations[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    layer.weights.resize(static_cast<std::size_t>(layer.in) * layer.out);
    layer.biases.assign(layer.out, 0.0);
    for (double& w : layer.weights) w = rng.uniform(-bound, bound);
  }
  return net;
}

struct ForwardCache {
  // layer_inputs[l] is the activation vector fed into layer l; the final
  // entry is the network output.
  std::vector<std::vector<double>> layer_inputs;
  std::vector<std::vector<double>> pre_activations;
};

inline std::vector<double> forward(const DenseNet& net, std::span<const double> input,
                                   ForwardCache* cache = nullptr) {
  if (net.layers.empty()) throw std::invalid_argument("empty network");
  if (static_cast<int>(input.size()) != net.input_size()) {
    throw std::invalid_argument("input length does not match first layer");
  }
  std::vector<double> current(input.begin(), input.end());
  if (cache) {
    cache->layer_inputs.clear();
    cache->pre_activations.clear();
    cache->layer_inputs.push_back(current);
  }
  for (const DenseLayer& layer : net.layers) {
    std::vector<double> pre(layer.out, 0.0);
    for (int r = 0; r < layer.out; ++r) {
      double acc = layer.biases[r];
      const double* w = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) acc += w[c] * current[c];
      pre[r] = acc;
    }
    std::vector<double> post(layer.out);
    for (int r = 0; r < layer.out; ++r) post[r] = apply_activation(layer.activation, pre[r]);
    if (cache) {
      cache->pre_activations.push_back(std::move(pre));
      cache->layer_inputs.push_back(post);
    }
    current = std::move(post);
  }
  return current;
}

struct NetGradients {
  std::vector<std::vector<double>> weight_grads;
  std::vector<std::vector<double>> bias_grads;
};

inline NetGradients make_gradients(const DenseNet& net) {
  NetGradients g;
  g.weight_grads.reserve(net.layers.size());
  g.bias_grads.reserve(net.layers.size());
  for (const auto& layer : net.layers) {
    g.weight_grads.emplace_back(layer.weights.size(), 0.0);
    g.bias_grads.emplace_back(layer.biases.size(), 0.0);
  }
  return g;
}

inline void zero_gradients(NetGradients& g) {
  for (auto& v : g.weight_grads) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : g.bias_grads) std::fill(v.begin(), v.end(), 0.0);
}

/// Exact reverse-mode pass. Accumulates parameter gradients into `acc`
/// (callers zero it per batch) and returns the gradient w.r.t. the input.
inline std::vector<double> backward_accumulate(const DenseNet& net, const ForwardCache& cache,
                                               std::span<const double> output_grad,
                                               NetGradients& acc) {
  const std::size_t n_layers = net.layers.size();
  if (cache.layer_inputs.size() != n_layers + 1 || cache.pre_activations.size() != n_layers) {
    throw std::invalid_argument("cache does not match network");
  }
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (static_cast<int>(cache.layer_inputs[l].size()) != net.layers[l].in ||
        static_cast<int>(cache.pre_activations[l].size()) != net.layers[l].out) {
      throw std::invalid_argument("cache does not match network");
    }
  }
  if (static_cast<int>(output_grad.size()) != net.output_size()) {
    throw std::invalid_argument("output gradient length mismatch");
  }
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t l = n_layers; l-- > 0;) {
    const DenseLayer& layer = net.layers[l];
    const auto& pre = cache.pre_activations[l];
    const auto& post = cache.layer_inputs[l + 1];
    const auto& in = cache.layer_inputs[l];
    // through the activation
    for (int r = 0; r < layer.out; ++r) {
      delta[r] *= activation_grad(layer.activation, pre[r], post[r]);
    }
    auto& wg = acc.weight_grads[l];
    auto& bg = acc.bias_grads[l];
    std::vector<double> prev(layer.in, 0.0);
    for (int r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      bg[r] += d;
      double* wrow = wg.data() + static_cast<std::size_t>(r) * layer.in;
      const double* w = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) {
        wrow[c] += d * in[c];
        prev[c] += d * w[c];
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

inline NetGradients backward(const DenseNet& net, const ForwardCache& cache,
                             std::span<const double> output_grad,
                             std::vector<double>* input_grad = nullptr) {
  NetGradients acc = make_gradients(net);
  auto dx = backward_accumulate(net, cache, output_grad, acc);
  if (input_grad) *input_grad = std::move(dx);
  return acc;
}

inline void scale_gradients(NetGradients& g, double factor) {
  for (auto& v : g.weight_grads)
    for (double& x : v) x *= factor;
  for (auto& v : g.bias_grads)
    for (double& x : v) x *= factor;
}

inline std::vector<double> get_parameters(const DenseNet& net) {
  std::vector<double> flat;
  flat.reserve(net.parameter_count());
  for (const auto& layer : net.layers) {
    flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
    flat.insert(flat.end(), layer.biases.begin(), layer.biases.end());
  }
  return flat;
}

inline void set_parameters(DenseNet& net, std::span<const double> flat) {
  if (flat.size() != net.parameter_count()) {
    throw std::invalid_argument("parameter vector length mismatch");
  }
  std::size_t pos = 0;
  for (auto& layer : net.layers) {
    std::copy(flat.begin() + pos, flat.begin() + pos + layer.weights.size(),
              layer.weights.begin());
    pos += layer.weights.size();
    std::copy(flat.begin() + pos, flat.begin() + pos + layer.biases.size(),
              layer.biases.begin());
    pos += layer.biases.size();
  }
}

inline void append_gradients(const NetGradients& g, std::vector<double>& flat) {
  for (std::size_t l = 0; l < g.weight_grads.size(); ++l) {
    flat.insert(flat.end(), g.weight_grads[l].begin(), g.weight_grads[l].end());
    flat.insert(flat.end(), g.bias_grads[l].begin(), g.bias_grads[l].end());
  }
}

/// Adam accumulators over a flat parameter vector.
struct OptimState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
};

inline OptimState make_optim_state(std::size_t n_params, double learning_rate) {
  OptimState s;
  s.learning_rate = learning_rate;
  s.first_moment.assign(n_params, 0.0);
  s.second_moment.assign(n_params, 0.0);
  return s;
}

inline void optim_step(OptimState& state, std::span<double> params,
                       std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("optimizer shape mismatch");
  }
  state.step += 1;
  const double b1t = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double b2t = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * grads[i];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[i] * grads[i];
    const double m_hat = m / b1t;
    const double v_hat = v / b2t;
    params[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

inline nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    layers.push_back({{"in", layer.in},
                      {"out", layer.out},
                      {"activation", activation_name(layer.activation)},
                      {"weights", layer.weights},
                      {"biases", layer.biases}});
  }
  return {{"format", "reinsim-densenet"}, {"version", 1}, {"layers", layers}};
}

inline DenseNet net_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "reinsim-densenet") {
    throw std::invalid_argument("not a dense-net checkpoint");
  }
  DenseNet net;
  for (const auto& jl : j.at("layers")) {
    DenseLayer layer;
    layer.in = jl.at("in").get<int>();
    layer.out = jl.at("out").get<int>();
    layer.activation = activation_from_name(jl.at("activation").get<std::string>());
    layer.weights = jl.at("weights").get<std::vector<double>>();
    layer.biases = jl.at("biases").get<std::vector<double>>();
    if (layer.weights.size() != static_cast<std::size_t>(layer.in) * layer.out ||
        layer.biases.size() != static_cast<std::size_t>(layer.out)) {
      throw std::invalid_argument("checkpoint layer shape mismatch");
    }
    net.layers.push_back(std::move(layer));
  }
  for (std::size_t l = 0; l + 1 < net.layers.size(); ++l) {
    if (net.layers[l].out != net.layers[l + 1].in) {
      throw std::invalid_argument("checkpoint layer chain mismatch");
    }
  }
  return net;
}

}  // namespace reinsim
