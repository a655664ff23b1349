#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jrt/autodiff.hpp"
#include "jrt/bound.hpp"
#include "jrt/model_config.hpp"
#include "jrt/params.hpp"

namespace jrt {

// How a block is initialized by init_params(..., InitMode::Standard).
enum class InitKind {
  Projection,  // N(0, 0.02^2)
  Embedding,   // N(0, 0.02^2)
  FanIn,       // N(0, 1/fan_in), encoder and decoder weights
  Zero,
  One,
};

struct BlockSpec {
  std::string name;
  Shape shape;
  InitKind init;
};

// Every learnable block of the model, in stable order.
std::vector<BlockSpec> param_layout(const ModelConfig& cfg);

enum class InitMode {
  Standard,  // zero biases and relation-score weights, unit norms
  Random,    // every block random and nonzero; used by gradient checks
};

template <std::floating_point T>
ParamSet<T> init_params(const ModelConfig& cfg, std::uint64_t seed,
                        InitMode mode = InitMode::Standard);

std::string layer_prefix(std::size_t layer);

template <std::floating_point T>
struct Dense {
  Var<T> weight;
  Var<T> bias;
  Var<T> operator()(const Var<T>& x) const { return ops::linear(x, weight, bias); }
};

// Stack of Dense layers with ReLU between them (not after the last).
template <std::floating_point T>
struct Mlp {
  std::vector<Dense<T>> layers;

  Var<T> operator()(const Var<T>& x) const {
    Var<T> h = x;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      h = layers[i](h);
      if (i + 1 < layers.size()) h = ops::relu(h);
    }
    return h;
  }

  static Mlp bind(const BoundParams<T>& p, const std::string& prefix, std::size_t depth) {
    Mlp m;
    for (std::size_t i = 0; i < depth; ++i) {
      const std::string base = prefix + ".fc" + std::to_string(i + 1);
      m.layers.push_back({p(base + ".weight"), p(base + ".bias")});
    }
    return m;
  }
};

template <std::floating_point T>
struct Norm {
  Var<T> gamma;
  Var<T> beta;
  Var<T> operator()(const Var<T>& x) const { return ops::layer_norm(x, gamma, beta, T(1e-5)); }

  static Norm bind(const BoundParams<T>& p, const std::string& prefix) {
    return {p(prefix + ".gamma"), p(prefix + ".beta")};
  }
};

}  // namespace jrt
