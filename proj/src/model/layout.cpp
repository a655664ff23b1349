#include <cmath>
#include <random>

#include "jrt/error.hpp"
#include "jrt/layers.hpp"

namespace jrt {

void ModelConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  need(layers >= 1, "L must be >= 1");
  need(dim >= 1 && heads >= 1 && key_dim >= 1 && quad_dim >= 1 && ffn_dim >= 1,
       "D, D_H, D_K, D_prime, D_ff must be positive");
  need(key_dim % heads == 0, "D_K must be divisible by D_H");
  need(max_persons >= 1 && joints >= 1, "N_max and J must be positive");
  need(history >= 2, "T_h must be >= 2");
  need(future >= 1, "T_f must be >= 1");
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.layers = 2;
  c.dim = 8;
  c.heads = 2;
  c.key_dim = 8;
  c.quad_dim = 8;
  c.ffn_dim = 16;
  c.max_persons = 2;
  c.joints = 3;
  c.history = 4;
  c.future = 2;
  return c;
}

std::string layer_prefix(std::size_t layer) { return "layers." + std::to_string(layer); }

namespace {

void dense(std::vector<BlockSpec>& out, const std::string& prefix, std::size_t in, std::size_t o,
           InitKind init) {
  out.push_back({prefix + ".weight", {in, o}, init});
  out.push_back({prefix + ".bias", {o}, InitKind::Zero});
}

void mlp(std::vector<BlockSpec>& out, const std::string& prefix,
         std::initializer_list<std::size_t> widths, InitKind init = InitKind::Projection) {
  std::vector<std::size_t> w(widths);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    dense(out, prefix + ".fc" + std::to_string(i + 1), w[i], w[i + 1], init);
  }
}

void norm(std::vector<BlockSpec>& out, const std::string& prefix, std::size_t d) {
  out.push_back({prefix + ".gamma", {d}, InitKind::One});
  out.push_back({prefix + ".beta", {d}, InitKind::Zero});
}

}  // namespace

std::vector<BlockSpec> param_layout(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t D = cfg.dim;
  const std::size_t Th = cfg.history;
  std::vector<BlockSpec> out;
  mlp(out, "joint_encoder", {6 * Th, D, D}, InitKind::FanIn);
  out.push_back({"relation_encoder.weight", {Th + 2, D}, InitKind::FanIn});
  out.push_back({"relation_encoder.bias", {D}, InitKind::Zero});
  out.push_back({"embedding.person", {cfg.max_persons, D}, InitKind::Embedding});
  out.push_back({"embedding.joint", {cfg.joints, D}, InitKind::Embedding});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::string p = layer_prefix(l);
    out.push_back({p + ".attn.w_q", {D, cfg.key_dim}, InitKind::Projection});
    out.push_back({p + ".attn.w_k", {D, cfg.key_dim}, InitKind::Projection});
    out.push_back({p + ".attn.w_v", {D, cfg.key_dim}, InitKind::Projection});
    out.push_back({p + ".attn.w_o", {cfg.key_dim, D}, InitKind::Projection});
    out.push_back({p + ".score.w_lin", {D, cfg.heads}, InitKind::Zero});
    out.push_back({p + ".score.w_quad1", {D, cfg.heads * cfg.quad_dim}, InitKind::Zero});
    out.push_back({p + ".score.w_quad2", {D, cfg.heads * cfg.quad_dim}, InitKind::Zero});
    mlp(out, p + ".joint_ffn", {D, cfg.ffn_dim, D});
    norm(out, p + ".joint_norm", D);
    norm(out, p + ".rel_norm1", cfg.message_dim());
    mlp(out, p + ".rel_lu1", {cfg.message_dim(), cfg.ffn_dim, D});
    norm(out, p + ".rel_norm2", D);
    mlp(out, p + ".rel_lu2", {D, cfg.ffn_dim, D});
  }
  mlp(out, "joint_decoder", {D, D, D, (cfg.history + cfg.future) * 3}, InitKind::FanIn);
  out.push_back({"relation_decoder.weight", {D, cfg.history + cfg.future}, InitKind::FanIn});
  out.push_back({"relation_decoder.bias", {cfg.history + cfg.future}, InitKind::Zero});
  return out;
}

template <std::floating_point T>
ParamSet<T> init_params(const ModelConfig& cfg, std::uint64_t seed, InitMode mode) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  ParamSet<T> params;
  for (const auto& spec : param_layout(cfg)) {
    Tensor<T> t(spec.shape);
    const double fan_in = spec.shape.size() == 2 ? static_cast<double>(spec.shape[0]) : 1.0;
    for (auto& v : t.data()) {
      double x = 0;
      if (mode == InitMode::Standard) {
        switch (spec.init) {
          case InitKind::Projection:
          case InitKind::Embedding:
            x = 0.02 * gauss(rng);
            break;
          case InitKind::FanIn:
            x = gauss(rng) / std::sqrt(fan_in);
            break;
          case InitKind::Zero:
            x = 0;
            break;
          case InitKind::One:
            x = 1;
            break;
        }
      } else {
        switch (spec.init) {
          case InitKind::Projection:
          case InitKind::FanIn:
            x = gauss(rng) / std::sqrt(fan_in);
            break;
          case InitKind::Embedding:
            x = 0.3 * gauss(rng);
            break;
          case InitKind::Zero:
            x = spec.shape.size() == 2 ? 0.5 * gauss(rng) / std::sqrt(fan_in) : 0.1 * gauss(rng);
            break;
          case InitKind::One:
            x = 1 + 0.1 * gauss(rng);
            break;
        }
      }
      v = static_cast<T>(x);
    }
    params.add(spec.name, std::move(t));
  }
  return params;
}

template ParamSet<float> init_params<float>(const ModelConfig&, std::uint64_t, InitMode);
template ParamSet<double> init_params<double>(const ModelConfig&, std::uint64_t, InitMode);

}  // namespace jrt
