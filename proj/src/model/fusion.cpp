#include "jrt/fusion.hpp"

#include <cmath>

#include "jrt/encoders.hpp"
#include "jrt/error.hpp"

namespace jrt {

template <std::floating_point T>
FusionLayer<T> FusionLayer<T>::bind(const BoundParams<T>& p, const ModelConfig& cfg,
                                    std::size_t layer) {
  const std::string pre = layer_prefix(layer);
  FusionLayer f;
  f.w_q = p(pre + ".attn.w_q");
  f.w_k = p(pre + ".attn.w_k");
  f.w_v = p(pre + ".attn.w_v");
  f.w_o = p(pre + ".attn.w_o");
  f.w_lin = p(pre + ".score.w_lin");
  f.w_quad1 = p(pre + ".score.w_quad1");
  f.w_quad2 = p(pre + ".score.w_quad2");
  f.joint_ffn = Mlp<T>::bind(p, pre + ".joint_ffn", 2);
  f.joint_norm = Norm<T>::bind(p, pre + ".joint_norm");
  f.rel_norm1 = Norm<T>::bind(p, pre + ".rel_norm1");
  f.rel_lu1 = Mlp<T>::bind(p, pre + ".rel_lu1", 2);
  f.rel_norm2 = Norm<T>::bind(p, pre + ".rel_norm2");
  f.rel_lu2 = Mlp<T>::bind(p, pre + ".rel_lu2", 2);
  f.heads = cfg.heads;
  f.quad_dim = cfg.quad_dim;
  return f;
}

template <std::floating_point T>
Var<T> relation_score(const Var<T>& relations, const FusionLayer<T>& layer) {
  const Shape& s = relations.shape();
  if (s.size() != 3 || s[0] != s[1]) {
    throw ShapeError("relation_score: expected [NJ][NJ][D], got " + to_string(s));
  }
  const std::size_t M = s[0];
  const std::size_t H = layer.heads;
  Var<T> lin = ops::linear(relations, layer.w_lin, Var<T>{});
  Var<T> q1 = ops::linear(relations, layer.w_quad1, Var<T>{});
  Var<T> q2 = ops::linear(relations, layer.w_quad2, Var<T>{});
  Var<T> quad = ops::sum(ops::reshape(ops::mul(q1, q2), {M, M, H, layer.quad_dim}), 3);
  return ops::permute(ops::add(lin, quad), {2, 0, 1});
}

template <std::floating_point T>
Var<T> relation_aware_attention(const Var<T>& joints, const Var<T>& relations,
                                const FusionLayer<T>& layer, Tensor<T>* attention) {
  const std::size_t M = joints.dim(0);
  const std::size_t H = layer.heads;
  const std::size_t key_dim = layer.w_q.dim(1);
  if (key_dim % H != 0) throw ShapeError("attention: D_K not divisible by head count");
  const std::size_t dk = key_dim / H;
  if (relations.shape().size() != 3 || relations.dim(0) != M || relations.dim(1) != M) {
    throw ShapeError("attention: relations " + to_string(relations.shape()) + " for " +
                     std::to_string(M) + " joints");
  }
  auto split_heads = [&](const Var<T>& w) {
    return ops::permute(ops::reshape(ops::linear(joints, w, Var<T>{}), {M, H, dk}), {1, 0, 2});
  };
  Var<T> q = split_heads(layer.w_q);
  Var<T> k = split_heads(layer.w_k);
  Var<T> v = split_heads(layer.w_v);
  Var<T> logits = ops::add(ops::bmm(q, k, true), relation_score(relations, layer));
  Var<T> weights = ops::softmax(ops::scale(logits, T{1} / std::sqrt(static_cast<T>(dk))), 2);
  if (attention) *attention = weights.value();
  Var<T> heads = ops::reshape(ops::permute(ops::bmm(weights, v), {1, 0, 2}), {M, key_dim});
  return ops::linear(heads, layer.w_o, Var<T>{});
}

template <std::floating_point T>
Var<T> joint_local_update(const Var<T>& joints, const Var<T>& attn_out, const FusionLayer<T>& layer) {
  Var<T> x = ops::add(joints, attn_out);
  return layer.joint_norm(ops::add(x, layer.joint_ffn(x)));
}

template <std::floating_point T>
Var<T> collect_messages(const Var<T>& joints, const Var<T>& relations) {
  const std::size_t M = joints.dim(0);
  const std::size_t D = joints.dim(1);
  if (relations.shape() != Shape{M, M, D}) {
    throw ShapeError("relation_update: joints " + to_string(joints.shape()) + " with relations " +
                     to_string(relations.shape()));
  }
  Var<T> rows = ops::broadcast_to(ops::reshape(joints, {M, 1, D}), {M, M, D});
  return ops::concat<T>({rows, ops::transpose01(rows), relations, ops::transpose01(relations)}, 2);
}

template <std::floating_point T>
Var<T> relation_update(const Var<T>& joints, const Var<T>& relations, const FusionLayer<T>& layer) {
  Var<T> messages = collect_messages(joints, relations);
  Var<T> r = ops::add(relations, layer.rel_lu1(layer.rel_norm1(messages)));
  return ops::add(r, layer.rel_lu2(layer.rel_norm2(r)));
}

template <std::floating_point T>
std::vector<FeatureState<T>> fusion_stack(const FeatureState<T>& initial, const Var<T>& pe,
                                          const std::vector<FusionLayer<T>>& layers,
                                          std::vector<Tensor<T>>* attention) {
  if (layers.empty()) throw InvalidArgument("fusion_stack: need at least one layer");
  std::vector<FeatureState<T>> states{initial};
  for (const auto& layer : layers) {
    auto [fj, fr] = add_positional(states.back().joints, states.back().relations, pe);
    Tensor<T> weights;
    Var<T> attn = relation_aware_attention(fj, fr, layer, attention ? &weights : nullptr);
    if (attention) attention->push_back(std::move(weights));
    Var<T> next_joints = joint_local_update(fj, attn, layer);
    Var<T> next_relations = relation_update(next_joints, fr, layer);
    states.push_back({next_joints, next_relations});
  }
  return states;
}

#define JRT_INSTANTIATE(T)                                                                       \
  template struct FusionLayer<T>;                                                                \
  template Var<T> relation_score<T>(const Var<T>&, const FusionLayer<T>&);                       \
  template Var<T> relation_aware_attention<T>(const Var<T>&, const Var<T>&, const FusionLayer<T>&, \
                                              Tensor<T>*);                                       \
  template Var<T> joint_local_update<T>(const Var<T>&, const Var<T>&, const FusionLayer<T>&);    \
  template Var<T> collect_messages<T>(const Var<T>&, const Var<T>&);                             \
  template Var<T> relation_update<T>(const Var<T>&, const Var<T>&, const FusionLayer<T>&);       \
  template std::vector<FeatureState<T>> fusion_stack<T>(                                         \
      const FeatureState<T>&, const Var<T>&, const std::vector<FusionLayer<T>>&,                 \
      std::vector<Tensor<T>>*);

JRT_INSTANTIATE(float)
JRT_INSTANTIATE(double)
#undef JRT_INSTANTIATE

}  // namespace jrt
