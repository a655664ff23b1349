#pragma once

#include <vector>

#include "jrt/layers.hpp"

namespace jrt {

template <std::floating_point T>
struct FusionLayer {
  Var<T> w_q, w_k, w_v, w_o;
  Var<T> w_lin, w_quad1, w_quad2;
  Mlp<T> joint_ffn;
  Norm<T> joint_norm;
  Norm<T> rel_norm1;
  Mlp<T> rel_lu1;
  Norm<T> rel_norm2;
  Mlp<T> rel_lu2;
  std::size_t heads = 1;
  std::size_t quad_dim = 1;

  static FusionLayer bind(const BoundParams<T>& p, const ModelConfig& cfg, std::size_t layer);
};

template <std::floating_point T>
struct FeatureState {
  Var<T> joints;     // [NJ][D]
  Var<T> relations;  // [NJ][NJ][D]
};

// Per head h: F_R W_lin [h] + sum_d' (F_R W_q1 * F_R W_q2)[h][d'] -> [D_H][NJ][NJ].
template <std::floating_point T>
Var<T> relation_score(const Var<T>& relations, const FusionLayer<T>& layer);

// softmax((Q K^T + score) / sqrt(D_K / D_H)) V per head, heads concatenated,
// projected by W_O. When `attention` is non-null the post-softmax
// [D_H][NJ][NJ] weights are copied into it.
template <std::floating_point T>
Var<T> relation_aware_attention(const Var<T>& joints, const Var<T>& relations,
                                const FusionLayer<T>& layer, Tensor<T>* attention = nullptr);

// x = F_J + attention output; LayerNorm(x + FFN(x)).
template <std::floating_point T>
Var<T> joint_local_update(const Var<T>& joints, const Var<T>& attn_out, const FusionLayer<T>& layer);

// M = [F_J(i), F_J(j), F_R(i,j), F_R(j,i)];
// F_R += LU1(Norm(M)); F_R += LU2(Norm(F_R)).
template <std::floating_point T>
Var<T> relation_update(const Var<T>& joints, const Var<T>& relations, const FusionLayer<T>& layer);

// The message tensor M alone, [NJ][NJ][4D].
template <std::floating_point T>
Var<T> collect_messages(const Var<T>& joints, const Var<T>& relations);

// States 0..L: index 0 is the encoder output, index l+1 the output of
// layer l. Positional embeddings are added at the input of every layer.
template <std::floating_point T>
std::vector<FeatureState<T>> fusion_stack(const FeatureState<T>& initial, const Var<T>& pe,
                                          const std::vector<FusionLayer<T>>& layers,
                                          std::vector<Tensor<T>>* attention = nullptr);

}  // namespace jrt
