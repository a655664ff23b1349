#pragma once

#include <utility>
#include <vector>

#include "jrt/fusion.hpp"
#include "jrt/layers.hpp"

namespace jrt {

template <std::floating_point T>
struct Decoders {
  Mlp<T> joint;       // D -> D -> D -> (T_h + T_f) * 3
  Dense<T> relation;  // D -> T_h + T_f
  std::size_t history = 0;
  std::size_t future = 0;

  static Decoders bind(const BoundParams<T>& p, const ModelConfig& cfg);
};

// -> (recon [NJ][T_h*3], pred [NJ][T_f*3])
template <std::floating_point T>
std::pair<Var<T>, Var<T>> decode_joints(const Var<T>& joints, const Decoders<T>& dec);

// -> (recon [NJ][NJ][T_h], pred [NJ][NJ][T_f])
template <std::floating_point T>
std::pair<Var<T>, Var<T>> decode_relations(const Var<T>& relations, const Decoders<T>& dec);

template <std::floating_point T>
struct LossPair {
  Var<T> recon;
  Var<T> pred;
};

// Mean over (joint, frame) of the Euclidean norm of each 3-vector error.
template <std::floating_point T>
Var<T> mean_joint_error(const Var<T>& predicted, const Tensor<T>& target);

// Mean absolute error over all entries.
template <std::floating_point T>
Var<T> mean_abs_error(const Var<T>& predicted, const Tensor<T>& target);

template <std::floating_point T>
struct Targets {
  Tensor<T> joints_history;     // [NJ][T_h*3]
  Tensor<T> joints_future;      // [NJ][T_f*3]
  Tensor<T> relation_history;   // [NJ][NJ][T_h]
  Tensor<T> relation_future;    // [NJ][NJ][T_f]
};

template <std::floating_point T>
LossPair<T> joint_loss_terms(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt);

template <std::floating_point T>
LossPair<T> relation_loss_terms(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt);

// recon + lambda_J * pred
template <std::floating_point T>
Var<T> loss_joint(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt, T lambda_j);

// recon + lambda_R * pred
template <std::floating_point T>
Var<T> loss_relation(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt, T lambda_r);

// Sum over the given states of loss_joint(decode_joints) + loss_relation(decode_relations),
// using the shared decoders.
template <std::floating_point T>
Var<T> loss_deep_supervision(const std::vector<FeatureState<T>>& states, const Decoders<T>& dec,
                             const Targets<T>& gt, T lambda_j, T lambda_r);

}  // namespace jrt
