#pragma once

#include <utility>

#include "jrt/layers.hpp"

namespace jrt {

// Per global joint, the T_h positions followed by the T_h velocities
// (x_t - x_{t-1}, zero at t = 0): [T_h][N][J][3] -> [NJ][6 T_h].
template <std::floating_point T>
Tensor<T> joint_motion_features(const Tensor<double>& history);

// Shared 2-layer perceptron over joint_motion_features -> [NJ][D].
template <std::floating_point T>
Var<T> encode_joints(const Tensor<double>& history, const Mlp<T>& encoder);

// Shared linear map over the T_h+2 relation channels -> [NJ][NJ][D].
template <std::floating_point T>
Var<T> encode_relations(const Tensor<double>& stacked, const Dense<T>& encoder);

// person_emb[n] + joint_emb[j] for every global joint -> [NJ][D].
// Throws InvalidArgument when N exceeds the person table.
template <std::floating_point T>
Var<T> joint_positions_embedding(const Var<T>& person_emb, const Var<T>& joint_emb,
                                 std::size_t persons, std::size_t joints);

// F_J + PE and F_R + PE_a + PE_b.
template <std::floating_point T>
std::pair<Var<T>, Var<T>> add_positional(const Var<T>& joint_features,
                                         const Var<T>& relation_features, const Var<T>& pe);

}  // namespace jrt
