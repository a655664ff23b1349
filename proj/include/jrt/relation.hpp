#pragma once

#include <cstddef>

#include "jrt/scene.hpp"
#include "jrt/tensor.hpp"

namespace jrt {

// Global joint index = person * J + joint.

// exp(-||x_i^t - x_j^t||) for frames [T'][N][J][3] -> [NJ][NJ][T'].
Tensor<double> distance_tensor(const Tensor<double>& frames);

// Raw pairwise Euclidean distances, same layout as distance_tensor.
Tensor<double> pairwise_distances(const Tensor<double>& frames);

// Block-diagonal bone indicator [NJ][NJ][1]; zero diagonal.
Tensor<double> adjacency(const Skeleton& skeleton, std::size_t persons);

// Bone-path reachability within each person block [NJ][NJ][1]; unit diagonal.
Tensor<double> connectivity(const Skeleton& skeleton, std::size_t persons);

struct RelationTensor {
  Tensor<double> dist;     // [NJ][NJ][T_h]
  Tensor<double> adj;      // [NJ][NJ][1]
  Tensor<double> conn;     // [NJ][NJ][1]
  Tensor<double> stacked;  // [NJ][NJ][T_h + 2]: dist channels, then adj, then conn
};

RelationTensor build_relation_tensor(const Tensor<double>& history, const Skeleton& skeleton);

}  // namespace jrt
