#include "jrt/relation.hpp"

#include <cmath>
#include <numeric>

#include "jrt/error.hpp"

namespace jrt {

namespace {

void check_frames(const Tensor<double>& frames) {
  const Shape& s = frames.shape();
  if (s.size() != 4 || s[3] != 3) {
    throw ShapeError("relation: expected frames [T][N][J][3], got " + to_string(s));
  }
}

}  // namespace

Tensor<double> pairwise_distances(const Tensor<double>& frames) {
  check_frames(frames);
  const std::size_t T = frames.dim(0);
  const std::size_t M = frames.dim(1) * frames.dim(2);
  Tensor<double> out({M, M, T});
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = frames.raw() + t * M * 3;
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = i + 1; j < M; ++j) {
        const double dx = x[i * 3] - x[j * 3];
        const double dy = x[i * 3 + 1] - x[j * 3 + 1];
        const double dz = x[i * 3 + 2] - x[j * 3 + 2];
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        out.at(i, j, t) = d;
        out.at(j, i, t) = d;
      }
    }
  }
  return out;
}

Tensor<double> distance_tensor(const Tensor<double>& frames) {
  Tensor<double> d = pairwise_distances(frames);
  for (double& v : d.data()) v = std::exp(-v);
  return d;
}

Tensor<double> adjacency(const Skeleton& skeleton, std::size_t persons) {
  skeleton.validate();
  const std::size_t J = skeleton.joints;
  const std::size_t M = persons * J;
  Tensor<double> out({M, M, 1});
  for (std::size_t n = 0; n < persons; ++n) {
    for (auto [a, b] : skeleton.bones) {
      out.at(n * J + a, n * J + b, 0) = 1;
      out.at(n * J + b, n * J + a, 0) = 1;
    }
  }
  return out;
}

Tensor<double> connectivity(const Skeleton& skeleton, std::size_t persons) {
  skeleton.validate();
  const std::size_t J = skeleton.joints;
  // Union-find over one person's joints; every person shares the skeleton.
  std::vector<std::size_t> root(J);
  std::iota(root.begin(), root.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (root[x] != x) {
      root[x] = root[root[x]];
      x = root[x];
    }
    return x;
  };
  for (auto [a, b] : skeleton.bones) root[find(a)] = find(b);

  const std::size_t M = persons * J;
  Tensor<double> out({M, M, 1});
  for (std::size_t n = 0; n < persons; ++n) {
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = 0; b < J; ++b) {
        if (find(a) == find(b)) out.at(n * J + a, n * J + b, 0) = 1;
      }
    }
  }
  return out;
}

RelationTensor build_relation_tensor(const Tensor<double>& history, const Skeleton& skeleton) {
  check_frames(history);
  if (history.dim(2) != skeleton.joints) {
    throw ShapeError("relation: history has " + std::to_string(history.dim(2)) +
                     " joints, skeleton has " + std::to_string(skeleton.joints));
  }
  RelationTensor r;
  r.dist = distance_tensor(history);
  r.adj = adjacency(skeleton, history.dim(1));
  r.conn = connectivity(skeleton, history.dim(1));
  const std::size_t M = r.dist.dim(0);
  const std::size_t T = r.dist.dim(2);
  r.stacked = Tensor<double>({M, M, T + 2});
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      for (std::size_t t = 0; t < T; ++t) r.stacked.at(i, j, t) = r.dist.at(i, j, t);
      r.stacked.at(i, j, T) = r.adj.at(i, j, 0);
      r.stacked.at(i, j, T + 1) = r.conn.at(i, j, 0);
    }
  }
  return r;
}

}  // namespace jrt
