#pragma once

// Hand-rolled generators and scalar-loop oracles shared by the test binaries.

#include <cmath>
#include <algorithm>
#include <functional>
#include <random>
#include <vector>

#include "jrt/autodiff.hpp"
#include "jrt/scene.hpp"
#include "jrt/tensor.hpp"

namespace jrt::test {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = -1, double hi = 1) {
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  template <std::floating_point T = double>
  Tensor<T> tensor(const Shape& shape, double lo = -1, double hi = 1) {
    Tensor<T> t(shape);
    for (auto& v : t.data()) v = static_cast<T>(uniform(lo, hi));
    return t;
  }

  // Values with |x| >= margin, for ops with a kink at zero.
  Tensor<double> away_from_zero(const Shape& shape, double margin = 0.1) {
    Tensor<double> t(shape);
    for (auto& v : t.data()) {
      const double m = uniform(margin, 1);
      v = uniform() < 0 ? -m : m;
    }
    return t;
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), rng_);
    return p;
  }

  // Random positions on a template skeleton.
  SceneSequence scene(std::size_t persons, std::size_t joints, std::size_t frames,
                      double spread = 2) {
    Tensor<double> pos({frames, persons, joints, 3});
    for (auto& v : pos.data()) v = uniform(-spread, spread);
    return SceneSequence(Skeleton::template_skeleton(joints), persons, 15, std::move(pos));
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// C = A B, naive triple loop.
inline Tensor<double> matmul_oracle(const Tensor<double>& a, const Tensor<double>& b) {
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<double> c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0;
      for (std::size_t p = 0; p < k; ++p) s += a.at(i, p) * b.at(p, j);
      c.at(i, j) = s;
    }
  }
  return c;
}

// Row-wise softmax of a [rows][cols] matrix.
inline std::vector<double> softmax_row(const std::vector<double>& x) {
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> e(x.size());
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += e[i] = std::exp(x[i] - mx);
  for (double& v : e) v /= s;
  return e;
}

using MultiOp = std::function<Var<double>(const std::vector<Var<double>>&)>;

// Central-difference check of d sum(op(inputs) * w) / d inputs for a fixed
// random weight tensor w. Returns the worst relative error over all inputs.
inline double op_grad_error(const MultiOp& op, std::vector<Tensor<double>> inputs,
                            std::uint64_t seed = 1, double h = 1e-6) {
  auto consts = [](const std::vector<Tensor<double>>& xs) {
    std::vector<Var<double>> v;
    for (const auto& x : xs) v.push_back(constant(x));
    return v;
  };
  Gen g(seed);
  const Tensor<double> w = g.tensor(op(consts(inputs)).shape());
  auto value = [&]() {
    const Tensor<double> out = op(consts(inputs)).value();
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
    return s;
  };
  Tape<double> tape;
  std::vector<Var<double>> leaves;
  for (const auto& x : inputs) leaves.push_back(tape.leaf(x));
  tape.backward(ops::sum_all(ops::mul(op(leaves), constant(w))));
  double worst = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const Tensor<double> analytic =
        leaves[k].grad().empty() ? Tensor<double>(inputs[k].shape()) : leaves[k].grad();
    for (std::size_t i = 0; i < inputs[k].size(); ++i) {
      const double orig = inputs[k][i];
      inputs[k][i] = orig + h;
      const double fp = value();
      inputs[k][i] = orig - h;
      const double fm = value();
      inputs[k][i] = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

inline double op_grad_error(const std::function<Var<double>(const Var<double>&)>& op,
                            const Tensor<double>& x, std::uint64_t seed = 1, double h = 1e-6) {
  return op_grad_error([&](const std::vector<Var<double>>& v) { return op(v[0]); },
                       std::vector<Tensor<double>>{x}, seed, h);
}

}  // namespace jrt::test
