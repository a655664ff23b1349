#include <cmath>

#include "jrt/error.hpp"
#include "jrt/train.hpp"

namespace jrt {

template <std::floating_point T>
void adamw_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& state, double lr,
                const AdamWHyper& hyper) {
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v)) {
    throw ShapeError("adamw: gradient or moment layout differs from parameters");
  }
  for (const auto& g : grads.blocks()) {
    if (!g.value.all_finite()) throw NonFiniteError("adamw: non-finite gradient in block " + g.name);
  }
  const std::uint64_t t = state.step + 1;
  const T b1 = static_cast<T>(hyper.beta1);
  const T b2 = static_cast<T>(hyper.beta2);
  const T c1 = static_cast<T>(1 - std::pow(hyper.beta1, static_cast<double>(t)));
  const T c2 = static_cast<T>(1 - std::pow(hyper.beta2, static_cast<double>(t)));
  const T eps = static_cast<T>(hyper.eps);
  const T wd = static_cast<T>(hyper.weight_decay);
  const T rate = static_cast<T>(lr);

  for (std::size_t b = 0; b < params.size(); ++b) {
    auto theta = params.blocks()[b].value.data();
    auto g = grads.blocks()[b].value.data();
    auto m = state.m.blocks()[b].value.data();
    auto v = state.v.blocks()[b].value.data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1 - b1) * g[i];
      v[i] = b2 * v[i] + (1 - b2) * g[i] * g[i];
      const T mh = m[i] / c1;
      const T vh = v[i] / c2;
      T step = mh / (std::sqrt(vh) + eps);
      // 0/0 when g, m, v are all zero and eps is zero.
      if (mh == 0) step = 0;
      theta[i] -= rate * (step + wd * theta[i]);
    }
  }
  state.step = t;
}

template void adamw_step<float>(ParamSet<float>&, const ParamSet<float>&, AdamState<float>&,
                                double, const AdamWHyper&);
template void adamw_step<double>(ParamSet<double>&, const ParamSet<double>&, AdamState<double>&,
                                 double, const AdamWHyper&);

}  // namespace jrt
