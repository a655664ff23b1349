#pragma once

#include <string>
#include <unordered_map>

#include "jrt/autodiff.hpp"
#include "jrt/params.hpp"

namespace jrt {

// Parameter blocks wrapped as graph variables for one forward pass:
// tracked leaves on a tape (training, gradient checks) or constants
// (inference).
template <std::floating_point T>
class BoundParams {
 public:
  static BoundParams track(Tape<T>& tape, const ParamSet<T>& params) {
    BoundParams b;
    for (const auto& blk : params.blocks()) b.vars_.emplace(blk.name, tape.leaf(blk.value, true));
    return b;
  }

  static BoundParams constants(const ParamSet<T>& params) {
    BoundParams b;
    for (const auto& blk : params.blocks()) b.vars_.emplace(blk.name, constant(blk.value));
    return b;
  }

  const Var<T>& operator()(const std::string& name) const {
    auto it = vars_.find(name);
    if (it == vars_.end()) throw InvalidArgument("model: missing parameter block " + name);
    return it->second;
  }

  // Adds the gradient of every tracked block into `grads` (same layout).
  void accumulate_grads(ParamSet<T>& grads) const {
    for (auto& blk : grads.blocks()) {
      const Var<T>& v = (*this)(blk.name);
      if (v.grad().empty()) continue;
      auto dst = blk.value.data();
      auto src = v.grad().data();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }

 private:
  std::unordered_map<std::string, Var<T>> vars_;
};

}  // namespace jrt
