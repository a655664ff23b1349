#include "jrt/heads.hpp"

#include "jrt/error.hpp"

namespace jrt {

template <std::floating_point T>
Decoders<T> Decoders<T>::bind(const BoundParams<T>& p, const ModelConfig& cfg) {
  Decoders d;
  d.joint = Mlp<T>::bind(p, "joint_decoder", 3);
  d.relation = {p("relation_decoder.weight"), p("relation_decoder.bias")};
  d.history = cfg.history;
  d.future = cfg.future;
  return d;
}

template <std::floating_point T>
std::pair<Var<T>, Var<T>> decode_joints(const Var<T>& joints, const Decoders<T>& dec) {
  if (joints.shape().size() != 2) {
    throw ShapeError("decode_joints: expected [NJ][D], got " + to_string(joints.shape()));
  }
  Var<T> out = dec.joint(joints);
  const std::size_t split = dec.history * 3;
  return {ops::slice(out, 1, 0, split), ops::slice(out, 1, split, out.dim(1))};
}

template <std::floating_point T>
std::pair<Var<T>, Var<T>> decode_relations(const Var<T>& relations, const Decoders<T>& dec) {
  if (relations.shape().size() != 3) {
    throw ShapeError("decode_relations: expected [NJ][NJ][D], got " + to_string(relations.shape()));
  }
  Var<T> out = dec.relation(relations);
  return {ops::slice(out, 2, 0, dec.history), ops::slice(out, 2, dec.history, out.dim(2))};
}

template <std::floating_point T>
Var<T> mean_joint_error(const Var<T>& predicted, const Tensor<T>& target) {
  if (predicted.shape() != target.shape() || predicted.shape().size() != 2 ||
      predicted.dim(1) % 3 != 0) {
    throw ShapeError("joint loss: prediction " + to_string(predicted.shape()) + " vs target " +
                     to_string(target.shape()));
  }
  const std::size_t M = predicted.dim(0);
  const std::size_t frames = predicted.dim(1) / 3;
  Var<T> diff = ops::reshape(ops::sub(predicted, constant(target)), {M, frames, 3});
  return ops::mean_all(ops::norm_l2(diff));
}

template <std::floating_point T>
Var<T> mean_abs_error(const Var<T>& predicted, const Tensor<T>& target) {
  if (predicted.shape() != target.shape()) {
    throw ShapeError("relation loss: prediction " + to_string(predicted.shape()) + " vs target " +
                     to_string(target.shape()));
  }
  return ops::mean_all(ops::abs(ops::sub(predicted, constant(target))));
}

template <std::floating_point T>
LossPair<T> joint_loss_terms(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt) {
  return {mean_joint_error(recon, gt.joints_history), mean_joint_error(pred, gt.joints_future)};
}

template <std::floating_point T>
LossPair<T> relation_loss_terms(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt) {
  return {mean_abs_error(recon, gt.relation_history), mean_abs_error(pred, gt.relation_future)};
}

template <std::floating_point T>
Var<T> loss_joint(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt, T lambda_j) {
  auto terms = joint_loss_terms(recon, pred, gt);
  return ops::add(terms.recon, ops::scale(terms.pred, lambda_j));
}

template <std::floating_point T>
Var<T> loss_relation(const Var<T>& recon, const Var<T>& pred, const Targets<T>& gt, T lambda_r) {
  auto terms = relation_loss_terms(recon, pred, gt);
  return ops::add(terms.recon, ops::scale(terms.pred, lambda_r));
}

template <std::floating_point T>
Var<T> loss_deep_supervision(const std::vector<FeatureState<T>>& states, const Decoders<T>& dec,
                             const Targets<T>& gt, T lambda_j, T lambda_r) {
  if (states.empty()) throw InvalidArgument("deep supervision: no layer states");
  Var<T> total;
  for (const auto& s : states) {
    auto [jr, jp] = decode_joints(s.joints, dec);
    auto [rr, rp] = decode_relations(s.relations, dec);
    Var<T> term = ops::add(loss_joint(jr, jp, gt, lambda_j), loss_relation(rr, rp, gt, lambda_r));
    total = total.valid() ? ops::add(total, term) : term;
  }
  return total;
}

#define JRT_INSTANTIATE(T)                                                                      \
  template struct Decoders<T>;                                                                  \
  template std::pair<Var<T>, Var<T>> decode_joints<T>(const Var<T>&, const Decoders<T>&);       \
  template std::pair<Var<T>, Var<T>> decode_relations<T>(const Var<T>&, const Decoders<T>&);    \
  template Var<T> mean_joint_error<T>(const Var<T>&, const Tensor<T>&);                         \
  template Var<T> mean_abs_error<T>(const Var<T>&, const Tensor<T>&);                           \
  template LossPair<T> joint_loss_terms<T>(const Var<T>&, const Var<T>&, const Targets<T>&);    \
  template LossPair<T> relation_loss_terms<T>(const Var<T>&, const Var<T>&, const Targets<T>&); \
  template Var<T> loss_joint<T>(const Var<T>&, const Var<T>&, const Targets<T>&, T);            \
  template Var<T> loss_relation<T>(const Var<T>&, const Var<T>&, const Targets<T>&, T);         \
  template Var<T> loss_deep_supervision<T>(const std::vector<FeatureState<T>>&,                 \
                                           const Decoders<T>&, const Targets<T>&, T, T);

JRT_INSTANTIATE(float)
JRT_INSTANTIATE(double)
#undef JRT_INSTANTIATE

}  // namespace jrt
