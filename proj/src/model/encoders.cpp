#include "jrt/encoders.hpp"

#include "jrt/error.hpp"

namespace jrt {

template <std::floating_point T>
Tensor<T> joint_motion_features(const Tensor<double>& history) {
  const Shape& s = history.shape();
  if (s.size() != 4 || s[3] != 3) {
    throw ShapeError("encode_joints: expected history [T_h][N][J][3], got " + to_string(s));
  }
  const std::size_t Th = s[0];
  if (Th < 2) throw InvalidArgument("encode_joints: history needs at least 2 frames");
  const std::size_t M = s[1] * s[2];
  Tensor<T> out({M, 6 * Th});
  for (std::size_t g = 0; g < M; ++g) {
    for (std::size_t t = 0; t < Th; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double x = history[(t * M + g) * 3 + c];
        const double v = t == 0 ? 0.0 : x - history[((t - 1) * M + g) * 3 + c];
        out.at(g, t * 3 + c) = static_cast<T>(x);
        out.at(g, 3 * Th + t * 3 + c) = static_cast<T>(v);
      }
    }
  }
  return out;
}

template <std::floating_point T>
Var<T> encode_joints(const Tensor<double>& history, const Mlp<T>& encoder) {
  return encoder(constant(joint_motion_features<T>(history)));
}

template <std::floating_point T>
Var<T> encode_relations(const Tensor<double>& stacked, const Dense<T>& encoder) {
  if (stacked.rank() != 3 || stacked.dim(0) != stacked.dim(1)) {
    throw ShapeError("encode_relations: expected [NJ][NJ][C], got " + to_string(stacked.shape()));
  }
  return encoder(constant(stacked.cast<T>()));
}

template <std::floating_point T>
Var<T> joint_positions_embedding(const Var<T>& person_emb, const Var<T>& joint_emb,
                                 std::size_t persons, std::size_t joints) {
  if (persons > person_emb.dim(0)) {
    throw InvalidArgument("positional: scene has " + std::to_string(persons) +
                          " persons, embedding table holds " + std::to_string(person_emb.dim(0)));
  }
  if (joints != joint_emb.dim(0)) {
    throw ShapeError("positional: scene has " + std::to_string(joints) +
                     " joints, embedding table holds " + std::to_string(joint_emb.dim(0)));
  }
  const std::size_t D = joint_emb.dim(1);
  Var<T> people = ops::reshape(ops::slice(person_emb, 0, 0, persons), {persons, 1, D});
  return ops::reshape(ops::add(people, joint_emb), {persons * joints, D});
}

template <std::floating_point T>
std::pair<Var<T>, Var<T>> add_positional(const Var<T>& joint_features,
                                         const Var<T>& relation_features, const Var<T>& pe) {
  const std::size_t M = pe.dim(0);
  const std::size_t D = pe.dim(1);
  Var<T> pair_pe = ops::add(ops::reshape(pe, {M, 1, D}), ops::reshape(pe, {1, M, D}));
  return {ops::add(joint_features, pe), ops::add(relation_features, pair_pe)};
}

#define JRT_INSTANTIATE(T)                                                                     \
  template Tensor<T> joint_motion_features<T>(const Tensor<double>&);                          \
  template Var<T> encode_joints<T>(const Tensor<double>&, const Mlp<T>&);                      \
  template Var<T> encode_relations<T>(const Tensor<double>&, const Dense<T>&);                 \
  template Var<T> joint_positions_embedding<T>(const Var<T>&, const Var<T>&, std::size_t,      \
                                               std::size_t);                                   \
  template std::pair<Var<T>, Var<T>> add_positional<T>(const Var<T>&, const Var<T>&, const Var<T>&);

JRT_INSTANTIATE(float)
JRT_INSTANTIATE(double)
#undef JRT_INSTANTIATE

}  // namespace jrt
