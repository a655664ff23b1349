#pragma once

// Full forward pass: encoders -> fusion stack -> decoders -> losses.

#include <vector>

#include "jrt/bound.hpp"
#include "jrt/fusion.hpp"
#include "jrt/heads.hpp"
#include "jrt/model_config.hpp"
#include "jrt/scene.hpp"

namespace jrt {

// One scene cut into model inputs and supervision targets.
struct Sample {
  std::size_t persons = 0;
  Skeleton skeleton;
  Tensor<double> history;           // [T_h][N][J][3], normalized
  Tensor<double> future;            // [T_f][N][J][3], normalized
  Tensor<double> relations;         // [NJ][NJ][T_h + 2]
  Tensor<double> joints_history;    // [NJ][T_h*3]
  Tensor<double> joints_future;     // [NJ][T_f*3]
  Tensor<double> relation_history;  // [NJ][NJ][T_h], in the configured target space
  Tensor<double> relation_future;   // [NJ][NJ][T_f]
  Vec3 offset{0, 0, 0};

  template <std::floating_point T>
  Targets<T> targets() const {
    return {joints_history.cast<T>(), joints_future.cast<T>(), relation_history.cast<T>(),
            relation_future.cast<T>()};
  }
};

// [T][N][J][3] -> [NJ][T*3]
Tensor<double> flatten_frames(const Tensor<double>& frames);
// Inverse of flatten_frames for a known person/joint count.
Tensor<double> unflatten_frames(const Tensor<double>& flat, std::size_t persons, std::size_t joints);

// Throws InvalidArgument unless scene frames == history + future.
Sample prepare_sample(const SceneSequence& scene, const SplitSpec& split, RelTargetSpace space,
                      bool normalize_scene = true);

struct LossBreakdown {
  double joint_recon = 0;
  double joint_pred = 0;
  double rel_recon = 0;
  double rel_pred = 0;
  double deep_sup = 0;
  double total = 0;

  // ((((joint_recon + lambda_J*joint_pred) + rel_recon) + lambda_R*rel_pred) + deep_sup),
  // evaluated in T, the same order the graph uses.
  template <std::floating_point T>
  static T combine(T joint_recon, T joint_pred, T rel_recon, T rel_pred, T deep_sup,
                   const LossWeights& w) {
    const T a = joint_recon + static_cast<T>(w.joint) * joint_pred;
    const T b = a + rel_recon;
    const T c = b + static_cast<T>(w.relation) * rel_pred;
    return c + deep_sup;
  }
};

struct Prediction {
  Tensor<double> recon_x;  // [NJ][T_h*3]
  Tensor<double> pred_y;   // [NJ][T_f*3]
  Tensor<double> recon_d;  // [NJ][NJ][T_h]
  Tensor<double> pred_d;   // [NJ][NJ][T_f]
  Vec3 offset{0, 0, 0};
};

struct ForwardOptions {
  bool with_loss = true;
  bool keep_attention = false;
};

template <std::floating_point T>
struct ForwardResult {
  Var<T> recon_x, pred_y, recon_d, pred_d;
  std::vector<FeatureState<T>> states;  // 0..L
  Var<T> joint_recon, joint_pred, rel_recon, rel_pred, deep_sup, total;
  std::vector<Tensor<T>> attention;  // per layer, [D_H][NJ][NJ]

  LossBreakdown breakdown() const;
  Prediction prediction(const Vec3& offset) const;
};

template <std::floating_point T>
ForwardResult<T> forward(const BoundParams<T>& params, const ModelConfig& cfg, const Sample& sample,
                         const LossWeights& weights, const ForwardOptions& options = {});

template <std::floating_point T>
Prediction predict(const ParamSet<T>& params, const ModelConfig& cfg, const Sample& sample);

// Checks that a sample fits the configured model; throws InvalidArgument.
void check_sample(const ModelConfig& cfg, const Sample& sample);

}  // namespace jrt
