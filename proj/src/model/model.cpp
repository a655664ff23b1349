#include "jrt/model.hpp"

#include "jrt/encoders.hpp"
#include "jrt/error.hpp"
#include "jrt/relation.hpp"

namespace jrt {

Tensor<double> flatten_frames(const Tensor<double>& frames) {
  const Shape& s = frames.shape();
  if (s.size() != 4 || s[3] != 3) {
    throw ShapeError("flatten_frames: expected [T][N][J][3], got " + to_string(s));
  }
  const std::size_t T = s[0], M = s[1] * s[2];
  Tensor<double> out({M, T * 3});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t g = 0; g < M; ++g) {
      for (std::size_t c = 0; c < 3; ++c) out.at(g, t * 3 + c) = frames[(t * M + g) * 3 + c];
    }
  }
  return out;
}

Tensor<double> unflatten_frames(const Tensor<double>& flat, std::size_t persons, std::size_t joints) {
  const std::size_t M = persons * joints;
  if (flat.rank() != 2 || flat.dim(0) != M || flat.dim(1) % 3 != 0) {
    throw ShapeError("unflatten_frames: " + to_string(flat.shape()) + " for " +
                     std::to_string(persons) + "x" + std::to_string(joints) + " joints");
  }
  const std::size_t T = flat.dim(1) / 3;
  Tensor<double> out({T, persons, joints, 3});
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t g = 0; g < M; ++g) {
      for (std::size_t c = 0; c < 3; ++c) out[(t * M + g) * 3 + c] = flat.at(g, t * 3 + c);
    }
  }
  return out;
}

Sample prepare_sample(const SceneSequence& scene, const SplitSpec& split, RelTargetSpace space,
                      bool normalize_scene) {
  split.validate();
  if (scene.frames() != split.total()) {
    throw InvalidArgument("sample: scene has " + std::to_string(scene.frames()) +
                          " frames, split needs " + std::to_string(split.history) + "+" +
                          std::to_string(split.future));
  }
  Sample s;
  s.persons = scene.persons();
  s.skeleton = scene.skeleton();
  const SceneSequence* src = &scene;
  SceneSequence normalized;
  if (normalize_scene) {
    auto [n, offset] = normalize(scene);
    normalized = std::move(n);
    s.offset = offset;
    src = &normalized;
  }
  s.history = src->frame_range(0, split.history);
  s.future = src->frame_range(split.history, split.total());
  s.relations = build_relation_tensor(s.history, s.skeleton).stacked;
  s.joints_history = flatten_frames(s.history);
  s.joints_future = flatten_frames(s.future);
  if (space == RelTargetSpace::Exp) {
    s.relation_history = distance_tensor(s.history);
    s.relation_future = distance_tensor(s.future);
  } else {
    s.relation_history = pairwise_distances(s.history);
    s.relation_future = pairwise_distances(s.future);
  }
  return s;
}

void check_sample(const ModelConfig& cfg, const Sample& sample) {
  const Shape& h = sample.history.shape();
  if (h.size() != 4 || h[0] != cfg.history || h[2] != cfg.joints) {
    throw InvalidArgument("sample: history " + to_string(h) + " does not fit T_h=" +
                          std::to_string(cfg.history) + ", J=" + std::to_string(cfg.joints));
  }
  if (sample.future.dim(0) != cfg.future) {
    throw InvalidArgument("sample: future has " + std::to_string(sample.future.dim(0)) +
                          " frames, model predicts " + std::to_string(cfg.future));
  }
  if (sample.persons > cfg.max_persons) {
    throw InvalidArgument("sample: " + std::to_string(sample.persons) + " persons exceeds N_max=" +
                          std::to_string(cfg.max_persons));
  }
}

namespace {

template <std::floating_point T>
double scalar(const Var<T>& v) {
  return static_cast<double>(v.value()[0]);
}

}  // namespace

template <std::floating_point T>
LossBreakdown ForwardResult<T>::breakdown() const {
  LossBreakdown b;
  b.joint_recon = scalar(joint_recon);
  b.joint_pred = scalar(joint_pred);
  b.rel_recon = scalar(rel_recon);
  b.rel_pred = scalar(rel_pred);
  b.deep_sup = scalar(deep_sup);
  b.total = scalar(total);
  return b;
}

template <std::floating_point T>
Prediction ForwardResult<T>::prediction(const Vec3& offset) const {
  Prediction p;
  p.recon_x = recon_x.value().template cast<double>();
  p.pred_y = pred_y.value().template cast<double>();
  p.recon_d = recon_d.value().template cast<double>();
  p.pred_d = pred_d.value().template cast<double>();
  p.offset = offset;
  return p;
}

template <std::floating_point T>
ForwardResult<T> forward(const BoundParams<T>& params, const ModelConfig& cfg, const Sample& sample,
                         const LossWeights& weights, const ForwardOptions& options) {
  check_sample(cfg, sample);
  const std::size_t N = sample.persons;
  const std::size_t J = cfg.joints;

  FeatureState<T> initial{
      encode_joints<T>(sample.history, Mlp<T>::bind(params, "joint_encoder", 2)),
      encode_relations<T>(sample.relations,
                          {params("relation_encoder.weight"), params("relation_encoder.bias")})};
  Var<T> pe = joint_positions_embedding(params("embedding.person"), params("embedding.joint"), N, J);

  std::vector<FusionLayer<T>> layers;
  for (std::size_t l = 0; l < cfg.layers; ++l) layers.push_back(FusionLayer<T>::bind(params, cfg, l));

  ForwardResult<T> r;
  r.states = fusion_stack(initial, pe, layers, options.keep_attention ? &r.attention : nullptr);

  const Decoders<T> dec = Decoders<T>::bind(params, cfg);
  std::tie(r.recon_x, r.pred_y) = decode_joints(r.states.back().joints, dec);
  std::tie(r.recon_d, r.pred_d) = decode_relations(r.states.back().relations, dec);
  if (!options.with_loss) return r;

  const Targets<T> gt = sample.targets<T>();
  const T lj = static_cast<T>(weights.joint);
  const T lr = static_cast<T>(weights.relation);
  auto jt = joint_loss_terms(r.recon_x, r.pred_y, gt);
  auto rt = relation_loss_terms(r.recon_d, r.pred_d, gt);
  r.joint_recon = jt.recon;
  r.joint_pred = jt.pred;
  r.rel_recon = rt.recon;
  r.rel_pred = rt.pred;
  const std::vector<FeatureState<T>> inputs(r.states.begin(), r.states.end() - 1);
  r.deep_sup = loss_deep_supervision(inputs, dec, gt, lj, lr);
  Var<T> total = ops::add(r.joint_recon, ops::scale(r.joint_pred, lj));
  total = ops::add(total, r.rel_recon);
  total = ops::add(total, ops::scale(r.rel_pred, lr));
  r.total = ops::add(total, r.deep_sup);
  return r;
}

template <std::floating_point T>
Prediction predict(const ParamSet<T>& params, const ModelConfig& cfg, const Sample& sample) {
  auto bound = BoundParams<T>::constants(params);
  ForwardOptions opts;
  opts.with_loss = false;
  return forward(bound, cfg, sample, LossWeights{}, opts).prediction(sample.offset);
}

template struct ForwardResult<float>;
template struct ForwardResult<double>;
template ForwardResult<float> forward<float>(const BoundParams<float>&, const ModelConfig&,
                                             const Sample&, const LossWeights&,
                                             const ForwardOptions&);
template ForwardResult<double> forward<double>(const BoundParams<double>&, const ModelConfig&,
                                               const Sample&, const LossWeights&,
                                               const ForwardOptions&);
template Prediction predict<float>(const ParamSet<float>&, const ModelConfig&, const Sample&);
template Prediction predict<double>(const ParamSet<double>&, const ModelConfig&, const Sample&);

}  // namespace jrt
