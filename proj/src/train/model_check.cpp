#include "jrt/error.hpp"
#include "jrt/layers.hpp"
#include "jrt/train.hpp"

namespace jrt {

ModelGradCheck gradcheck_model(const ModelConfig& cfg, std::uint64_t seed, double step,
                               double tolerance, double kink_margin) {
  cfg.validate();
  constexpr std::size_t kMaxAttempts = 50;
  const LossWeights weights;
  ModelGradCheck out;
  for (std::size_t attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const std::uint64_t s = seed + attempt;
    SynthOptions so;
    so.seed = s;
    so.persons = std::min<std::size_t>(2, cfg.max_persons);
    so.joints = cfg.joints;
    so.frames = cfg.history + cfg.future;
    so.kind = MotionKind::Circular;
    const Sample sample = prepare_sample(synth_scene(so), {cfg.history, cfg.future},
                                         RelTargetSpace::Exp);
    const ParamSet<double> params = init_params<double>(cfg, s, InitMode::Random);
    double kink = 0;
    sample_loss(params, cfg, sample, weights, nullptr, &kink);
    out.attempts = attempt + 1;
    if (kink < kink_margin) continue;
    out.seed = s;
    out.min_kink_distance = kink;
    const Objective f = [&](const ParamSet<double>& p, ParamSet<double>* g) {
      return sample_loss(p, cfg, sample, weights, g);
    };
    out.report = finite_diff_check(f, params, step, tolerance);
    return out;
  }
  throw InvalidArgument("gradcheck: no seed in " + std::to_string(kMaxAttempts) +
                        " attempts keeps activations clear of kinks");
}

}  // namespace jrt
