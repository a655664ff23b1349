#include <json.hpp>

#include "jrt/train.hpp"

namespace jrt {

namespace {

template <std::floating_point T>
EvalReport run_eval(const TrainConfig& cfg, const ParamSet<T>* params, const Dataset& data) {
  check_dataset(cfg, data);
  const SplitSpec split{cfg.model.history, cfg.model.future};
  EvalReport report;
  report.settings = cfg.eval;
  report.settings.unit_scale = cfg.unit_scale;
  if (params) report.method_names.push_back("jrt");
  report.method_names.push_back("zero_velocity");

  for (std::size_t i = 0; i < data.scenes.size(); ++i) {
    const SceneSequence& scene = data.scenes[i];
    const Sample sample = prepare_sample(scene, split, cfg.rel_target_space);
    SceneScores s;
    s.name = data.names[i];
    if (params) {
      const Prediction p = predict(*params, cfg.model, sample);
      const Tensor<double> pred = unflatten_frames(p.pred_y, sample.persons, cfg.model.joints);
      s.methods["jrt"] = score(pred, sample.future, scene.fps(), report.settings);
    }
    const Tensor<double> zv = zero_velocity_baseline(sample.history, cfg.model.future);
    s.methods["zero_velocity"] = score(zv, sample.future, scene.fps(), report.settings);
    report.scenes.push_back(std::move(s));
  }
  report.aggregate();
  return report;
}

}  // namespace

template <std::floating_point T>
EvalReport evaluate(const TrainConfig& cfg, const ParamSet<T>* params, const Dataset& data) {
  return run_eval(cfg, params, data);
}

EvalReport evaluate_baseline(const TrainConfig& cfg, const Dataset& data) {
  return run_eval<double>(cfg, nullptr, data);
}

template <std::floating_point T>
std::string attention_json(const TrainConfig& cfg, const ParamSet<T>& params,
                           const SceneSequence& scene) {
  const Sample sample =
      prepare_sample(scene, {cfg.model.history, cfg.model.future}, cfg.rel_target_space);
  ForwardOptions opts;
  opts.with_loss = false;
  opts.keep_attention = true;
  auto r = forward(BoundParams<T>::constants(params), cfg.model, sample, cfg.weights, opts);

  nlohmann::ordered_json j;
  j["persons"] = sample.persons;
  j["joints"] = cfg.model.joints;
  j["layers"] = nlohmann::ordered_json::array();
  for (const Tensor<T>& a : r.attention) {
    const std::size_t H = a.dim(0), M = a.dim(1);
    auto heads = nlohmann::ordered_json::array();
    for (std::size_t h = 0; h < H; ++h) {
      auto rows = nlohmann::ordered_json::array();
      for (std::size_t q = 0; q < M; ++q) {
        auto row = nlohmann::ordered_json::array();
        for (std::size_t k = 0; k < M; ++k) row.push_back(static_cast<double>(a.at(h, q, k)));
        rows.push_back(std::move(row));
      }
      heads.push_back(std::move(rows));
    }
    j["layers"].push_back(std::move(heads));
  }
  return j.dump();
}

template EvalReport evaluate<float>(const TrainConfig&, const ParamSet<float>*, const Dataset&);
template EvalReport evaluate<double>(const TrainConfig&, const ParamSet<double>*, const Dataset&);
template std::string attention_json<float>(const TrainConfig&, const ParamSet<float>&,
                                           const SceneSequence&);
template std::string attention_json<double>(const TrainConfig&, const ParamSet<double>&,
                                            const SceneSequence&);

}  // namespace jrt
