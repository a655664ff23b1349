#include <algorithm>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>

#include <json.hpp>

#include "jrt/error.hpp"
#include "jrt/layers.hpp"
#include "jrt/train.hpp"

namespace jrt {

Dataset Dataset::load(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  Dataset d;
  if (fs::is_directory(path)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) d.add(read_scene(f), f.filename().string());
  } else if (fs::exists(path)) {
    d.add(read_scene(path), path.filename().string());
  } else {
    throw InvalidArgument("dataset: no such file or directory " + path.string());
  }
  if (d.scenes.empty()) throw InvalidArgument("dataset: no scene files in " + path.string());
  return d;
}

void check_dataset(const TrainConfig& cfg, const Dataset& data) {
  if (data.scenes.empty()) throw InvalidArgument("dataset: empty");
  const ModelConfig& m = cfg.model;
  for (std::size_t i = 0; i < data.scenes.size(); ++i) {
    const SceneSequence& s = data.scenes[i];
    const std::string name = i < data.names.size() ? data.names[i] : "#" + std::to_string(i);
    if (s.frames() != m.history + m.future) {
      throw InvalidArgument("dataset: scene " + name + " has " + std::to_string(s.frames()) +
                            " frames, config needs T_h+T_f=" +
                            std::to_string(m.history + m.future));
    }
    if (s.joints() != m.joints) {
      throw InvalidArgument("dataset: scene " + name + " has " + std::to_string(s.joints()) +
                            " joints, config has J=" + std::to_string(m.joints));
    }
    if (s.persons() == 0 || s.persons() > m.max_persons) {
      throw InvalidArgument("dataset: scene " + name + " has " + std::to_string(s.persons()) +
                            " persons, config allows 1.." + std::to_string(m.max_persons));
    }
  }
}

std::string loss_log_line(std::uint64_t step, const LossBreakdown& b) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["joint_recon"] = b.joint_recon;
  j["joint_pred"] = b.joint_pred;
  j["rel_recon"] = b.rel_recon;
  j["rel_pred"] = b.rel_pred;
  j["deep_sup"] = b.deep_sup;
  j["total"] = b.total;
  return j.dump();
}

double sample_loss(const ParamSet<double>& params, const ModelConfig& cfg, const Sample& sample,
                   const LossWeights& weights, ParamSet<double>* grad, double* min_kink_distance) {
  Tape<double> tape;
  auto bound = BoundParams<double>::track(tape, params);
  auto r = forward(bound, cfg, sample, weights);
  const double value = r.total.value()[0];
  if (min_kink_distance) *min_kink_distance = tape.min_kink_distance();
  if (grad) {
    tape.backward(r.total);
    *grad = params.zeros_like();
    bound.accumulate_grads(*grad);
  }
  return value;
}

namespace {

std::mt19937_64 epoch_rng(std::uint64_t seed, std::uint64_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(epoch >> 32)};
  return std::mt19937_64(seq);
}

SceneSequence augmented(const TrainConfig& cfg, const SceneSequence& scene, std::mt19937_64& rng) {
  SceneSequence s = scene;
  if (cfg.augment_rotate) {
    std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
    s = augment(s, Rotate{angle(rng)});
  }
  if (cfg.augment_permute && s.persons() > 1) {
    Permute p;
    p.order.resize(s.persons());
    for (std::size_t i = 0; i < p.order.size(); ++i) p.order[i] = i;
    std::shuffle(p.order.begin(), p.order.end(), rng);
    s = augment(s, p);
  }
  if (cfg.augment_reverse && std::bernoulli_distribution(0.5)(rng)) s = augment(s, Reverse{});
  return s;
}

// Shuffled scene indices cut into batches of equal person count.
std::vector<std::vector<std::size_t>> make_batches(const Dataset& data, std::size_t batch_size,
                                                   std::mt19937_64& rng) {
  std::vector<std::size_t> order(data.scenes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> group_persons;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i : order) {
    const std::size_t n = data.scenes[i].persons();
    auto it = std::find(group_persons.begin(), group_persons.end(), n);
    if (it == group_persons.end()) {
      group_persons.push_back(n);
      groups.emplace_back();
      it = group_persons.end() - 1;
    }
    groups[static_cast<std::size_t>(it - group_persons.begin())].push_back(i);
  }
  std::vector<std::vector<std::size_t>> batches;
  for (const auto& g : groups) {
    for (std::size_t b = 0; b < g.size(); b += batch_size) {
      batches.emplace_back(g.begin() + static_cast<std::ptrdiff_t>(b),
                           g.begin() + static_cast<std::ptrdiff_t>(std::min(g.size(), b + batch_size)));
    }
  }
  return batches;
}

std::filesystem::path epoch_checkpoint_path(const std::filesystem::path& dir, std::uint64_t epoch) {
  char name[32];
  std::snprintf(name, sizeof name, "epoch_%04llu.jrt", static_cast<unsigned long long>(epoch));
  return dir / name;
}

}  // namespace

template <std::floating_point T>
TrainResult<T> train(const TrainConfig& cfg, const Dataset& data, const TrainOptions& options,
                     const Checkpoint<T>* resume) {
  cfg.validate();
  check_dataset(cfg, data);

  TrainResult<T> result;
  Checkpoint<T>& ck = result.checkpoint;
  ck.config = cfg;
  ck.params = init_params<T>(cfg.model, cfg.seed);
  if (resume) {
    if (!resume->params.same_layout(ck.params)) {
      throw ConfigError("train: resumed checkpoint does not match the configured model");
    }
    ck.params = resume->params;
    ck.optimizer = resume->optimizer;
    ck.epoch = resume->epoch;
  } else {
    ck.optimizer = AdamState<T>::zeros_like(ck.params);
  }

  const SplitSpec split{cfg.model.history, cfg.model.future};
  const bool write = !options.out_dir.empty();
  const std::uint64_t first = ck.epoch;
  const std::uint64_t last = first + cfg.epochs;
  bool stop = false;

  for (std::uint64_t epoch = first; epoch < last && !stop; ++epoch) {
    auto rng = epoch_rng(cfg.seed, epoch);
    const double lr = lr_schedule(epoch, cfg.lr0, cfg.decay_factor, cfg.decay_every_epochs);
    for (const auto& batch : make_batches(data, cfg.batch_size, rng)) {
      Tape<T> tape;
      auto bound = BoundParams<T>::track(tape, ck.params);
      LossBreakdown mean;
      Var<T> sum;
      for (std::size_t idx : batch) {
        const SceneSequence scene = augmented(cfg, data.scenes[idx], rng);
        const Sample sample = prepare_sample(scene, split, cfg.rel_target_space);
        auto r = forward(bound, cfg.model, sample, cfg.weights);
        const LossBreakdown b = r.breakdown();
        mean.joint_recon += b.joint_recon;
        mean.joint_pred += b.joint_pred;
        mean.rel_recon += b.rel_recon;
        mean.rel_pred += b.rel_pred;
        mean.deep_sup += b.deep_sup;
        sum = sum.valid() ? ops::add(sum, r.total) : r.total;
      }
      const double inv = 1.0 / static_cast<double>(batch.size());
      Var<T> loss = batch.size() == 1 ? sum : ops::scale(sum, static_cast<T>(inv));
      mean.joint_recon *= inv;
      mean.joint_pred *= inv;
      mean.rel_recon *= inv;
      mean.rel_pred *= inv;
      mean.deep_sup *= inv;
      mean.total = static_cast<double>(loss.value()[0]);

      tape.backward(loss);
      ParamSet<T> grads = ck.params.zeros_like();
      bound.accumulate_grads(grads);
      adamw_step(ck.params, grads, ck.optimizer, lr, cfg.adamw);

      result.losses.push_back(mean);
      if (options.log) *options.log << loss_log_line(ck.optimizer.step, mean) << '\n';
      if (options.max_steps && result.losses.size() >= options.max_steps) {
        stop = true;
        break;
      }
    }
    ck.epoch = epoch + 1;
    if (write && cfg.checkpoint_every && ck.epoch % cfg.checkpoint_every == 0) {
      save_checkpoint(epoch_checkpoint_path(options.out_dir, ck.epoch), ck);
    }
  }
  if (options.log) options.log->flush();
  if (write) save_checkpoint(options.out_dir / "checkpoint.jrt", ck);
  return result;
}

template TrainResult<float> train<float>(const TrainConfig&, const Dataset&, const TrainOptions&,
                                         const Checkpoint<float>*);
template TrainResult<double> train<double>(const TrainConfig&, const Dataset&, const TrainOptions&,
                                           const Checkpoint<double>*);

}  // namespace jrt
