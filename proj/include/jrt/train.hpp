#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "jrt/gradcheck.hpp"
#include "jrt/metrics.hpp"
#include "jrt/model.hpp"
#include "jrt/model_config.hpp"
#include "jrt/params.hpp"

namespace jrt {

enum class Precision { F32, F64 };

Precision parse_precision(const std::string& s);
std::string to_string(Precision p);

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-2;
};

struct TrainConfig {
  ModelConfig model;
  LossWeights weights;
  AdamWHyper adamw;
  double lr0 = 1e-3;
  double decay_factor = 0.8;
  std::size_t decay_every_epochs = 10;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  std::size_t checkpoint_every = 10;  // epochs; 0 writes only the final checkpoint
  std::uint64_t seed = 0;
  Precision precision = Precision::F32;
  RelTargetSpace rel_target_space = RelTargetSpace::Exp;
  double unit_scale = 1;
  bool augment_rotate = true;
  bool augment_permute = true;
  bool augment_reverse = true;
  EvalSettings eval;

  // Throws ConfigError.
  void validate() const;

  // Keys: L, D, D_H, D_K, D_prime, D_ff, N_max, J, T_h, T_f, lambda_J, lambda_R,
  // lr0, decay_factor, decay_every_epochs, batch_size, epochs, seed, precision,
  // rel_target_space, unit_scale, augment_rotate, augment_permute,
  // augment_reverse, beta1, beta2, adam_eps, weight_decay, checkpoint_every,
  // vim_frames, mpjpe_horizons_s. Missing keys keep defaults; D_K, D_prime
  // default to D and D_ff to 2D. Unknown keys are rejected.
  static TrainConfig from_json(const std::string& text);
  static TrainConfig load(const std::filesystem::path& path);
  std::string to_json() const;

  // The tiny configuration used for gradient checks and overfit tests.
  static TrainConfig tiny();
};

double lr_schedule(std::size_t epoch, double lr0, double factor, std::size_t every);

template <std::floating_point T>
struct AdamState {
  ParamSet<T> m;
  ParamSet<T> v;
  std::uint64_t step = 0;

  static AdamState zeros_like(const ParamSet<T>& params) {
    return {params.zeros_like(), params.zeros_like(), 0};
  }
};

// Decoupled weight decay:
//   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
//   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta)
// Throws NonFiniteError naming the block if any gradient is non-finite;
// nothing is modified in that case.
template <std::floating_point T>
void adamw_step(ParamSet<T>& params, const ParamSet<T>& grads, AdamState<T>& state, double lr,
                const AdamWHyper& hyper);

template <std::floating_point T>
struct Checkpoint {
  TrainConfig config;
  ParamSet<T> params;
  AdamState<T> optimizer;
  std::uint64_t epoch = 0;
};

using AnyCheckpoint = std::variant<Checkpoint<float>, Checkpoint<double>>;

// Binary layout, little-endian:
//   "JRT1" | u8 scalar bytes | u64 step | u64 epoch | u32 len + config JSON
//   | u32 block count | per block: u32 len + name, u32 rank, u64 extents,
//   values, first moments, second moments | u32 CRC-32 of all prior bytes
template <std::floating_point T>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<T>& ckpt);

// Throws FormatError on bad magic, CRC, truncation, or when block names or
// shapes disagree with the layout implied by the stored config.
AnyCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt);
AnyCheckpoint load_checkpoint(const std::filesystem::path& path);

struct Dataset {
  std::vector<SceneSequence> scenes;
  std::vector<std::string> names;

  void add(SceneSequence scene, std::string name) {
    scenes.push_back(std::move(scene));
    names.push_back(std::move(name));
  }

  // All *.json files in a directory (sorted by name), or a single file.
  static Dataset load(const std::filesystem::path& path);
};

// Throws InvalidArgument naming the first scene that does not fit.
void check_dataset(const TrainConfig& cfg, const Dataset& data);

struct TrainOptions {
  std::filesystem::path out_dir;    // empty: no files written
  std::ostream* log = nullptr;      // one JSON line per step
  std::size_t max_steps = 0;        // 0: run all epochs
};

template <std::floating_point T>
struct TrainResult {
  Checkpoint<T> checkpoint;
  std::vector<LossBreakdown> losses;  // one per optimizer step
};

// Batches group scenes with the same person count. Deterministic in
// config.seed. With `resume`, training continues from its parameters,
// optimizer moments, and epoch counter.
template <std::floating_point T>
TrainResult<T> train(const TrainConfig& cfg, const Dataset& data, const TrainOptions& options,
                     const Checkpoint<T>* resume = nullptr);

std::string loss_log_line(std::uint64_t step, const LossBreakdown& b);

// Full model loss on one sample, for gradient checks: value and (optionally)
// gradients with respect to every block.
double sample_loss(const ParamSet<double>& params, const ModelConfig& cfg, const Sample& sample,
                   const LossWeights& weights, ParamSet<double>* grad,
                   double* min_kink_distance = nullptr);

struct ModelGradCheck {
  GradCheckReport report;
  std::uint64_t seed = 0;       // seed that produced the checked point
  double min_kink_distance = 0;
  std::size_t attempts = 0;
};

// Finite-difference check of the full model loss on a synthetic two-person
// scene with randomly initialized blocks. Seeds whose activations sit within
// `kink_margin` of a ReLU, abs, or norm kink are skipped (seed, seed+1, ...).
ModelGradCheck gradcheck_model(const ModelConfig& cfg, std::uint64_t seed, double step = 1e-5,
                               double tolerance = 1e-4, double kink_margin = 1e-3);

// Scores the model (method "jrt", when params are given) and the
// zero-velocity baseline (method "zero_velocity") on every scene.
template <std::floating_point T>
EvalReport evaluate(const TrainConfig& cfg, const ParamSet<T>* params, const Dataset& data);
EvalReport evaluate_baseline(const TrainConfig& cfg, const Dataset& data);

// Attention weights of every layer and head for one scene as JSON:
// {"persons", "joints", "layers": [[head][NJ][NJ], ...]}.
template <std::floating_point T>
std::string attention_json(const TrainConfig& cfg, const ParamSet<T>& params,
                           const SceneSequence& scene);

}  // namespace jrt
