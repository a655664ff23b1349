#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "jrt/tensor.hpp"

namespace jrt {

// All motion tensors here are [T_f][N][J][3].

// Mean over persons of the norm of the flattened J*3 error at future frame
// `frame` (1-based). Throws InvalidArgument when frame is outside [1, T_f].
double vim(const Tensor<double>& pred, const Tensor<double>& gt, std::size_t frame);

// Mean per-joint Euclidean error over all frames, persons, joints.
double mpjpe(const Tensor<double>& pred, const Tensor<double>& gt);

// Same, restricted to the first `frames` future frames.
double mpjpe_prefix(const Tensor<double>& pred, const Tensor<double>& gt, std::size_t frames);

// Repeats the last history frame `future` times.
Tensor<double> zero_velocity_baseline(const Tensor<double>& history, std::size_t future);

struct EvalSettings {
  std::vector<std::size_t> vim_frames{2, 4, 8, 10, 14};
  std::vector<double> mpjpe_horizons_s{1, 2, 3};
  double unit_scale = 1;
};

struct MethodScores {
  std::map<std::size_t, double> vim_at;     // frame -> value
  double vim_avg = 0;
  std::map<double, double> mpjpe_at;        // horizon seconds -> value
  double mpjpe = 0;
};

// Frames of `settings.vim_frames` beyond the horizon are skipped, as are
// MPJPE horizons that round to zero frames or exceed it. Values are scaled
// by unit_scale.
MethodScores score(const Tensor<double>& pred, const Tensor<double>& gt, double fps,
                   const EvalSettings& settings);

struct SceneScores {
  std::string name;
  std::map<std::string, MethodScores> methods;
};

struct EvalReport {
  EvalSettings settings;
  std::vector<std::string> method_names;
  std::map<std::string, MethodScores> methods;  // means across scenes
  std::vector<SceneScores> scenes;

  // Recomputes `methods` as per-key means of the scene scores.
  void aggregate();
  std::string to_json() const;
  std::string to_csv() const;
};

}  // namespace jrt
