#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "jrt/tensor.hpp"

namespace jrt {

using Vec3 = std::array<double, 3>;

struct Skeleton {
  std::size_t joints = 0;
  std::vector<std::pair<std::size_t, std::size_t>> bones;

  // Throws InvalidArgument on out-of-range, self-loop, or duplicate bones.
  void validate() const;

  // Fixed pelvis-rooted tree with spine, two arms and two legs. J <= 13
  // takes a prefix of the 13-joint layout; longer skeletons extend the
  // head chain.
  static Skeleton template_skeleton(std::size_t joints = 13);

  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

struct SplitSpec {
  std::size_t history = 0;
  std::size_t future = 0;

  std::size_t total() const { return history + future; }
  void validate() const;
};

// Positions of N persons x J joints over T frames, meters, +Z up.
class SceneSequence {
 public:
  SceneSequence() = default;
  SceneSequence(Skeleton skeleton, std::size_t persons, double fps, Tensor<double> positions);

  const Skeleton& skeleton() const noexcept { return skeleton_; }
  std::size_t persons() const noexcept { return persons_; }
  std::size_t joints() const noexcept { return skeleton_.joints; }
  std::size_t frames() const noexcept { return positions_.dim(0); }
  double fps() const noexcept { return fps_; }

  // [T][N][J][3]
  const Tensor<double>& positions() const noexcept { return positions_; }
  Tensor<double>& positions() noexcept { return positions_; }

  double& at(std::size_t t, std::size_t n, std::size_t j, std::size_t c) {
    return positions_[((t * persons_ + n) * joints() + j) * 3 + c];
  }
  double at(std::size_t t, std::size_t n, std::size_t j, std::size_t c) const {
    return positions_[((t * persons_ + n) * joints() + j) * 3 + c];
  }

  // Frames [begin, end) as a [end-begin][N][J][3] tensor.
  Tensor<double> frame_range(std::size_t begin, std::size_t end) const;

 private:
  Skeleton skeleton_;
  std::size_t persons_ = 0;
  double fps_ = 0;
  Tensor<double> positions_;
};

// Subtracts the mean joint position of person 0 at frame 0.
std::pair<SceneSequence, Vec3> normalize(const SceneSequence& scene);
SceneSequence denormalize(const SceneSequence& scene, const Vec3& offset);

struct Rotate {
  double angle = 0;  // radians about +Z
};
struct Permute {
  std::vector<std::size_t> order;  // new person p is old person order[p]
};
struct Reverse {};

using Augmentation = std::variant<Rotate, Permute, Reverse>;

SceneSequence augment(const SceneSequence& scene, const Augmentation& spec);

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& order);

enum class MotionKind { Static, ConstantVelocity, Circular, TwoPersonApproach };

MotionKind parse_motion_kind(const std::string& name);
std::string to_string(MotionKind kind);

struct SynthOptions {
  std::uint64_t seed = 0;
  std::size_t persons = 2;
  std::size_t joints = 13;
  std::size_t frames = 30;
  MotionKind kind = MotionKind::Circular;
  double fps = 15.0;
};

// Deterministic in seed. Every generated pose is a rigid-bone forward
// kinematics evaluation, so bone lengths stay constant over time.
SceneSequence synth_scene(const SynthOptions& options);

// Per-frame displacement used by ConstantVelocity for the given person.
Vec3 synth_velocity(std::uint64_t seed, std::size_t person);

// Scene file (JSON, UTF-8, +Z up, meters): keys persons, joints, fps,
// bones, positions[T][N][J][3]. Reader throws FormatError naming the
// offending path.
SceneSequence read_scene(const std::filesystem::path& path);
SceneSequence parse_scene(const std::string& text, const std::string& origin = "<memory>");
std::string serialize_scene(const SceneSequence& scene);
void write_scene(const std::filesystem::path& path, const SceneSequence& scene);

}  // namespace jrt
