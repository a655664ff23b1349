#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "jrt/error.hpp"
#include "jrt/scene.hpp"

namespace jrt {

void Skeleton::validate() const {
  if (joints == 0) throw InvalidArgument("skeleton: zero joints");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (auto [a, b] : bones) {
    if (a >= joints || b >= joints) {
      throw InvalidArgument("skeleton: bone (" + std::to_string(a) + "," + std::to_string(b) +
                            ") references a joint >= " + std::to_string(joints));
    }
    if (a == b) throw InvalidArgument("skeleton: self-loop on joint " + std::to_string(a));
    if (!seen.insert(std::minmax(a, b)).second) {
      throw InvalidArgument("skeleton: duplicate bone (" + std::to_string(a) + "," +
                            std::to_string(b) + ")");
    }
  }
}

namespace {
// Parent of each joint in the 13-joint layout: pelvis, neck, head, left
// shoulder/elbow/wrist, right shoulder/elbow/wrist, left knee/ankle, right
// knee/ankle.
constexpr std::size_t kTemplateParent[13] = {0, 0, 1, 1, 3, 4, 1, 6, 7, 0, 9, 0, 11};

std::size_t template_parent(std::size_t k) { return k < 13 ? kTemplateParent[k] : k - 1; }
}  // namespace

Skeleton Skeleton::template_skeleton(std::size_t joints) {
  if (joints == 0) throw InvalidArgument("skeleton: zero joints");
  Skeleton s;
  s.joints = joints;
  for (std::size_t k = 1; k < joints; ++k) {
    // Joints 13+ hang off the head (joint 2) chain.
    const std::size_t p = k == 13 ? 2 : template_parent(k);
    s.bones.emplace_back(p, k);
  }
  return s;
}

void SplitSpec::validate() const {
  if (history < 2) throw InvalidArgument("split: history must be >= 2 frames");
  if (future < 1) throw InvalidArgument("split: future must be >= 1 frame");
}

SceneSequence::SceneSequence(Skeleton skeleton, std::size_t persons, double fps,
                             Tensor<double> positions)
    : skeleton_(std::move(skeleton)), persons_(persons), fps_(fps), positions_(std::move(positions)) {
  skeleton_.validate();
  const Shape& s = positions_.shape();
  if (s.size() != 4 || s[1] != persons_ || s[2] != skeleton_.joints || s[3] != 3) {
    throw ShapeError("scene: positions shape " + to_string(s) + " does not match [T][" +
                     std::to_string(persons_) + "][" + std::to_string(skeleton_.joints) + "][3]");
  }
  if (s[0] < 2) throw InvalidArgument("scene: need at least 2 frames");
  if (!(fps_ > 0) || !std::isfinite(fps_)) throw InvalidArgument("scene: fps must be positive");
  if (!positions_.all_finite()) throw NonFiniteError("scene: non-finite position");
}

Tensor<double> SceneSequence::frame_range(std::size_t begin, std::size_t end) const {
  if (begin >= end || end > frames()) {
    throw InvalidArgument("scene: frame range [" + std::to_string(begin) + "," +
                          std::to_string(end) + ") out of " + std::to_string(frames()));
  }
  const std::size_t stride = persons_ * joints() * 3;
  std::vector<double> out(positions_.raw() + begin * stride, positions_.raw() + end * stride);
  return Tensor<double>({end - begin, persons_, joints(), 3}, std::move(out));
}

std::pair<SceneSequence, Vec3> normalize(const SceneSequence& scene) {
  Vec3 offset{0, 0, 0};
  for (std::size_t j = 0; j < scene.joints(); ++j) {
    for (std::size_t c = 0; c < 3; ++c) offset[c] += scene.at(0, 0, j, c);
  }
  for (double& v : offset) v /= static_cast<double>(scene.joints());
  SceneSequence out = scene;
  auto data = out.positions().data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] -= offset[i % 3];
  return {std::move(out), offset};
}

SceneSequence denormalize(const SceneSequence& scene, const Vec3& offset) {
  SceneSequence out = scene;
  auto data = out.positions().data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += offset[i % 3];
  return out;
}

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& order) {
  std::vector<std::size_t> inv(order.size(), order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] >= order.size() || inv[order[i]] != order.size()) {
      throw InvalidArgument("permutation: not a permutation of 0.." +
                            std::to_string(order.size() - 1));
    }
    inv[order[i]] = i;
  }
  return inv;
}

namespace {

SceneSequence rotate(const SceneSequence& scene, double angle) {
  if (!std::isfinite(angle) || angle < 0 || angle >= 2 * std::numbers::pi) {
    throw InvalidArgument("augment: rotation angle must lie in [0, 2pi)");
  }
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  SceneSequence out = scene;
  auto data = out.positions().data();
  for (std::size_t i = 0; i < data.size(); i += 3) {
    const double x = data[i];
    const double y = data[i + 1];
    data[i] = c * x - s * y;
    data[i + 1] = s * x + c * y;
  }
  return out;
}

SceneSequence permute_persons(const SceneSequence& scene, const std::vector<std::size_t>& order) {
  if (order.size() != scene.persons()) {
    throw InvalidArgument("augment: permutation has " + std::to_string(order.size()) +
                          " entries for " + std::to_string(scene.persons()) + " persons");
  }
  inverse_permutation(order);
  SceneSequence out = scene;
  const std::size_t block = scene.joints() * 3;
  for (std::size_t t = 0; t < scene.frames(); ++t) {
    for (std::size_t p = 0; p < scene.persons(); ++p) {
      const double* src = scene.positions().raw() + (t * scene.persons() + order[p]) * block;
      std::copy_n(src, block, out.positions().raw() + (t * scene.persons() + p) * block);
    }
  }
  return out;
}

SceneSequence reverse_frames(const SceneSequence& scene) {
  SceneSequence out = scene;
  const std::size_t stride = scene.persons() * scene.joints() * 3;
  const std::size_t T = scene.frames();
  for (std::size_t t = 0; t < T; ++t) {
    std::copy_n(scene.positions().raw() + (T - 1 - t) * stride, stride,
                out.positions().raw() + t * stride);
  }
  return out;
}

}  // namespace

SceneSequence augment(const SceneSequence& scene, const Augmentation& spec) {
  return std::visit(
      [&](const auto& a) -> SceneSequence {
        using A = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<A, Rotate>) {
          return rotate(scene, a.angle);
        } else if constexpr (std::is_same_v<A, Permute>) {
          return permute_persons(scene, a.order);
        } else {
          return reverse_frames(scene);
        }
      },
      spec);
}

}  // namespace jrt
