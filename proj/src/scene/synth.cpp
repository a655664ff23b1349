#include <cmath>
#include <numbers>
#include <random>

#include "jrt/error.hpp"
#include "jrt/scene.hpp"

namespace jrt {

MotionKind parse_motion_kind(const std::string& name) {
  if (name == "static") return MotionKind::Static;
  if (name == "constant-velocity") return MotionKind::ConstantVelocity;
  if (name == "circular") return MotionKind::Circular;
  if (name == "two-person-approach") return MotionKind::TwoPersonApproach;
  throw InvalidArgument("unknown motion kind '" + name + "'");
}

std::string to_string(MotionKind kind) {
  switch (kind) {
    case MotionKind::Static:
      return "static";
    case MotionKind::ConstantVelocity:
      return "constant-velocity";
    case MotionKind::Circular:
      return "circular";
    case MotionKind::TwoPersonApproach:
      return "two-person-approach";
  }
  return "unknown";
}

namespace {

using Mat3 = std::array<double, 9>;

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

// Rotation about the person's lateral (+Y) axis: limb swing in the sagittal plane.
Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, 0, s, 0, 1, 0, -s, 0, c};
}

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += a[i * 3 + k] * b[k * 3 + j];
      r[i * 3 + j] = s;
    }
  }
  return r;
}

Vec3 rotate_vec(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

// Rest-pose bone vector from parent to joint k, person facing +X.
Vec3 rest_offset(std::size_t k) {
  static constexpr Vec3 kOffsets[13] = {
      {0, 0, 0.95},      // pelvis (absolute height)
      {0, 0, 0.55},      // neck
      {0, 0, 0.20},      // head
      {0, 0.18, -0.05},  // left shoulder
      {0, 0, -0.28},     // left elbow
      {0, 0, -0.25},     // left wrist
      {0, -0.18, -0.05}, {0, 0, -0.28}, {0, 0, -0.25},
      {0, 0.10, -0.45},  // left knee
      {0, 0, -0.45},     {0, -0.10, -0.45}, {0, 0, -0.45},
  };
  return k < 13 ? kOffsets[k] : Vec3{0, 0, 0.08};
}

// Swing angle for the bone ending at joint k, given gait phase.
double swing(std::size_t k, double phase) {
  const double s = std::sin(phase);
  switch (k) {
    case 4:
      return -0.4 * s;
    case 7:
      return 0.4 * s;
    case 5:
    case 8:
      return -0.3 - 0.1 * std::cos(phase);
    case 9:
      return 0.5 * s;
    case 11:
      return -0.5 * s;
    case 10:
      return -0.25 * (1 - std::cos(phase));
    case 12:
      return -0.25 * (1 + std::cos(phase));
    default:
      return 0;
  }
}

// Forward kinematics for one person: root position, heading, gait phase.
void pose(const Skeleton& skel, const Vec3& root, double heading, double phase, bool articulate,
          std::vector<Vec3>& out) {
  const std::size_t J = skel.joints;
  std::vector<std::size_t> parent(J, 0);
  for (auto [p, c] : skel.bones) parent[c] = p;
  std::vector<Mat3> frame(J);
  out.assign(J, Vec3{});
  frame[0] = rot_z(heading);
  out[0] = {root[0], root[1], root[2]};
  // Template skeletons list each joint after its parent.
  for (std::size_t k = 1; k < J; ++k) {
    const std::size_t p = parent[k];
    frame[k] = articulate ? mul(frame[p], rot_y(swing(k, phase))) : frame[p];
    const Vec3 d = rotate_vec(frame[k], rest_offset(k));
    out[k] = {out[p][0] + d[0], out[p][1] + d[1], out[p][2] + d[2]};
  }
}

std::mt19937_64 person_rng(std::uint64_t seed, std::size_t person) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(person), 0x4a5254u};
  return std::mt19937_64(seq);
}

}  // namespace

Vec3 synth_velocity(std::uint64_t seed, std::size_t person) {
  auto rng = person_rng(seed, person);
  rng.discard(3);
  std::uniform_real_distribution<double> speed(0.02, 0.08);
  std::uniform_real_distribution<double> dir(0, 2 * std::numbers::pi);
  const double s = speed(rng);
  const double a = dir(rng);
  return {s * std::cos(a), s * std::sin(a), 0.0};
}

SceneSequence synth_scene(const SynthOptions& o) {
  if (o.persons == 0 || o.joints == 0 || o.frames < 2 || !(o.fps > 0)) {
    throw InvalidArgument("synth: persons, joints, fps must be positive and frames >= 2");
  }
  Skeleton skel = Skeleton::template_skeleton(o.joints);
  const std::size_t N = o.persons, J = o.joints, T = o.frames;
  Tensor<double> positions({T, N, J, 3});
  const double dt = 1.0 / o.fps;
  std::vector<Vec3> joints;

  std::mt19937_64 scene_rng(o.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0, 1);
  const Vec3 center{4 * unit(scene_rng) - 2, 4 * unit(scene_rng) - 2, 0};
  const double spread = 0.75 + 0.75 * unit(scene_rng);

  for (std::size_t n = 0; n < N; ++n) {
    auto rng = person_rng(o.seed, n);
    const double u0 = unit(rng), u1 = unit(rng), u2 = unit(rng);
    const double base_angle = 2 * std::numbers::pi * (static_cast<double>(n) + 0.3 * u0) /
                              static_cast<double>(N);
    const Vec3 start{center[0] + spread * std::cos(base_angle),
                     center[1] + spread * std::sin(base_angle), 0};
    const double yaw0 = 2 * std::numbers::pi * u1;
    const double gait_rate = 2 * std::numbers::pi * (0.8 + 0.6 * u2);  // rad/s

    switch (o.kind) {
      case MotionKind::Static:
      case MotionKind::ConstantVelocity: {
        pose(skel, {start[0], start[1], rest_offset(0)[2]}, yaw0, 0, false, joints);
        const Vec3 v = o.kind == MotionKind::ConstantVelocity ? synth_velocity(o.seed, n)
                                                              : Vec3{0, 0, 0};
        for (std::size_t t = 0; t < T; ++t) {
          const double tt = static_cast<double>(t);
          for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t c = 0; c < 3; ++c) {
              positions[((t * N + n) * J + j) * 3 + c] = joints[j][c] + tt * v[c];
            }
          }
        }
        break;
      }
      case MotionKind::Circular: {
        const double radius = 0.5 + unit(rng);
        const double ang_rate = (0.6 + 0.8 * unit(rng)) / radius * (unit(rng) < 0.5 ? -1 : 1);
        const double phase0 = 2 * std::numbers::pi * unit(rng);
        for (std::size_t t = 0; t < T; ++t) {
          const double time = static_cast<double>(t) * dt;
          const double a = phase0 + ang_rate * time;
          const Vec3 root{start[0] + radius * std::cos(a), start[1] + radius * std::sin(a),
                          rest_offset(0)[2]};
          const double heading = a + (ang_rate > 0 ? 1 : -1) * std::numbers::pi / 2;
          pose(skel, root, heading, gait_rate * time, true, joints);
          for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t c = 0; c < 3; ++c) {
              positions[((t * N + n) * J + j) * 3 + c] = joints[j][c];
            }
          }
        }
        break;
      }
      case MotionKind::TwoPersonApproach: {
        constexpr double kClosest = 0.5;
        constexpr double kTau = 1.5;
        const double heading = base_angle + std::numbers::pi;
        for (std::size_t t = 0; t < T; ++t) {
          const double time = static_cast<double>(t) * dt;
          const double r = kClosest + (spread - kClosest) * std::exp(-time / kTau);
          const Vec3 root{center[0] + r * std::cos(base_angle),
                          center[1] + r * std::sin(base_angle), rest_offset(0)[2]};
          pose(skel, root, heading, gait_rate * time, true, joints);
          for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t c = 0; c < 3; ++c) {
              positions[((t * N + n) * J + j) * 3 + c] = joints[j][c];
            }
          }
        }
        break;
      }
    }
  }
  return SceneSequence(std::move(skel), N, o.fps, std::move(positions));
}

}  // namespace jrt
