#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <doctest.h>

#include "jrt/error.hpp"
#include "jrt/scene.hpp"
#include "support.hpp"

using namespace jrt;
using jrt::test::Gen;

namespace {

double bone_length(const SceneSequence& s, std::size_t t, std::size_t n, std::size_t a, std::size_t b) {
  double d = 0;
  for (std::size_t c = 0; c < 3; ++c) d += std::pow(s.at(t, n, a, c) - s.at(t, n, b, c), 2);
  return std::sqrt(d);
}

std::string small_scene_json(const std::string& positions, const std::string& bones = "[[0,1]]",
                             const std::string& fps = "15") {
  return R"({"persons":1,"joints":2,"fps":)" + fps + R"(,"bones":)" + bones +
         R"(,"positions":)" + positions + "}";
}

const std::string kTwoFrames = "[[[[0,0,0],[1,0,0]]],[[[0,0,1],[1,0,1]]]]";

}  // namespace

TEST_SUITE("skeleton") {
  TEST_CASE("template skeleton is a tree for every size") {
    for (std::size_t J = 1; J <= 20; ++J) {
      auto s = Skeleton::template_skeleton(J);
      CHECK(s.joints == J);
      CHECK(s.bones.size() == J - 1);
      CHECK_NOTHROW(s.validate());
    }
  }

  TEST_CASE("invalid bones are rejected") {
    Skeleton s{3, {{0, 1}, {1, 1}}};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.bones = {{0, 3}};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
    s.bones = {{0, 1}, {1, 0}};
    CHECK_THROWS_AS(s.validate(), InvalidArgument);
  }
}

TEST_SUITE("scene io") {
  TEST_CASE("round trip is exact") {
    Gen g(4);
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = g.scene(g.index(1, 3), g.index(1, 13), g.index(2, 6));
      const auto back = parse_scene(serialize_scene(s));
      CHECK(back.positions() == s.positions());
      CHECK(back.skeleton() == s.skeleton());
      CHECK(back.persons() == s.persons());
      CHECK(back.fps() == s.fps());
    }
  }

  TEST_CASE("file round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "jrt_test_scene_io";
    std::filesystem::create_directories(dir);
    const auto s = synth_scene({});
    write_scene(dir / "a.json", s);
    CHECK(read_scene(dir / "a.json").positions() == s.positions());
    CHECK_THROWS_AS(read_scene(dir / "missing.json"), FormatError);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("a valid minimal document parses") {
    const auto s = parse_scene(small_scene_json(kTwoFrames));
    CHECK(s.frames() == 2);
    CHECK(s.at(1, 0, 1, 2) == 1.0);
  }

  TEST_CASE("malformed documents raise FormatError naming the path") {
    struct Case {
      std::string text;
      std::string needle;
    };
    const Case cases[] = {
        {"not json", "invalid JSON"},
        {"[]", "$"},
        {R"({"joints":2,"fps":15,"bones":[],"positions":[]})", "persons"},
        {small_scene_json(kTwoFrames, "[[0,1]]", "-1"), "fps"},
        {small_scene_json(kTwoFrames, "[[0,5]]"), "bones"},
        {small_scene_json(kTwoFrames, "[[0]]"), "bones[0]"},
        {small_scene_json("[[[[0,0,0],[1,0,0]]]]"), "positions"},
        {small_scene_json("[[[[0,0,0],[1,0,0]]],[[[0,0,1]]]]"), "positions[1][0]"},
        {small_scene_json("[[[[0,0,0],[1,0,0]]],[[[0,0,1],[1,0]]]]"), "positions[1][0][1]"},
        {small_scene_json("[[[[0,0,0],[1,0,0]]],[[[0,0,1],[1,\"x\",1]]]]"), "positions[1][0][1][1]"},
        {small_scene_json("[[[[0,0,0],[1,0,0]]],[[[0,0,1],[1,0,1]],[[0,0,0],[0,0,0]]]]"),
         "positions[1]"},
    };
    for (const auto& c : cases) {
      CAPTURE(c.text);
      try {
        parse_scene(c.text, "doc");
        FAIL("expected FormatError");
      } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find(c.needle) != std::string::npos);
      }
    }
  }
}

TEST_SUITE("normalize") {
  TEST_CASE("person 0 frame 0 centroid moves to the origin and back") {
    Gen g(8);
    const auto s = g.scene(2, 5, 4);
    auto [n, off] = normalize(s);
    for (std::size_t c = 0; c < 3; ++c) {
      double m = 0;
      for (std::size_t j = 0; j < 5; ++j) m += n.at(0, 0, j, c);
      CHECK(std::abs(m / 5) <= 1e-12);
    }
    CHECK(max_abs_diff(denormalize(n, off).positions(), s.positions()) <= 1e-12);
  }
}

TEST_SUITE("augment") {
  TEST_CASE("rotation keeps every z and every pairwise distance") {
    Gen g(10);
    for (int trial = 0; trial < 20; ++trial) {
      const auto s = g.scene(2, 4, 3);
      const auto r = augment(s, Rotate{g.uniform(0, 2 * std::numbers::pi - 1e-9)});
      for (std::size_t i = 2; i < s.positions().size(); i += 3) CHECK(r.positions()[i] == s.positions()[i]);
      for (std::size_t t = 0; t < 3; ++t)
        for (std::size_t a = 0; a < 4; ++a)
          for (std::size_t b = 0; b < 4; ++b)
            CHECK(std::abs(bone_length(r, t, 1, a, b) - bone_length(s, t, 1, a, b)) <= 1e-12);
    }
  }

  TEST_CASE("rotation by a quarter turn maps x to y") {
    Tensor<double> p({2, 1, 1, 3}, std::vector<double>{1, 0, 0, 1, 0, 0});
    SceneSequence s(Skeleton::template_skeleton(1), 1, 15, p);
    const auto r = augment(s, Rotate{std::numbers::pi / 2});
    CHECK(std::abs(r.at(0, 0, 0, 0)) <= 1e-15);
    CHECK(r.at(0, 0, 0, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(augment(s, Rotate{-0.1}), InvalidArgument);
    CHECK_THROWS_AS(augment(s, Rotate{7.0}), InvalidArgument);
  }

  TEST_CASE("permutation then inverse restores the scene") {
    Gen g(11);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t N = g.index(1, 5);
      const auto s = g.scene(N, 3, 3);
      const auto order = g.permutation(N);
      const auto p = augment(s, Permute{order});
      for (std::size_t n = 0; n < N; ++n) CHECK(p.at(1, n, 2, 0) == s.at(1, order[n], 2, 0));
      CHECK(augment(p, Permute{inverse_permutation(order)}).positions() == s.positions());
    }
    const auto s = g.scene(2, 3, 3);
    CHECK_THROWS_AS(augment(s, Permute{{0, 0}}), InvalidArgument);
    CHECK_THROWS_AS(augment(s, Permute{{0}}), InvalidArgument);
  }

  TEST_CASE("reversal is an involution and swaps end frames") {
    Gen g(12);
    const auto s = g.scene(2, 3, 5);
    const auto r = augment(s, Reverse{});
    CHECK(r.at(0, 1, 2, 1) == s.at(4, 1, 2, 1));
    CHECK(augment(r, Reverse{}).positions() == s.positions());
  }
}

TEST_SUITE("synth") {
  TEST_CASE("same seed gives identical scenes, different seeds differ") {
    for (auto kind : {MotionKind::Static, MotionKind::ConstantVelocity, MotionKind::Circular,
                      MotionKind::TwoPersonApproach}) {
      SynthOptions o;
      o.kind = kind;
      o.seed = 5;
      const auto a = synth_scene(o);
      const auto b = synth_scene(o);
      CHECK(a.positions() == b.positions());
      o.seed = 6;
      CHECK_FALSE(synth_scene(o).positions() == a.positions());
    }
  }

  TEST_CASE("bone lengths are constant over time") {
    for (auto kind : {MotionKind::Static, MotionKind::ConstantVelocity, MotionKind::Circular,
                      MotionKind::TwoPersonApproach}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SynthOptions o;
        o.kind = kind;
        o.seed = seed;
        o.persons = 2;
        const auto s = synth_scene(o);
        for (auto [a, b] : s.skeleton().bones) {
          for (std::size_t n = 0; n < s.persons(); ++n) {
            const double l0 = bone_length(s, 0, n, a, b);
            CHECK(l0 > 0);
            for (std::size_t t = 1; t < s.frames(); ++t) {
              CHECK(std::abs(bone_length(s, t, n, a, b) - l0) <= 1e-9);
            }
          }
        }
      }
    }
  }

  TEST_CASE("static scenes do not move; constant-velocity scenes move by a fixed step") {
    SynthOptions o;
    o.kind = MotionKind::Static;
    const auto st = synth_scene(o);
    const std::size_t stride = st.persons() * st.joints() * 3;
    for (std::size_t t = 1; t < st.frames(); ++t)
      for (std::size_t i = 0; i < stride; ++i)
        CHECK(st.positions()[t * stride + i] == st.positions()[i]);

    o.kind = MotionKind::ConstantVelocity;
    o.seed = 3;
    const auto cv = synth_scene(o);
    for (std::size_t n = 0; n < cv.persons(); ++n) {
      const Vec3 v = synth_velocity(o.seed, n);
      for (std::size_t t = 1; t < cv.frames(); ++t)
        for (std::size_t j = 0; j < cv.joints(); ++j)
          for (std::size_t c = 0; c < 3; ++c)
            CHECK(std::abs(cv.at(t, n, j, c) - cv.at(t - 1, n, j, c) - v[c]) <= 1e-9);
    }
  }

  TEST_CASE("motion kind names round trip") {
    for (auto kind : {MotionKind::Static, MotionKind::ConstantVelocity, MotionKind::Circular,
                      MotionKind::TwoPersonApproach}) {
      CHECK(parse_motion_kind(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(parse_motion_kind("teleport"), InvalidArgument);
  }
}
