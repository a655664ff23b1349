#include <cmath>

#include <doctest.h>
#include <json.hpp>

#include "jrt/error.hpp"
#include "jrt/metrics.hpp"
#include "support.hpp"

using namespace jrt;
using jrt::test::Gen;

namespace {

double idx(const Tensor<double>& t, std::size_t f, std::size_t n, std::size_t j, std::size_t c) {
  return t[((f * t.dim(1) + n) * t.dim(2) + j) * 3 + c];
}

Tensor<double> one_offset(std::size_t T, std::size_t N, std::size_t J, double x, double y, double z) {
  Tensor<double> t({T, N, J, 3});
  for (std::size_t i = 0; i < t.size(); i += 3) {
    t[i] = x;
    t[i + 1] = y;
    t[i + 2] = z;
  }
  return t;
}

}  // namespace

TEST_SUITE("vim") {
  TEST_CASE("perfect prediction is zero") {
    Gen g(1);
    auto a = g.tensor({3, 2, 4, 3});
    for (std::size_t t = 1; t <= 3; ++t) CHECK(vim(a, a, t) == 0.0);
  }

  TEST_CASE("single joint error (3,0,4) gives 5") {
    CHECK(vim(one_offset(1, 1, 1, 3, 0, 4), Tensor<double>({1, 1, 1, 3}), 1) == 5.0);
  }

  TEST_CASE("person norms 5 and 13 average to 9") {
    Tensor<double> pred({1, 2, 1, 3}, std::vector<double>{3, 0, 4, 5, 12, 0});
    CHECK(vim(pred, Tensor<double>({1, 2, 1, 3}), 1) == 9.0);
  }

  TEST_CASE("frame out of range is rejected") {
    Tensor<double> a({2, 1, 1, 3});
    CHECK_THROWS_AS(vim(a, a, 0), InvalidArgument);
    CHECK_THROWS_AS(vim(a, a, 3), InvalidArgument);
    CHECK_THROWS_AS(vim(a, Tensor<double>({3, 1, 1, 3}), 1), ShapeError);
  }
}

TEST_SUITE("mpjpe") {
  TEST_CASE("uniform (0,3,4) error gives 5") {
    CHECK(mpjpe(one_offset(4, 2, 3, 0, 3, 4), Tensor<double>({4, 2, 3, 3})) == doctest::Approx(5.0).epsilon(1e-15));
  }

  TEST_CASE("single joint: mpjpe is the mean of per-frame vim") {
    Gen g(2);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t T = g.index(1, 6);
      auto a = g.tensor({T, 1, 1, 3});
      auto b = g.tensor({T, 1, 1, 3});
      double m = 0;
      for (std::size_t t = 1; t <= T; ++t) m += vim(a, b, t);
      CHECK(std::abs(mpjpe(a, b) - m / static_cast<double>(T)) <= 1e-12);
    }
  }

  TEST_CASE("prefix variant restricts frames") {
    Gen g(3);
    auto a = g.tensor({5, 2, 2, 3});
    auto b = g.tensor({5, 2, 2, 3});
    CHECK(mpjpe_prefix(a, b, 5) == doctest::Approx(mpjpe(a, b)).epsilon(1e-14));
    Tensor<double> a2({2, 2, 2, 3}), b2({2, 2, 2, 3});
    for (std::size_t i = 0; i < a2.size(); ++i) {
      a2[i] = a[i];
      b2[i] = b[i];
    }
    CHECK(mpjpe_prefix(a, b, 2) == doctest::Approx(mpjpe(a2, b2)).epsilon(1e-14));
    CHECK_THROWS_AS(mpjpe_prefix(a, b, 0), InvalidArgument);
    CHECK_THROWS_AS(mpjpe_prefix(a, b, 6), InvalidArgument);
  }

  TEST_CASE("rotation and person permutation leave metrics unchanged") {
    Gen g(4);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t N = g.index(1, 4);
      auto a = g.tensor({3, N, 4, 3});
      auto b = g.tensor({3, N, 4, 3});
      const double th = g.uniform(0, 6.28), c = std::cos(th), s = std::sin(th);
      auto rot = [&](Tensor<double> t) {
        for (std::size_t i = 0; i < t.size(); i += 3) {
          const double x = t[i], y = t[i + 1], z = t[i + 2];
          t[i] = c * x - s * z;
          t[i + 1] = y;
          t[i + 2] = s * x + c * z;
        }
        return t;
      };
      const auto order = g.permutation(N);
      auto perm = [&](const Tensor<double>& t) {
        Tensor<double> out(t.shape());
        for (std::size_t f = 0; f < 3; ++f)
          for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < 12; ++k) out[(f * N + n) * 12 + k] = t[(f * N + order[n]) * 12 + k];
        return out;
      };
      CHECK(std::abs(mpjpe(rot(a), rot(b)) - mpjpe(a, b)) <= 1e-9);
      CHECK(std::abs(mpjpe(perm(a), perm(b)) - mpjpe(a, b)) <= 1e-12);
      for (std::size_t t = 1; t <= 3; ++t) {
        CHECK(std::abs(vim(rot(a), rot(b), t) - vim(a, b, t)) <= 1e-9);
        CHECK(std::abs(vim(perm(a), perm(b), t) - vim(a, b, t)) <= 1e-12);
      }
    }
  }
}

TEST_SUITE("zero velocity") {
  TEST_CASE("every predicted frame is the last history frame, bitwise") {
    Gen g(5);
    auto h = g.tensor({4, 2, 3, 3});
    auto z = zero_velocity_baseline(h, 5);
    CHECK(z.shape() == Shape{5, 2, 3, 3});
    for (std::size_t f = 0; f < 5; ++f)
      for (std::size_t k = 0; k < 18; ++k) CHECK(z[f * 18 + k] == h[3 * 18 + k]);
  }

  TEST_CASE("constant velocity s gives mpjpe s(T_f+1)/2") {
    const double s = 0.7;
    const std::size_t Tf = 6;
    Tensor<double> h({3, 1, 2, 3});
    Tensor<double> gt({Tf, 1, 2, 3});
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t j = 0; j < 2; ++j) h[(t * 2 + j) * 3] = s * static_cast<double>(t);
    for (std::size_t t = 0; t < Tf; ++t)
      for (std::size_t j = 0; j < 2; ++j) gt[(t * 2 + j) * 3] = s * static_cast<double>(t + 3);
    const auto z = zero_velocity_baseline(h, Tf);
    CHECK(std::abs(mpjpe(z, gt) - s * (Tf + 1) / 2.0) <= 1e-12);
  }
}

TEST_SUITE("score and report") {
  TEST_CASE("frames beyond the horizon and short horizons are skipped") {
    Gen g(6);
    auto a = g.tensor({14, 2, 3, 3});
    auto b = g.tensor({14, 2, 3, 3});
    EvalSettings st;
    st.vim_frames = {2, 4, 20};
    st.mpjpe_horizons_s = {0.01, 0.5, 5};
    st.unit_scale = 100;
    const auto m = score(a, b, 15, st);
    CHECK(m.vim_at.size() == 2);
    CHECK(m.vim_at.at(2) == doctest::Approx(100 * vim(a, b, 2)));
    CHECK(m.vim_avg == doctest::Approx((m.vim_at.at(2) + m.vim_at.at(4)) / 2));
    CHECK(m.mpjpe_at.size() == 1);
    CHECK(m.mpjpe_at.at(0.5) == doctest::Approx(100 * mpjpe_prefix(a, b, 8)));
    CHECK(m.mpjpe == doctest::Approx(100 * mpjpe(a, b)));
  }

  TEST_CASE("aggregate averages per key and serializes") {
    EvalReport r;
    r.method_names = {"m"};
    for (double v : {1.0, 3.0}) {
      SceneScores s;
      s.name = "s" + std::to_string(static_cast<int>(v));
      MethodScores ms;
      ms.vim_at[2] = v;
      ms.vim_avg = v;
      ms.mpjpe = 2 * v;
      s.methods["m"] = ms;
      r.scenes.push_back(s);
    }
    r.aggregate();
    CHECK(r.methods.at("m").vim_at.at(2) == 2.0);
    CHECK(r.methods.at("m").mpjpe == 4.0);
    const auto j = nlohmann::json::parse(r.to_json());
    CHECK(j.contains("methods"));
    const std::string csv = r.to_csv();
    CHECK(csv.find("s1") != std::string::npos);
    CHECK(csv.find("s3") != std::string::npos);
  }
}
