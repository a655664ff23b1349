#include <cmath>

#include <doctest.h>

#include "jrt/encoders.hpp"
#include "jrt/error.hpp"
#include "jrt/model.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace jrt;
using jrt::test::Gen;

namespace {

template <class T>
T scalar(const Var<T>& v) {
  return v.value()[0];
}

Sample tiny_sample(Gen& g, std::size_t persons, const ModelConfig& cfg) {
  return prepare_sample(g.scene(persons, cfg.joints, cfg.history + cfg.future, 1.0),
                        {cfg.history, cfg.future}, RelTargetSpace::Exp);
}

ForwardResult<double> run(const ParamSet<double>& p, const ModelConfig& cfg, const Sample& s,
                          const LossWeights& w = {}) {
  ForwardOptions o;
  o.keep_attention = true;
  return forward(BoundParams<double>::constants(p), cfg, s, w, o);
}

}  // namespace

TEST_SUITE("encoders") {
  TEST_CASE("motion features: positions then velocities, zero velocity at t=0") {
    Tensor<double> h({2, 1, 1, 3}, std::vector<double>{1, 2, 3, 4, 6, 8});
    auto f = joint_motion_features<double>(h);
    CHECK(f.shape() == Shape{1, 12});
    CHECK(f.storage() == std::vector<double>{1, 2, 3, 4, 6, 8, 0, 0, 0, 3, 4, 5});
  }

  TEST_CASE("positional embedding sums person and joint rows") {
    Gen g(3);
    auto pe_p = g.tensor({3, 4});
    auto pe_j = g.tensor({2, 4});
    auto pe = joint_positions_embedding(constant(pe_p), constant(pe_j), 2, 2).value();
    CHECK(pe.shape() == Shape{4, 4});
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t d = 0; d < 4; ++d) CHECK(pe.at(i, d) == pe_p.at(i / 2, d) + pe_j.at(i % 2, d));
    CHECK_THROWS_AS(joint_positions_embedding(constant(pe_p), constant(pe_j), 4, 2), InvalidArgument);
    CHECK_THROWS_AS(joint_positions_embedding(constant(pe_p), constant(pe_j), 2, 3), ShapeError);
  }

  TEST_CASE("pair positional term is PE_i + PE_j") {
    Gen g(4);
    auto pe = g.tensor({3, 2});
    auto [fj, fr] = add_positional(constant(Tensor<double>({3, 2})), constant(Tensor<double>({3, 3, 2})),
                                   constant(pe));
    CHECK(fj.value() == pe);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t d = 0; d < 2; ++d) CHECK(fr.value().at(i, j, d) == pe.at(i, d) + pe.at(j, d));
  }
}

TEST_SUITE("fusion") {
  TEST_CASE("message tensor layout") {
    Gen g(5);
    auto fj = g.tensor({3, 2});
    auto fr = g.tensor({3, 3, 2});
    auto m = collect_messages(constant(fj), constant(fr)).value();
    REQUIRE(m.shape() == Shape{3, 3, 8});
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t d = 0; d < 2; ++d) {
          CHECK(m.at(i, j, d) == fj.at(i, d));
          CHECK(m.at(i, j, 2 + d) == fj.at(j, d));
          CHECK(m.at(i, j, 4 + d) == fr.at(i, j, d));
          CHECK(m.at(i, j, 6 + d) == fr.at(j, i, d));
        }
    CHECK_THROWS_AS(collect_messages(constant(fj), constant(g.tensor({3, 2, 2}))), ShapeError);
  }

  TEST_CASE("relation score is zero at standard initialization") {
    const auto cfg = ModelConfig::tiny();
    auto p = init_params<double>(cfg, 1);
    auto layer = FusionLayer<double>::bind(BoundParams<double>::constants(p), cfg, 0);
    Gen g(6);
    auto s = relation_score(constant(g.tensor({4, 4, cfg.dim})), layer).value();
    CHECK(s.shape() == Shape{cfg.heads, 4, 4});
    for (double v : s.data()) CHECK(v == 0.0);
  }

  TEST_CASE("attention rows are distributions") {
    const auto cfg = ModelConfig::tiny();
    auto p = init_params<double>(cfg, 2, InitMode::Random);
    Gen g(7);
    const auto r = run(p, cfg, tiny_sample(g, 2, cfg));
    REQUIRE(r.attention.size() == cfg.layers);
    for (const auto& a : r.attention) {
      const std::size_t H = a.dim(0), M = a.dim(1);
      for (std::size_t h = 0; h < H; ++h)
        for (std::size_t i = 0; i < M; ++i) {
          double s = 0;
          for (std::size_t j = 0; j < M; ++j) s += a.at(h, i, j);
          CHECK(std::abs(s - 1) <= 1e-12);
        }
    }
  }
}

TEST_SUITE("heads") {
  TEST_CASE("joint error of a (0,3,4) offset is 5") {
    Tensor<double> target({1, 6});
    Tensor<double> pred({1, 6}, std::vector<double>{0, 3, 4, 0, 3, 4});
    CHECK(scalar(mean_joint_error(constant(pred), target)) == 5.0);
    CHECK_THROWS_AS(mean_joint_error(constant(pred), Tensor<double>({1, 3})), ShapeError);
  }

  TEST_CASE("relation error is the mean absolute difference") {
    Tensor<double> target({1, 1, 4});
    Tensor<double> pred({1, 1, 4}, std::vector<double>{1, -2, 3, -4});
    CHECK(scalar(mean_abs_error(constant(pred), target)) == 2.5);
  }

  TEST_CASE("decoder shapes follow the history/future split") {
    const auto cfg = ModelConfig::tiny();
    auto p = init_params<double>(cfg, 3);
    Gen g(8);
    const auto r = run(p, cfg, tiny_sample(g, 2, cfg));
    const std::size_t M = 2 * cfg.joints;
    CHECK(r.recon_x.shape() == Shape{M, cfg.history * 3});
    CHECK(r.pred_y.shape() == Shape{M, cfg.future * 3});
    CHECK(r.recon_d.shape() == Shape{M, M, cfg.history});
    CHECK(r.pred_d.shape() == Shape{M, M, cfg.future});
    CHECK(r.states.size() == cfg.layers + 1);
  }
}

TEST_SUITE("model") {
  TEST_CASE("forward matches the loop oracle for every person count") {
    auto cfg = ModelConfig::tiny();
    cfg.max_persons = 3;
    cfg.quad_dim = 3;
    cfg.key_dim = 6;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto p = init_params<double>(cfg, seed, InitMode::Random);
      Gen g(seed + 100);
      for (std::size_t N = 1; N <= cfg.max_persons; ++N) {
        CAPTURE(N);
        const Sample s = tiny_sample(g, N, cfg);
        const LossWeights w{3.0, 7.0};
        const auto r = run(p, cfg, s, w);
        const auto o = oracle::forward(p, cfg, s, w);
        for (std::size_t l = 0; l <= cfg.layers; ++l) {
          CHECK(oracle::max_diff(o.states[l].joints, r.states[l].joints.value()) <= 1e-10);
          CHECK(oracle::max_diff(o.states[l].relations, r.states[l].relations.value()) <= 1e-10);
        }
        for (std::size_t l = 0; l < cfg.layers; ++l)
          for (std::size_t h = 0; h < cfg.heads; ++h)
            for (std::size_t i = 0; i < s.persons * cfg.joints; ++i)
              for (std::size_t j = 0; j < s.persons * cfg.joints; ++j)
                CHECK(std::abs(o.attention[l][h][i][j] - r.attention[l].at(h, i, j)) <= 1e-12);
        CHECK(max_abs_diff(o.out.pred_y, r.pred_y.value()) <= 1e-10);
        CHECK(max_abs_diff(o.out.pred_d, r.pred_d.value()) <= 1e-10);
        const auto b = r.breakdown();
        CHECK(std::abs(b.joint_recon - o.final_terms.jr) <= 1e-10);
        CHECK(std::abs(b.rel_pred - o.final_terms.rp) <= 1e-10);
        CHECK(std::abs(b.deep_sup - o.deep_sup) <= 1e-9);
        CHECK(std::abs(b.total - o.total) <= 1e-9);
      }
    }
  }

  TEST_CASE("total equals the fixed-order combination exactly") {
    const auto cfg = ModelConfig::tiny();
    const LossWeights w{10, 10};
    Gen g(9);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto p = init_params<double>(cfg, seed, InitMode::Random);
      const auto b = run(p, cfg, tiny_sample(g, 2, cfg), w).breakdown();
      CHECK(b.total == LossBreakdown::combine(b.joint_recon, b.joint_pred, b.rel_recon, b.rel_pred,
                                              b.deep_sup, w));
      auto pf = p.cast<float>();
      const auto s = tiny_sample(g, 1, cfg);
      const auto rf = forward(BoundParams<float>::constants(pf), cfg, s, w);
      const float tf = scalar(rf.total);
      CHECK(tf == LossBreakdown::combine<float>(scalar(rf.joint_recon), scalar(rf.joint_pred),
                                                scalar(rf.rel_recon), scalar(rf.rel_pred),
                                                scalar(rf.deep_sup), w));
    }
  }

  TEST_CASE("float and double forwards agree") {
    const auto cfg = ModelConfig::tiny();
    auto p = init_params<double>(cfg, 11, InitMode::Random);
    Gen g(10);
    const auto s = tiny_sample(g, 2, cfg);
    const auto rd = forward(BoundParams<double>::constants(p), cfg, s, {});
    const auto rf = forward(BoundParams<float>::constants(p.cast<float>()), cfg, s, {});
    CHECK(max_abs_diff(rd.pred_y.value(), rf.pred_y.value().cast<double>()) <= 1e-4);
    CHECK(std::abs(scalar(rd.total) - static_cast<double>(scalar(rf.total))) <=
          1e-4 * std::abs(scalar(rd.total)));
  }

  TEST_CASE("person permutation permutes predictions") {
    const auto cfg = ModelConfig::tiny();
    auto p = init_params<double>(cfg, 12, InitMode::Random);
    Gen g(11);
    const auto scene = g.scene(2, cfg.joints, cfg.history + cfg.future, 1.0);
    const auto swapped = augment(scene, Permute{{1, 0}});
    // Normalizing on person 0 would change the frame; compare raw coordinates.
    const auto a = prepare_sample(scene, {cfg.history, cfg.future}, RelTargetSpace::Exp, false);
    const auto b = prepare_sample(swapped, {cfg.history, cfg.future}, RelTargetSpace::Exp, false);
    // Embeddings tie joints to person slots, so equivariance holds when the
    // person rows are equal.
    for (std::size_t d = 0; d < cfg.dim; ++d) p["embedding.person"].at(1, d) = p["embedding.person"].at(0, d);
    const auto ra = run(p, cfg, a);
    const auto rb = run(p, cfg, b);
    const std::size_t J = cfg.joints;
    const auto& ya = ra.pred_y.value();
    const auto& yb = rb.pred_y.value();
    for (std::size_t i = 0; i < 2 * J; ++i) {
      const std::size_t src = (1 - i / J) * J + i % J;
      for (std::size_t c = 0; c < ya.dim(1); ++c) CHECK(std::abs(yb.at(i, c) - ya.at(src, c)) <= 1e-9);
    }
    CHECK(std::abs(ra.breakdown().total - rb.breakdown().total) <= 1e-9);
  }

  TEST_CASE("samples that do not fit the model are rejected") {
    const auto cfg = ModelConfig::tiny();
    auto p = init_params<double>(cfg, 0);
    Gen g(12);
    const auto too_many = prepare_sample(g.scene(3, cfg.joints, 6, 1.0), {4, 2}, RelTargetSpace::Exp);
    CHECK_THROWS_AS(run(p, cfg, too_many), InvalidArgument);
    const auto wrong_j = prepare_sample(g.scene(1, 4, 6, 1.0), {4, 2}, RelTargetSpace::Exp);
    CHECK_THROWS_AS(run(p, cfg, wrong_j), InvalidArgument);
    CHECK_THROWS_AS(prepare_sample(g.scene(1, 3, 7, 1.0), {4, 2}, RelTargetSpace::Exp), InvalidArgument);
  }

  TEST_CASE("raw relation targets are distances") {
    Gen g(13);
    const auto scene = g.scene(2, 3, 6);
    const auto e = prepare_sample(scene, {4, 2}, RelTargetSpace::Exp);
    const auto r = prepare_sample(scene, {4, 2}, RelTargetSpace::Raw);
    for (std::size_t i = 0; i < e.relation_future.size(); ++i)
      CHECK(std::abs(std::exp(-r.relation_future[i]) - e.relation_future[i]) <= 1e-15);
  }

  TEST_CASE("flatten and unflatten are inverse") {
    Gen g(14);
    auto f = g.tensor({3, 2, 4, 3});
    CHECK(unflatten_frames(flatten_frames(f), 2, 4) == f);
  }

  TEST_CASE("parameter layout is stable and covers every block") {
    const auto cfg = ModelConfig::tiny();
    const auto layout = param_layout(cfg);
    auto p = init_params<double>(cfg, 0);
    REQUIRE(layout.size() == p.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      CHECK(layout[i].name == p.blocks()[i].name);
      CHECK(layout[i].shape == p.blocks()[i].value.shape());
    }
    CHECK(init_params<double>(cfg, 5).flatten() == init_params<double>(cfg, 5).flatten());
    CHECK_FALSE(init_params<double>(cfg, 5).flatten() == init_params<double>(cfg, 6).flatten());
    ModelConfig bad = cfg;
    bad.key_dim = 7;
    CHECK_THROWS_AS(param_layout(bad), ConfigError);
  }
}
