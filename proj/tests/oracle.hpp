#pragma once

// Loop-by-loop reference of the full model in double, written against the
// parameter names only. Shares no code with the library's graph ops.

#include <cmath>
#include <string>
#include <vector>

#include "jrt/model.hpp"
#include "jrt/params.hpp"

namespace jrt::oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;   // [M][D]
using Cube = std::vector<Mat>;  // [M][M][D]
using P = ParamSet<double>;

inline Vec dense(const Vec& x, const Tensor<double>& w, const Tensor<double>* b) {
  Vec y(w.dim(1));
  for (std::size_t o = 0; o < y.size(); ++o) {
    double s = b ? (*b)[o] : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * w.at(i, o);
    y[o] = s;
  }
  return y;
}

inline Vec mlp(const Vec& x, const P& p, const std::string& prefix, std::size_t depth) {
  Vec h = x;
  for (std::size_t i = 0; i < depth; ++i) {
    const std::string base = prefix + ".fc" + std::to_string(i + 1);
    h = dense(h, p[base + ".weight"], &p[base + ".bias"]);
    if (i + 1 < depth)
      for (double& v : h) v = v > 0 ? v : 0;
  }
  return h;
}

inline Vec layer_norm(const Vec& x, const P& p, const std::string& prefix) {
  double mean = 0, var = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  Vec y(x.size());
  const auto& g = p[prefix + ".gamma"];
  const auto& b = p[prefix + ".beta"];
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean) / std::sqrt(var + 1e-5) * g[i] + b[i];
  return y;
}

inline Vec add(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec cat(std::initializer_list<const Vec*> parts) {
  Vec out;
  for (const Vec* p : parts) out.insert(out.end(), p->begin(), p->end());
  return out;
}

struct State {
  Mat joints;
  Cube relations;
};

// [H][M][M] relation score for one layer.
inline std::vector<Mat> relation_score(const Cube& fr, const P& p, const std::string& pre,
                                       std::size_t heads, std::size_t quad) {
  const std::size_t M = fr.size();
  std::vector<Mat> s(heads, Mat(M, Vec(M)));
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      const Vec lin = dense(fr[i][j], p[pre + ".score.w_lin"], nullptr);
      const Vec a = dense(fr[i][j], p[pre + ".score.w_quad1"], nullptr);
      const Vec b = dense(fr[i][j], p[pre + ".score.w_quad2"], nullptr);
      for (std::size_t h = 0; h < heads; ++h) {
        double q = 0;
        for (std::size_t d = 0; d < quad; ++d) q += a[h * quad + d] * b[h * quad + d];
        s[h][i][j] = lin[h] + q;
      }
    }
  }
  return s;
}

struct LayerOut {
  State state;
  std::vector<Mat> attention;  // [H][M][M]
};

inline LayerOut layer(const State& in, const Mat& pe, const P& p, const ModelConfig& cfg,
                      std::size_t l) {
  const std::string pre = layer_prefix(l);
  const std::size_t M = in.joints.size();
  const std::size_t H = cfg.heads, dk = cfg.key_dim / cfg.heads;
  Mat fj(M);
  Cube fr(M, Mat(M));
  for (std::size_t i = 0; i < M; ++i) {
    fj[i] = add(in.joints[i], pe[i]);
    for (std::size_t j = 0; j < M; ++j) fr[i][j] = add(add(in.relations[i][j], pe[i]), pe[j]);
  }
  Mat q(M), k(M), v(M);
  for (std::size_t i = 0; i < M; ++i) {
    q[i] = dense(fj[i], p[pre + ".attn.w_q"], nullptr);
    k[i] = dense(fj[i], p[pre + ".attn.w_k"], nullptr);
    v[i] = dense(fj[i], p[pre + ".attn.w_v"], nullptr);
  }
  const auto score = relation_score(fr, p, pre, H, cfg.quad_dim);
  LayerOut out;
  out.attention.assign(H, Mat(M, Vec(M)));
  Mat heads(M, Vec(cfg.key_dim, 0.0));
  for (std::size_t h = 0; h < H; ++h) {
    for (std::size_t i = 0; i < M; ++i) {
      Vec logit(M);
      double mx = -1e300;
      for (std::size_t j = 0; j < M; ++j) {
        double dot = 0;
        for (std::size_t d = 0; d < dk; ++d) dot += q[i][h * dk + d] * k[j][h * dk + d];
        logit[j] = (dot + score[h][i][j]) / std::sqrt(static_cast<double>(dk));
        mx = std::max(mx, logit[j]);
      }
      double z = 0;
      for (double& x : logit) z += x = std::exp(x - mx);
      for (std::size_t j = 0; j < M; ++j) {
        const double w = logit[j] / z;
        out.attention[h][i][j] = w;
        for (std::size_t d = 0; d < dk; ++d) heads[i][h * dk + d] += w * v[j][h * dk + d];
      }
    }
  }
  Mat joints(M);
  for (std::size_t i = 0; i < M; ++i) {
    const Vec x = add(fj[i], dense(heads[i], p[pre + ".attn.w_o"], nullptr));
    joints[i] = layer_norm(add(x, mlp(x, p, pre + ".joint_ffn", 2)), p, pre + ".joint_norm");
  }
  Cube rel(M, Mat(M));
  for (std::size_t i = 0; i < M; ++i) {
    for (std::size_t j = 0; j < M; ++j) {
      const Vec msg = cat({&joints[i], &joints[j], &fr[i][j], &fr[j][i]});
      const Vec r = add(fr[i][j], mlp(layer_norm(msg, p, pre + ".rel_norm1"), p, pre + ".rel_lu1", 2));
      rel[i][j] = add(r, mlp(layer_norm(r, p, pre + ".rel_norm2"), p, pre + ".rel_lu2", 2));
    }
  }
  out.state = {std::move(joints), std::move(rel)};
  return out;
}

struct Decoded {
  Tensor<double> recon_x, pred_y, recon_d, pred_d;
};

inline Decoded decode(const State& s, const P& p, const ModelConfig& cfg) {
  const std::size_t M = s.joints.size(), Th = cfg.history, Tf = cfg.future;
  Decoded d{Tensor<double>({M, Th * 3}), Tensor<double>({M, Tf * 3}), Tensor<double>({M, M, Th}),
            Tensor<double>({M, M, Tf})};
  for (std::size_t i = 0; i < M; ++i) {
    const Vec y = mlp(s.joints[i], p, "joint_decoder", 3);
    for (std::size_t c = 0; c < Th * 3; ++c) d.recon_x.at(i, c) = y[c];
    for (std::size_t c = 0; c < Tf * 3; ++c) d.pred_y.at(i, c) = y[Th * 3 + c];
    for (std::size_t j = 0; j < M; ++j) {
      const Vec r = dense(s.relations[i][j], p["relation_decoder.weight"], &p["relation_decoder.bias"]);
      for (std::size_t t = 0; t < Th; ++t) d.recon_d.at(i, j, t) = r[t];
      for (std::size_t t = 0; t < Tf; ++t) d.pred_d.at(i, j, t) = r[Th + t];
    }
  }
  return d;
}

inline double joint_error(const Tensor<double>& pred, const Tensor<double>& gt) {
  double s = 0;
  const std::size_t n = pred.size() / 3;
  for (std::size_t k = 0; k < n; ++k) {
    double e = 0;
    for (std::size_t c = 0; c < 3; ++c) e += std::pow(pred[3 * k + c] - gt[3 * k + c], 2);
    s += std::sqrt(e);
  }
  return s / static_cast<double>(n);
}

inline double abs_error(const Tensor<double>& pred, const Tensor<double>& gt) {
  double s = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) s += std::abs(pred[k] - gt[k]);
  return s / static_cast<double>(pred.size());
}

// The four loss terms of one decoded state.
struct Terms {
  double jr, jp, rr, rp;
};

inline Terms terms(const Decoded& d, const Sample& s) {
  return {joint_error(d.recon_x, s.joints_history), joint_error(d.pred_y, s.joints_future),
          abs_error(d.recon_d, s.relation_history), abs_error(d.pred_d, s.relation_future)};
}

struct Result {
  std::vector<State> states;  // 0..L
  std::vector<std::vector<Mat>> attention;
  Decoded out;
  Terms final_terms{};
  double deep_sup = 0;
  double total = 0;
};

inline Result forward(const P& p, const ModelConfig& cfg, const Sample& s, const LossWeights& w) {
  const std::size_t N = s.persons, J = cfg.joints, M = N * J, Th = cfg.history;
  State st{Mat(M), Cube(M, Mat(M))};
  auto hist = [&](std::size_t t, std::size_t g, std::size_t c) { return s.history[(t * M + g) * 3 + c]; };
  for (std::size_t g = 0; g < M; ++g) {
    Vec f(6 * Th);
    for (std::size_t t = 0; t < Th; ++t) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double x = hist(t, g, c);
        f[t * 3 + c] = x;
        f[3 * Th + t * 3 + c] = t == 0 ? 0.0 : x - hist(t - 1, g, c);
      }
    }
    st.joints[g] = mlp(f, p, "joint_encoder", 2);
    for (std::size_t h = 0; h < M; ++h) {
      Vec r(Th + 2);
      for (std::size_t c = 0; c < Th + 2; ++c) r[c] = s.relations.at(g, h, c);
      st.relations[g][h] = dense(r, p["relation_encoder.weight"], &p["relation_encoder.bias"]);
    }
  }
  Mat pe(M, Vec(cfg.dim));
  for (std::size_t g = 0; g < M; ++g)
    for (std::size_t d = 0; d < cfg.dim; ++d)
      pe[g][d] = p["embedding.person"].at(g / J, d) + p["embedding.joint"].at(g % J, d);

  Result r;
  r.states.push_back(st);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    auto lo = layer(r.states.back(), pe, p, cfg, l);
    r.states.push_back(std::move(lo.state));
    r.attention.push_back(std::move(lo.attention));
  }
  r.out = decode(r.states.back(), p, cfg);
  r.final_terms = terms(r.out, s);
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const Terms t = terms(decode(r.states[l], p, cfg), s);
    r.deep_sup += (t.jr + w.joint * t.jp) + (t.rr + w.relation * t.rp);
  }
  const Terms& f = r.final_terms;
  r.total = LossBreakdown::combine(f.jr, f.jp, f.rr, f.rp, r.deep_sup, w);
  return r;
}

inline double max_diff(const Mat& a, const Tensor<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t d = 0; d < a[i].size(); ++d) m = std::max(m, std::abs(a[i][d] - b.at(i, d)));
  return m;
}

inline double max_diff(const Cube& a, const Tensor<double>& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j)
      for (std::size_t d = 0; d < a[i][j].size(); ++d)
        m = std::max(m, std::abs(a[i][j][d] - b.at(i, j, d)));
  return m;
}

}  // namespace jrt::oracle
