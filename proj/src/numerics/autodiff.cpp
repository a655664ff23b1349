#include "jrt/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "jrt/kernels.hpp"

namespace jrt {

namespace {
std::atomic<bool> g_debug_checks{false};
}

void set_debug_checks(bool enabled) { g_debug_checks.store(enabled); }
bool debug_checks() { return g_debug_checks.load(); }

template <std::floating_point T>
void Node<T>::accumulate(const Tensor<T>& g) {
  if (grad.empty()) {
    grad = g;
    return;
  }
  auto dst = grad.data();
  auto src = g.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <std::floating_point T>
Tensor<T>& Node<T>::grad_buffer() {
  if (grad.empty()) grad = Tensor<T>(value.shape());
  return grad;
}

template <std::floating_point T>
Var<T> Tape<T>::leaf(Tensor<T> value, bool requires_grad) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = requires_grad;
  nodes_.push_back(n);
  return Var<T>(std::move(n), this);
}

template <std::floating_point T>
void Tape<T>::backward(const Var<T>& loss) {
  if (consumed_) throw InvalidArgument("backward: tape already consumed");
  if (!loss.valid() || loss.tape() != this) {
    throw InvalidArgument("backward: loss was not recorded on this tape");
  }
  if (loss.value().size() != 1) {
    throw ShapeError("backward: loss must be scalar, got shape " + to_string(loss.shape()));
  }
  if (nodes_.empty()) throw InvalidArgument("backward: empty graph");
  loss.node()->accumulate(Tensor<T>(loss.shape(), T{1}));
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<T>& n = **it;
    if (n.backward && !n.grad.empty()) n.backward(n.grad);
  }
  for (auto& n : nodes_) n->backward = nullptr;
  nodes_.clear();
  consumed_ = true;
}

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t r = std::max(a.size(), b.size());
  Shape out(r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t ea = i < r - a.size() ? 1 : a[i - (r - a.size())];
    const std::size_t eb = i < r - b.size() ? 1 : b[i - (r - b.size())];
    if (ea != eb && ea != 1 && eb != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(a) + " with " +
                       to_string(b));
    }
    out[i] = std::max(ea, eb);
  }
  return out;
}

namespace ops {
namespace {

template <std::floating_point T>
void check_finite(const char* op, std::initializer_list<const Var<T>*> inputs) {
  if (!debug_checks()) return;
  for (const Var<T>* v : inputs) {
    if (v->valid() && !v->value().all_finite()) {
      throw NonFiniteError(std::string(op) + ": non-finite input of shape " +
                           to_string(v->shape()));
    }
  }
}

template <std::floating_point T>
Tape<T>* common_tape(const char* op, std::initializer_list<const Var<T>*> inputs) {
  Tape<T>* tape = nullptr;
  for (const Var<T>* v : inputs) {
    if (!v->valid() || !v->requires_grad() || v->tape() == nullptr) continue;
    if (tape && v->tape() != tape) {
      throw InvalidArgument(std::string(op) + ": inputs recorded on different tapes");
    }
    tape = v->tape();
  }
  return tape;
}

// Wraps an op result. Records a node with the given backward closure when
// any input is tracked; otherwise returns an untracked constant.
template <std::floating_point T, class Backward>
Var<T> emit(Tape<T>* tape, Tensor<T> value, Backward make_backward) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  if (tape == nullptr) return Var<T>(std::move(n), nullptr);
  n->requires_grad = true;
  n->backward = make_backward(n.get());
  tape->record(n);
  return Var<T>(std::move(n), tape);
}

template <std::floating_point T>
bool wants(const Var<T>& v) {
  return v.valid() && v.requires_grad();
}

// Flat-index map from an output of shape `out` to an operand of shape `in`
// broadcast into it.
std::vector<std::size_t> broadcast_map(const Shape& in, const Shape& out) {
  const std::size_t r = out.size();
  const std::size_t pad = r - in.size();
  std::vector<std::size_t> in_stride(r, 0);
  std::size_t s = 1;
  for (std::size_t i = r; i-- > pad;) {
    const std::size_t e = in[i - pad];
    in_stride[i] = e == 1 ? 0 : s;
    s *= e;
  }
  const std::size_t total = numel(out);
  std::vector<std::size_t> map(total);
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t f = 0; f < total; ++f) {
    map[f] = off;
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      off += in_stride[ax];
      if (idx[ax] < out[ax]) break;
      off -= in_stride[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return map;
}

enum class Layout { Same, Suffix, General };

struct Broadcast {
  Layout layout = Layout::Same;
  std::size_t in_size = 0;
  std::vector<std::size_t> map;

  Broadcast(const Shape& in, const Shape& out) : in_size(numel(in)) {
    if (in == out) {
      layout = Layout::Same;
    } else if (in.size() <= out.size() &&
               std::equal(in.begin(), in.end(), out.end() - static_cast<std::ptrdiff_t>(in.size()))) {
      layout = Layout::Suffix;
    } else {
      layout = Layout::General;
      map = broadcast_map(in, out);
    }
  }

  std::size_t operator()(std::size_t f) const {
    switch (layout) {
      case Layout::Same:
        return f;
      case Layout::Suffix:
        return f % in_size;
      case Layout::General:
        return map[f];
    }
    return f;
  }
};

template <std::floating_point T>
Tensor<T> reduce_to(const Tensor<T>& g, const Shape& in_shape, const Broadcast& bc) {
  if (bc.layout == Layout::Same) return g;
  Tensor<T> out(in_shape);
  for (std::size_t f = 0; f < g.size(); ++f) out[bc(f)] += g[f];
  return out;
}

template <std::floating_point T, class F>
Tensor<T> map_unary(const Tensor<T>& a, F f) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

struct AxisSplit {
  std::size_t outer = 1, extent = 1, inner = 1;
};

AxisSplit split_at(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.extent = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

void require_axis(const char* op, const Shape& s, std::size_t axis) {
  if (axis >= s.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     to_string(s));
  }
}

template <std::floating_point T>
Var<T> binary(const char* op, const Var<T>& a, const Var<T>& b, int kind) {
  check_finite(op, {&a, &b});
  Tape<T>* tape = common_tape(op, {&a, &b});
  const Shape out_shape = broadcast_shape(a.shape(), b.shape(), op);
  auto bca = std::make_shared<Broadcast>(a.shape(), out_shape);
  auto bcb = std::make_shared<Broadcast>(b.shape(), out_shape);
  Tensor<T> out(out_shape);
  const auto& av = a.value();
  const auto& bv = b.value();
  for (std::size_t f = 0; f < out.size(); ++f) {
    const T x = av[(*bca)(f)];
    const T y = bv[(*bcb)(f)];
    out[f] = kind == 0 ? x + y : kind == 1 ? x - y : x * y;
  }
  auto na = a.node();
  auto nb = b.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      if (na->requires_grad) {
        if (kind == 2) {
          Tensor<T> ga(na->value.shape());
          for (std::size_t f = 0; f < g.size(); ++f) ga[(*bca)(f)] += g[f] * nb->value[(*bcb)(f)];
          na->accumulate(ga);
        } else {
          na->accumulate(reduce_to(g, na->value.shape(), *bca));
        }
      }
      if (nb->requires_grad) {
        if (kind == 2) {
          Tensor<T> gb(nb->value.shape());
          for (std::size_t f = 0; f < g.size(); ++f) gb[(*bcb)(f)] += g[f] * na->value[(*bca)(f)];
          nb->accumulate(gb);
        } else {
          Tensor<T> gb = reduce_to(g, nb->value.shape(), *bcb);
          if (kind == 1) {
            for (auto& v : gb.data()) v = -v;
          }
          nb->accumulate(gb);
        }
      }
    };
  });
}

}  // namespace

template <std::floating_point T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  return binary<T>("add", a, b, 0);
}

template <std::floating_point T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  return binary<T>("sub", a, b, 1);
}

template <std::floating_point T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  return binary<T>("mul", a, b, 2);
}

template <std::floating_point T>
Var<T> scale(const Var<T>& a, T c) {
  check_finite("scale", {&a});
  Tape<T>* tape = common_tape("scale", {&a});
  auto na = a.node();
  return emit<T>(tape, map_unary(a.value(), [c](T x) { return c * x; }), [=](Node<T>*) {
    return [=](const Tensor<T>& g) { na->accumulate(map_unary(g, [c](T x) { return c * x; })); };
  });
}

template <std::floating_point T>
Var<T> neg(const Var<T>& a) {
  return scale(a, T{-1});
}

template <std::floating_point T>
Var<T> exp(const Var<T>& a) {
  check_finite("exp", {&a});
  Tape<T>* tape = common_tape("exp", {&a});
  auto na = a.node();
  return emit<T>(tape, map_unary(a.value(), [](T x) { return std::exp(x); }), [=](Node<T>* self) {
    return [=](const Tensor<T>& g) {
      Tensor<T> ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * self->value[i];
      na->accumulate(ga);
    };
  });
}

template <std::floating_point T>
Var<T> abs(const Var<T>& a) {
  check_finite("abs", {&a});
  Tape<T>* tape = common_tape("abs", {&a});
  Tensor<T> out = map_unary(a.value(), [](T x) { return std::abs(x); });
  if (tape) {
    for (T v : out.data()) tape->note_kink_distance(v);
  }
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      Tensor<T> ga(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) {
        const T x = na->value[i];
        ga[i] = x > 0 ? g[i] : x < 0 ? -g[i] : T{0};
      }
      na->accumulate(ga);
    };
  });
}

template <std::floating_point T>
Var<T> relu(const Var<T>& a) {
  check_finite("relu", {&a});
  Tape<T>* tape = common_tape("relu", {&a});
  if (tape) {
    for (T v : a.value().data()) tape->note_kink_distance(std::abs(v));
  }
  auto na = a.node();
  return emit<T>(tape, map_unary(a.value(), [](T x) { return x > 0 ? x : T{0}; }),
                 [=](Node<T>*) {
                   return [=](const Tensor<T>& g) {
                     Tensor<T> ga(g.shape());
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       ga[i] = na->value[i] > 0 ? g[i] : T{0};
                     }
                     na->accumulate(ga);
                   };
                 });
}

template <std::floating_point T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  check_finite("matmul", {&a, &b});
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  Tape<T>* tape = common_tape("matmul", {&a, &b});
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor<T> out({m, n});
  const auto& ks = kernels::active<T>();
  ks.gemm(kernels::Trans::No, kernels::Trans::No, m, n, k, a.value().raw(), k, b.value().raw(), n,
          out.raw(), n, false);
  auto na = a.node();
  auto nb = b.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      const auto& kk = kernels::active<T>();
      if (na->requires_grad) {
        Tensor<T>& ga = na->grad_buffer();
        kk.gemm(kernels::Trans::No, kernels::Trans::Yes, m, k, n, g.raw(), n, nb->value.raw(), n,
                ga.raw(), k, true);
      }
      if (nb->requires_grad) {
        Tensor<T>& gb = nb->grad_buffer();
        kk.gemm(kernels::Trans::Yes, kernels::Trans::No, k, n, m, na->value.raw(), k, g.raw(), n,
                gb.raw(), n, true);
      }
    };
  });
}

template <std::floating_point T>
Var<T> bmm(const Var<T>& a, const Var<T>& b, bool transpose_b) {
  check_finite("bmm", {&a, &b});
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] ||
      (transpose_b ? as[2] != bs[2] : as[2] != bs[1])) {
    throw ShapeError("bmm: " + to_string(as) + " x " + to_string(bs) +
                     (transpose_b ? " (b transposed)" : ""));
  }
  Tape<T>* tape = common_tape("bmm", {&a, &b});
  const std::size_t batch = as[0], m = as[1], k = as[2];
  const std::size_t n = transpose_b ? bs[1] : bs[2];
  const std::size_t ldb = transpose_b ? k : n;
  Tensor<T> out({batch, m, n});
  const auto& ks = kernels::active<T>();
  const auto tb = transpose_b ? kernels::Trans::Yes : kernels::Trans::No;
  for (std::size_t i = 0; i < batch; ++i) {
    ks.gemm(kernels::Trans::No, tb, m, n, k, a.value().raw() + i * m * k, k,
            b.value().raw() + i * k * n, ldb, out.raw() + i * m * n, n, false);
  }
  auto na = a.node();
  auto nb = b.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      const auto& kk = kernels::active<T>();
      for (std::size_t i = 0; i < batch; ++i) {
        const T* gi = g.raw() + i * m * n;
        const T* ai = na->value.raw() + i * m * k;
        const T* bi = nb->value.raw() + i * k * n;
        if (na->requires_grad) {
          // dA = G op(B)^T
          T* gai = na->grad_buffer().raw() + i * m * k;
          kk.gemm(kernels::Trans::No, transpose_b ? kernels::Trans::No : kernels::Trans::Yes, m, k,
                  n, gi, n, bi, ldb, gai, k, true);
        }
        if (nb->requires_grad) {
          T* gbi = nb->grad_buffer().raw() + i * k * n;
          if (transpose_b) {
            // B is [n,k]: dB = G^T A
            kk.gemm(kernels::Trans::Yes, kernels::Trans::No, n, k, m, gi, n, ai, k, gbi, k, true);
          } else {
            kk.gemm(kernels::Trans::Yes, kernels::Trans::No, k, n, m, ai, k, gi, n, gbi, n, true);
          }
        }
      }
    };
  });
}

template <std::floating_point T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& bias) {
  check_finite("linear", {&x, &w, &bias});
  const Shape& xs = x.shape();
  if (w.shape().size() != 2 || xs.empty() || xs.back() != w.dim(0)) {
    throw ShapeError("linear: input " + to_string(xs) + " with weight " + to_string(w.shape()));
  }
  const std::size_t k = w.dim(0), n = w.dim(1);
  const bool has_bias = bias.valid();
  if (has_bias && (bias.shape().size() != 1 || bias.dim(0) != n)) {
    throw ShapeError("linear: bias " + to_string(bias.shape()) + " for weight " +
                     to_string(w.shape()));
  }
  Tape<T>* tape = has_bias ? common_tape("linear", {&x, &w, &bias}) : common_tape("linear", {&x, &w});
  const std::size_t rows = x.value().size() / k;
  Shape out_shape = xs;
  out_shape.back() = n;
  Tensor<T> out(out_shape);
  if (has_bias) {
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bias.value().raw(), bias.value().raw() + n, out.raw() + r * n);
    }
  }
  const auto& ks = kernels::active<T>();
  ks.gemm(kernels::Trans::No, kernels::Trans::No, rows, n, k, x.value().raw(), k, w.value().raw(),
          n, out.raw(), n, has_bias);
  auto nx = x.node();
  auto nw = w.node();
  auto nbias = has_bias ? bias.node() : nullptr;
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      const auto& kk = kernels::active<T>();
      if (nx->requires_grad) {
        kk.gemm(kernels::Trans::No, kernels::Trans::Yes, rows, k, n, g.raw(), n, nw->value.raw(),
                n, nx->grad_buffer().raw(), k, true);
      }
      if (nw->requires_grad) {
        kk.gemm(kernels::Trans::Yes, kernels::Trans::No, k, n, rows, nx->value.raw(), k, g.raw(),
                n, nw->grad_buffer().raw(), n, true);
      }
      if (nbias && nbias->requires_grad) {
        T* gb = nbias->grad_buffer().raw();
        for (std::size_t r = 0; r < rows; ++r) kk.axpy(n, T{1}, g.raw() + r * n, gb);
      }
    };
  });
}

template <std::floating_point T>
Var<T> softmax(const Var<T>& a, std::size_t axis) {
  check_finite("softmax", {&a});
  require_axis("softmax", a.shape(), axis);
  Tape<T>* tape = common_tape("softmax", {&a});
  const AxisSplit sp = split_at(a.shape(), axis);
  Tensor<T> out(a.shape());
  const auto& x = a.value();
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t in = 0; in < sp.inner; ++in) {
      const std::size_t base = o * sp.extent * sp.inner + in;
      T mx = -std::numeric_limits<T>::infinity();
      for (std::size_t e = 0; e < sp.extent; ++e) mx = std::max(mx, x[base + e * sp.inner]);
      T total = 0;
      for (std::size_t e = 0; e < sp.extent; ++e) {
        const T v = std::exp(x[base + e * sp.inner] - mx);
        out[base + e * sp.inner] = v;
        total += v;
      }
      for (std::size_t e = 0; e < sp.extent; ++e) out[base + e * sp.inner] /= total;
    }
  }
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>* self) {
    return [=](const Tensor<T>& g) {
      const auto& y = self->value;
      Tensor<T> ga(g.shape());
      for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t in = 0; in < sp.inner; ++in) {
          const std::size_t base = o * sp.extent * sp.inner + in;
          T dotp = 0;
          for (std::size_t e = 0; e < sp.extent; ++e) {
            const std::size_t i = base + e * sp.inner;
            dotp += g[i] * y[i];
          }
          for (std::size_t e = 0; e < sp.extent; ++e) {
            const std::size_t i = base + e * sp.inner;
            ga[i] = y[i] * (g[i] - dotp);
          }
        }
      }
      na->accumulate(ga);
    };
  });
}

template <std::floating_point T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  check_finite("layer_norm", {&x, &gamma, &beta});
  const Shape& xs = x.shape();
  const std::size_t d = xs.back();
  if (gamma.shape() != Shape{d} || beta.shape() != Shape{d}) {
    throw ShapeError("layer_norm: input " + to_string(xs) + " with gamma " +
                     to_string(gamma.shape()) + " beta " + to_string(beta.shape()));
  }
  Tape<T>* tape = common_tape("layer_norm", {&x, &gamma, &beta});
  const std::size_t rows = x.value().size() / d;
  Tensor<T> out(xs);
  auto xhat = std::make_shared<Tensor<T>>(xs);
  auto rstd = std::make_shared<std::vector<T>>(rows);
  const T* xv = x.value().raw();
  const T* gv = gamma.value().raw();
  const T* bv = beta.value().raw();
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = xv + r * d;
    T mean = 0;
    for (std::size_t i = 0; i < d; ++i) mean += row[i];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t i = 0; i < d; ++i) var += (row[i] - mean) * (row[i] - mean);
    var /= static_cast<T>(d);
    const T rs = T{1} / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t i = 0; i < d; ++i) {
      const T h = (row[i] - mean) * rs;
      (*xhat)[r * d + i] = h;
      out[r * d + i] = h * gv[i] + bv[i];
    }
  }
  auto nx = x.node();
  auto ng = gamma.node();
  auto nb = beta.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      const T* gam = ng->value.raw();
      if (nx->requires_grad) {
        T* gx = nx->grad_buffer().raw();
        std::vector<T> gh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          T mean_gh = 0, mean_ghx = 0;
          for (std::size_t i = 0; i < d; ++i) {
            gh[i] = g[r * d + i] * gam[i];
            mean_gh += gh[i];
            mean_ghx += gh[i] * (*xhat)[r * d + i];
          }
          mean_gh /= static_cast<T>(d);
          mean_ghx /= static_cast<T>(d);
          for (std::size_t i = 0; i < d; ++i) {
            gx[r * d + i] += (*rstd)[r] * (gh[i] - mean_gh - (*xhat)[r * d + i] * mean_ghx);
          }
        }
      }
      if (ng->requires_grad) {
        T* gg = ng->grad_buffer().raw();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < d; ++i) gg[i] += g[r * d + i] * (*xhat)[r * d + i];
        }
      }
      if (nb->requires_grad) {
        T* gb = nb->grad_buffer().raw();
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t i = 0; i < d; ++i) gb[i] += g[r * d + i];
        }
      }
    };
  });
}

template <std::floating_point T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts.front().shape();
  require_axis("concat", first, axis);
  Shape out_shape = first;
  out_shape[axis] = 0;
  Tape<T>* tape = nullptr;
  for (const auto& p : parts) {
    check_finite("concat", {&p});
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat: " + to_string(s) + " does not conform with " + to_string(first) +
                       " on axis " + std::to_string(axis));
    }
    out_shape[axis] += s[axis];
    Tape<T>* t = common_tape("concat", {&p});
    if (t && tape && t != tape) throw InvalidArgument("concat: inputs recorded on different tapes");
    if (t) tape = t;
  }
  const AxisSplit osp = split_at(out_shape, axis);
  Tensor<T> out(out_shape);
  std::vector<std::size_t> widths;
  std::size_t at = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.dim(axis) * osp.inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < osp.outer; ++o) {
      std::copy_n(p.value().raw() + o * w, w, out.raw() + o * osp.extent * osp.inner + at);
    }
    at += w;
  }
  std::vector<std::shared_ptr<Node<T>>> nodes;
  for (const auto& p : parts) nodes.push_back(p.node());
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      std::size_t off = 0;
      for (std::size_t pi = 0; pi < nodes.size(); ++pi) {
        const std::size_t w = widths[pi];
        if (nodes[pi]->requires_grad) {
          T* dst = nodes[pi]->grad_buffer().raw();
          for (std::size_t o = 0; o < osp.outer; ++o) {
            const T* src = g.raw() + o * osp.extent * osp.inner + off;
            for (std::size_t i = 0; i < w; ++i) dst[o * w + i] += src[i];
          }
        }
        off += w;
      }
    };
  });
}

template <std::floating_point T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t end) {
  check_finite("slice", {&a});
  require_axis("slice", a.shape(), axis);
  if (begin >= end || end > a.dim(axis)) {
    throw ShapeError("slice: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for axis " + std::to_string(axis) + " of " + to_string(a.shape()));
  }
  Tape<T>* tape = common_tape("slice", {&a});
  const AxisSplit sp = split_at(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape[axis] = end - begin;
  const std::size_t w = (end - begin) * sp.inner;
  const std::size_t off = begin * sp.inner;
  Tensor<T> out(out_shape);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(a.value().raw() + o * sp.extent * sp.inner + off, w, out.raw() + o * w);
  }
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      T* dst = na->grad_buffer().raw();
      for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t i = 0; i < w; ++i) dst[o * sp.extent * sp.inner + off + i] += g[o * w + i];
      }
    };
  });
}

template <std::floating_point T>
Var<T> permute(const Var<T>& a, const std::vector<std::size_t>& axes) {
  check_finite("permute", {&a});
  const Shape& s = a.shape();
  const std::size_t r = s.size();
  {
    std::vector<bool> seen(r, false);
    bool ok = axes.size() == r;
    for (std::size_t ax : axes) {
      ok = ok && ax < r && !seen[ax];
      if (ok) seen[ax] = true;
    }
    if (!ok) throw ShapeError("permute: invalid axis order for " + to_string(s));
  }
  Tape<T>* tape = common_tape("permute", {&a});
  Shape out_shape(r);
  for (std::size_t i = 0; i < r; ++i) out_shape[i] = s[axes[i]];
  std::vector<std::size_t> in_stride(r);
  std::size_t st = 1;
  for (std::size_t i = r; i-- > 0;) {
    in_stride[i] = st;
    st *= s[i];
  }
  // Source offset for each output element.
  auto map = std::make_shared<std::vector<std::size_t>>(a.value().size());
  std::vector<std::size_t> idx(r, 0);
  std::size_t off = 0;
  for (std::size_t f = 0; f < map->size(); ++f) {
    (*map)[f] = off;
    for (std::size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      off += in_stride[axes[ax]];
      if (idx[ax] < out_shape[ax]) break;
      off -= in_stride[axes[ax]] * idx[ax];
      idx[ax] = 0;
    }
  }
  Tensor<T> out(out_shape);
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = a.value()[(*map)[f]];
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      T* dst = na->grad_buffer().raw();
      for (std::size_t f = 0; f < g.size(); ++f) dst[(*map)[f]] += g[f];
    };
  });
}

template <std::floating_point T>
Var<T> transpose01(const Var<T>& a) {
  if (a.shape().size() < 2) throw ShapeError("transpose01: rank < 2 for " + to_string(a.shape()));
  std::vector<std::size_t> axes(a.shape().size());
  std::iota(axes.begin(), axes.end(), std::size_t{0});
  std::swap(axes[0], axes[1]);
  return permute(a, axes);
}

template <std::floating_point T>
Var<T> reshape(const Var<T>& a, Shape shape) {
  Tape<T>* tape = common_tape("reshape", {&a});
  Tensor<T> out = a.value().reshaped(std::move(shape));
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) { na->accumulate(g.reshaped(na->value.shape())); };
  });
}

template <std::floating_point T>
Var<T> broadcast_to(const Var<T>& a, const Shape& shape) {
  check_finite("broadcast_to", {&a});
  if (broadcast_shape(a.shape(), shape, "broadcast_to") != shape) {
    throw ShapeError("broadcast_to: " + to_string(a.shape()) + " cannot expand to " +
                     to_string(shape));
  }
  Tape<T>* tape = common_tape("broadcast_to", {&a});
  auto bc = std::make_shared<Broadcast>(a.shape(), shape);
  Tensor<T> out(shape);
  for (std::size_t f = 0; f < out.size(); ++f) out[f] = a.value()[(*bc)(f)];
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) { na->accumulate(reduce_to(g, na->value.shape(), *bc)); };
  });
}

template <std::floating_point T>
Var<T> sum(const Var<T>& a, std::size_t axis) {
  check_finite("sum", {&a});
  require_axis("sum", a.shape(), axis);
  Tape<T>* tape = common_tape("sum", {&a});
  const AxisSplit sp = split_at(a.shape(), axis);
  Shape out_shape = a.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  if (out_shape.empty()) out_shape = {1};
  Tensor<T> out(out_shape);
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t e = 0; e < sp.extent; ++e) {
      const T* src = a.value().raw() + (o * sp.extent + e) * sp.inner;
      T* dst = out.raw() + o * sp.inner;
      for (std::size_t i = 0; i < sp.inner; ++i) dst[i] += src[i];
    }
  }
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      T* dst = na->grad_buffer().raw();
      for (std::size_t o = 0; o < sp.outer; ++o) {
        for (std::size_t e = 0; e < sp.extent; ++e) {
          for (std::size_t i = 0; i < sp.inner; ++i) {
            dst[(o * sp.extent + e) * sp.inner + i] += g[o * sp.inner + i];
          }
        }
      }
    };
  });
}

template <std::floating_point T>
Var<T> sum_all(const Var<T>& a) {
  check_finite("sum_all", {&a});
  Tape<T>* tape = common_tape("sum_all", {&a});
  T s = 0;
  for (T v : a.value().data()) s += v;
  auto na = a.node();
  return emit<T>(tape, Tensor<T>({1}, s), [=](Node<T>*) {
    return [=](const Tensor<T>& g) {
      T* dst = na->grad_buffer().raw();
      for (std::size_t i = 0; i < na->value.size(); ++i) dst[i] += g[0];
    };
  });
}

template <std::floating_point T>
Var<T> mean_all(const Var<T>& a) {
  return scale(sum_all(a), T{1} / static_cast<T>(a.value().size()));
}

template <std::floating_point T>
Var<T> norm_l2(const Var<T>& a) {
  check_finite("norm_l2", {&a});
  Tape<T>* tape = common_tape("norm_l2", {&a});
  const std::size_t d = a.shape().back();
  const std::size_t rows = a.value().size() / d;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < rows; ++r) {
    T s = 0;
    for (std::size_t i = 0; i < d; ++i) s += a.value()[r * d + i] * a.value()[r * d + i];
    out[r] = std::sqrt(s);
    if (tape) tape->note_kink_distance(out[r]);
  }
  auto na = a.node();
  return emit<T>(tape, std::move(out), [=](Node<T>* self) {
    return [=](const Tensor<T>& g) {
      T* dst = na->grad_buffer().raw();
      for (std::size_t r = 0; r < rows; ++r) {
        const T nrm = self->value[r];
        if (nrm == T{0}) continue;
        const T c = g[r] / nrm;
        for (std::size_t i = 0; i < d; ++i) dst[r * d + i] += c * na->value[r * d + i];
      }
    };
  });
}

template <std::floating_point T>
Var<T> norm_l1(const Var<T>& a) {
  return sum(abs(a), a.shape().size() - 1);
}

#define JRT_INSTANTIATE_OPS(T)                                                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                        \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                        \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                        \
  template Var<T> scale(const Var<T>&, T);                                                  \
  template Var<T> neg(const Var<T>&);                                                       \
  template Var<T> exp(const Var<T>&);                                                       \
  template Var<T> abs(const Var<T>&);                                                       \
  template Var<T> relu(const Var<T>&);                                                      \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                     \
  template Var<T> bmm(const Var<T>&, const Var<T>&, bool);                                  \
  template Var<T> linear(const Var<T>&, const Var<T>&, const Var<T>&);                      \
  template Var<T> softmax(const Var<T>&, std::size_t);                                      \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);               \
  template Var<T> concat(const std::vector<Var<T>>&, std::size_t);                          \
  template Var<T> slice(const Var<T>&, std::size_t, std::size_t, std::size_t);              \
  template Var<T> permute(const Var<T>&, const std::vector<std::size_t>&);                  \
  template Var<T> transpose01(const Var<T>&);                                               \
  template Var<T> reshape(const Var<T>&, Shape);                                            \
  template Var<T> broadcast_to(const Var<T>&, const Shape&);                                \
  template Var<T> sum(const Var<T>&, std::size_t);                                          \
  template Var<T> sum_all(const Var<T>&);                                                   \
  template Var<T> mean_all(const Var<T>&);                                                  \
  template Var<T> norm_l2(const Var<T>&);                                                   \
  template Var<T> norm_l1(const Var<T>&);

JRT_INSTANTIATE_OPS(float)
JRT_INSTANTIATE_OPS(double)
#undef JRT_INSTANTIATE_OPS

}  // namespace ops

template struct Node<float>;
template struct Node<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace jrt
