#include "jrt/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "jrt/error.hpp"

namespace jrt {

namespace {

void check_pair(const Tensor<double>& pred, const Tensor<double>& gt, const char* op) {
  if (pred.shape() != gt.shape() || pred.rank() != 4 || pred.dim(3) != 3) {
    throw ShapeError(std::string(op) + ": prediction " + to_string(pred.shape()) +
                     " vs ground truth " + to_string(gt.shape()));
  }
}

}  // namespace

double vim(const Tensor<double>& pred, const Tensor<double>& gt, std::size_t frame) {
  check_pair(pred, gt, "vim");
  const std::size_t T = pred.dim(0), N = pred.dim(1), J = pred.dim(2);
  if (frame < 1 || frame > T) {
    throw InvalidArgument("vim: frame " + std::to_string(frame) + " outside horizon 1.." +
                          std::to_string(T));
  }
  const std::size_t t = frame - 1;
  double total = 0;
  for (std::size_t n = 0; n < N; ++n) {
    double sq = 0;
    const std::size_t base = (t * N + n) * J * 3;
    for (std::size_t i = 0; i < J * 3; ++i) {
      const double d = pred[base + i] - gt[base + i];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(N);
}

double mpjpe_prefix(const Tensor<double>& pred, const Tensor<double>& gt, std::size_t frames) {
  check_pair(pred, gt, "mpjpe");
  if (frames < 1 || frames > pred.dim(0)) {
    throw InvalidArgument("mpjpe: prefix of " + std::to_string(frames) + " frames outside horizon " +
                          std::to_string(pred.dim(0)));
  }
  const std::size_t points = frames * pred.dim(1) * pred.dim(2);
  double total = 0;
  for (std::size_t p = 0; p < points; ++p) {
    double sq = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = pred[p * 3 + c] - gt[p * 3 + c];
      sq += d * d;
    }
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(points);
}

double mpjpe(const Tensor<double>& pred, const Tensor<double>& gt) {
  check_pair(pred, gt, "mpjpe");
  return mpjpe_prefix(pred, gt, pred.dim(0));
}

Tensor<double> zero_velocity_baseline(const Tensor<double>& history, std::size_t future) {
  if (history.rank() != 4 || history.dim(3) != 3) {
    throw ShapeError("zero_velocity: expected [T_h][N][J][3], got " + to_string(history.shape()));
  }
  if (future == 0) throw InvalidArgument("zero_velocity: empty horizon");
  const std::size_t stride = history.dim(1) * history.dim(2) * 3;
  const double* last = history.raw() + (history.dim(0) - 1) * stride;
  Tensor<double> out({future, history.dim(1), history.dim(2), 3});
  for (std::size_t t = 0; t < future; ++t) std::copy_n(last, stride, out.raw() + t * stride);
  return out;
}

MethodScores score(const Tensor<double>& pred, const Tensor<double>& gt, double fps,
                   const EvalSettings& settings) {
  check_pair(pred, gt, "score");
  const std::size_t horizon = pred.dim(0);
  MethodScores s;
  double sum = 0;
  for (std::size_t f : settings.vim_frames) {
    if (f < 1 || f > horizon) continue;
    const double v = vim(pred, gt, f) * settings.unit_scale;
    s.vim_at[f] = v;
    sum += v;
  }
  if (!s.vim_at.empty()) s.vim_avg = sum / static_cast<double>(s.vim_at.size());
  for (double sec : settings.mpjpe_horizons_s) {
    const auto k = static_cast<std::size_t>(std::llround(sec * fps));
    if (k < 1 || k > horizon) continue;
    s.mpjpe_at[sec] = mpjpe_prefix(pred, gt, k) * settings.unit_scale;
  }
  s.mpjpe = mpjpe(pred, gt) * settings.unit_scale;
  return s;
}

void EvalReport::aggregate() {
  methods.clear();
  if (scenes.empty()) return;
  const double n = static_cast<double>(scenes.size());
  for (const auto& name : method_names) {
    MethodScores agg;
    for (const auto& sc : scenes) {
      const MethodScores& m = sc.methods.at(name);
      for (auto [f, v] : m.vim_at) agg.vim_at[f] += v / n;
      for (auto [h, v] : m.mpjpe_at) agg.mpjpe_at[h] += v / n;
      agg.mpjpe += m.mpjpe / n;
    }
    double sum = 0;
    for (auto [f, v] : agg.vim_at) sum += v;
    if (!agg.vim_at.empty()) agg.vim_avg = sum / static_cast<double>(agg.vim_at.size());
    methods[name] = agg;
  }
}

namespace {

std::string horizon_key(double sec) {
  std::ostringstream os;
  os << sec;
  return os.str();
}

nlohmann::json to_json(const MethodScores& m) {
  nlohmann::json j;
  nlohmann::json v = nlohmann::json::object();
  for (auto [f, x] : m.vim_at) v[std::to_string(f)] = x;
  j["vim_at"] = v;
  j["vim_avg"] = m.vim_avg;
  nlohmann::json p = nlohmann::json::object();
  for (auto [h, x] : m.mpjpe_at) p[horizon_key(h)] = x;
  j["mpjpe_at"] = p;
  j["mpjpe"] = m.mpjpe;
  return j;
}

}  // namespace

std::string EvalReport::to_json() const {
  nlohmann::json doc;
  doc["unit_scale"] = settings.unit_scale;
  doc["vim_frames"] = settings.vim_frames;
  doc["mpjpe_horizons_s"] = settings.mpjpe_horizons_s;
  nlohmann::json ms = nlohmann::json::object();
  for (const auto& name : method_names) {
    if (methods.contains(name)) ms[name] = jrt::to_json(methods.at(name));
  }
  doc["methods"] = ms;
  nlohmann::json sc = nlohmann::json::array();
  for (const auto& s : scenes) {
    nlohmann::json e;
    e["name"] = s.name;
    for (const auto& [name, m] : s.methods) e[name] = jrt::to_json(m);
    sc.push_back(e);
  }
  doc["scenes"] = sc;
  return doc.dump(2);
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "scene";
  // Column set is taken from the first scene; every scene is scored with the same settings.
  const SceneScores* first = scenes.empty() ? nullptr : &scenes.front();
  for (const auto& name : method_names) {
    if (!first) break;
    const MethodScores& m = first->methods.at(name);
    for (auto [f, v] : m.vim_at) os << ',' << name << "_vim@" << f;
    os << ',' << name << "_vim_avg";
    for (auto [h, v] : m.mpjpe_at) os << ',' << name << "_mpjpe@" << horizon_key(h) << 's';
    os << ',' << name << "_mpjpe";
  }
  os << '\n';
  for (const auto& s : scenes) {
    os << s.name;
    for (const auto& name : method_names) {
      const MethodScores& m = s.methods.at(name);
      for (auto [f, v] : m.vim_at) os << ',' << v;
      os << ',' << m.vim_avg;
      for (auto [h, v] : m.mpjpe_at) os << ',' << v;
      os << ',' << m.mpjpe;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace jrt
