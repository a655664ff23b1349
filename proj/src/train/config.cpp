#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "jrt/error.hpp"
#include "jrt/train.hpp"

namespace jrt {

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::F32;
  if (s == "f64") return Precision::F64;
  throw ConfigError("config: precision must be f32 or f64, got '" + s + "'");
}

std::string to_string(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

namespace {

using json = nlohmann::json;

RelTargetSpace parse_space(const std::string& s) {
  if (s == "exp") return RelTargetSpace::Exp;
  if (s == "raw") return RelTargetSpace::Raw;
  throw ConfigError("config: rel_target_space must be exp or raw, got '" + s + "'");
}

std::string space_name(RelTargetSpace s) { return s == RelTargetSpace::Exp ? "exp" : "raw"; }

std::size_t get_size(const json& v, const std::string& key) {
  if (!v.is_number_unsigned()) throw ConfigError("config: " + key + " must be a non-negative integer");
  return v.get<std::size_t>();
}

double get_double(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config: " + key + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError("config: " + key + " must be finite");
  return d;
}

bool get_bool(const json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError("config: " + key + " must be true or false");
  return v.get<bool>();
}

std::string get_string(const json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config: " + key + " must be a string");
  return v.get<std::string>();
}

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config: ") + what);
  };
  need(weights.joint >= 0 && weights.relation >= 0, "lambda_J and lambda_R must be >= 0");
  need(lr0 > 0, "lr0 must be positive");
  need(decay_factor > 0 && decay_factor <= 1, "decay_factor must be in (0, 1]");
  need(decay_every_epochs >= 1, "decay_every_epochs must be >= 1");
  need(batch_size >= 1, "batch_size must be >= 1");
  need(adamw.beta1 >= 0 && adamw.beta1 < 1, "beta1 must be in [0, 1)");
  need(adamw.beta2 >= 0 && adamw.beta2 < 1, "beta2 must be in [0, 1)");
  need(adamw.eps >= 0, "adam_eps must be >= 0");
  need(adamw.weight_decay >= 0, "weight_decay must be >= 0");
  need(unit_scale > 0, "unit_scale must be positive");
  for (std::size_t f : eval.vim_frames) need(f >= 1, "vim_frames entries must be >= 1");
  for (double h : eval.mpjpe_horizons_s) need(h > 0, "mpjpe_horizons_s entries must be positive");
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");

  TrainConfig c;
  bool has_dk = false, has_dq = false, has_ff = false;
  for (const auto& [key, v] : doc.items()) {
    if (key == "L") c.model.layers = get_size(v, key);
    else if (key == "D") c.model.dim = get_size(v, key);
    else if (key == "D_H") c.model.heads = get_size(v, key);
    else if (key == "D_K") { c.model.key_dim = get_size(v, key); has_dk = true; }
    else if (key == "D_prime") { c.model.quad_dim = get_size(v, key); has_dq = true; }
    else if (key == "D_ff") { c.model.ffn_dim = get_size(v, key); has_ff = true; }
    else if (key == "N_max") c.model.max_persons = get_size(v, key);
    else if (key == "J") c.model.joints = get_size(v, key);
    else if (key == "T_h") c.model.history = get_size(v, key);
    else if (key == "T_f") c.model.future = get_size(v, key);
    else if (key == "lambda_J") c.weights.joint = get_double(v, key);
    else if (key == "lambda_R") c.weights.relation = get_double(v, key);
    else if (key == "lr0") c.lr0 = get_double(v, key);
    else if (key == "decay_factor") c.decay_factor = get_double(v, key);
    else if (key == "decay_every_epochs") c.decay_every_epochs = get_size(v, key);
    else if (key == "batch_size") c.batch_size = get_size(v, key);
    else if (key == "epochs") c.epochs = get_size(v, key);
    else if (key == "checkpoint_every") c.checkpoint_every = get_size(v, key);
    else if (key == "seed") c.seed = get_size(v, key);
    else if (key == "precision") c.precision = parse_precision(get_string(v, key));
    else if (key == "rel_target_space") c.rel_target_space = parse_space(get_string(v, key));
    else if (key == "unit_scale") c.unit_scale = get_double(v, key);
    else if (key == "augment_rotate") c.augment_rotate = get_bool(v, key);
    else if (key == "augment_permute") c.augment_permute = get_bool(v, key);
    else if (key == "augment_reverse") c.augment_reverse = get_bool(v, key);
    else if (key == "beta1") c.adamw.beta1 = get_double(v, key);
    else if (key == "beta2") c.adamw.beta2 = get_double(v, key);
    else if (key == "adam_eps") c.adamw.eps = get_double(v, key);
    else if (key == "weight_decay") c.adamw.weight_decay = get_double(v, key);
    else if (key == "vim_frames") {
      if (!v.is_array()) throw ConfigError("config: vim_frames must be an array");
      c.eval.vim_frames.clear();
      for (const auto& e : v) c.eval.vim_frames.push_back(get_size(e, key));
    } else if (key == "mpjpe_horizons_s") {
      if (!v.is_array()) throw ConfigError("config: mpjpe_horizons_s must be an array");
      c.eval.mpjpe_horizons_s.clear();
      for (const auto& e : v) c.eval.mpjpe_horizons_s.push_back(get_double(e, key));
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (!has_dk) c.model.key_dim = c.model.dim;
  if (!has_dq) c.model.quad_dim = c.model.dim;
  if (!has_ff) c.model.ffn_dim = 2 * c.model.dim;
  c.eval.unit_scale = c.unit_scale;
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return from_json(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["L"] = model.layers;
  j["D"] = model.dim;
  j["D_H"] = model.heads;
  j["D_K"] = model.key_dim;
  j["D_prime"] = model.quad_dim;
  j["D_ff"] = model.ffn_dim;
  j["N_max"] = model.max_persons;
  j["J"] = model.joints;
  j["T_h"] = model.history;
  j["T_f"] = model.future;
  j["lambda_J"] = weights.joint;
  j["lambda_R"] = weights.relation;
  j["lr0"] = lr0;
  j["decay_factor"] = decay_factor;
  j["decay_every_epochs"] = decay_every_epochs;
  j["batch_size"] = batch_size;
  j["epochs"] = epochs;
  j["checkpoint_every"] = checkpoint_every;
  j["seed"] = seed;
  j["precision"] = to_string(precision);
  j["rel_target_space"] = space_name(rel_target_space);
  j["unit_scale"] = unit_scale;
  j["augment_rotate"] = augment_rotate;
  j["augment_permute"] = augment_permute;
  j["augment_reverse"] = augment_reverse;
  j["beta1"] = adamw.beta1;
  j["beta2"] = adamw.beta2;
  j["adam_eps"] = adamw.eps;
  j["weight_decay"] = adamw.weight_decay;
  j["vim_frames"] = eval.vim_frames;
  j["mpjpe_horizons_s"] = eval.mpjpe_horizons_s;
  return j.dump(2);
}

TrainConfig TrainConfig::tiny() {
  TrainConfig c;
  c.model = ModelConfig::tiny();
  c.batch_size = 1;
  c.epochs = 500;
  c.checkpoint_every = 0;
  c.decay_factor = 1;
  c.augment_rotate = false;
  c.augment_permute = false;
  c.augment_reverse = false;
  c.eval.vim_frames = {1, 2};
  c.eval.mpjpe_horizons_s = {};
  return c;
}

double lr_schedule(std::size_t epoch, double lr0, double factor, std::size_t every) {
  if (every == 0) throw InvalidArgument("lr_schedule: every must be >= 1");
  return lr0 * std::pow(factor, static_cast<double>(epoch / every));
}

}  // namespace jrt
