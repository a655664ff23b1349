#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "jrt/error.hpp"
#include "jrt/layers.hpp"
#include "jrt/train.hpp"

namespace fs = std::filesystem;
using namespace jrt;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string precision;
  std::string out;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "Config JSON file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--precision", c.precision, "Scalar type")->check(CLI::IsMember({"f32", "f64"}));
  sub->add_option("--out", c.out, "Output directory");
}

TrainConfig resolve_config(const Common& c, const TrainConfig& fallback) {
  TrainConfig cfg = c.config.empty() ? fallback : TrainConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.precision.empty()) cfg.precision = parse_precision(c.precision);
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

Dataset synthetic_dataset(const TrainConfig& cfg, std::size_t count, MotionKind kind) {
  Dataset d;
  for (std::size_t i = 0; i < count; ++i) {
    SynthOptions o;
    o.seed = cfg.seed + i;
    o.persons = std::min<std::size_t>(2, cfg.model.max_persons);
    o.joints = cfg.model.joints;
    o.frames = cfg.model.history + cfg.model.future;
    o.kind = kind;
    char name[32];
    std::snprintf(name, sizeof name, "synth_%03zu", i);
    d.add(synth_scene(o), name);
  }
  return d;
}

template <class F>
auto with_checkpoint(const AnyCheckpoint& ck, std::optional<Precision> want, F&& f) {
  return std::visit(
      [&](const auto& c) {
        using T = typename std::decay_t<decltype(c.params.blocks().front().value)>::value_type;
        if (want == Precision::F64 && !std::is_same_v<T, double>) {
          return f(c.config, c.params.template cast<double>());
        }
        if (want == Precision::F32 && !std::is_same_v<T, float>) {
          return f(c.config, c.params.template cast<float>());
        }
        return f(c.config, c.params);
      },
      ck);
}

int run_synth(const Common& c, std::size_t count, std::size_t persons, std::optional<std::size_t> joints,
              std::optional<std::size_t> frames, const std::string& kind, double fps) {
  const TrainConfig cfg = resolve_config(c, TrainConfig{});
  const fs::path out = c.out.empty() ? fs::path("scenes") : fs::path(c.out);
  fs::create_directories(out);
  for (std::size_t i = 0; i < count; ++i) {
    SynthOptions o;
    o.seed = cfg.seed + i;
    o.persons = persons;
    o.joints = joints.value_or(cfg.model.joints);
    o.frames = frames.value_or(cfg.model.history + cfg.model.future);
    o.kind = parse_motion_kind(kind);
    o.fps = fps;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03zu.json", i);
    write_scene(out / name, synth_scene(o));
  }
  std::cout << "wrote " << count << " scene(s) to " << out.string() << "\n";
  return 0;
}

int run_train(const Common& c, const std::string& data, std::optional<std::size_t> epochs,
              std::size_t synth_count, const std::string& resume, std::size_t max_steps) {
  TrainConfig cfg = resolve_config(c, TrainConfig{});
  if (epochs) cfg.epochs = *epochs;
  cfg.validate();
  const Dataset dataset =
      data.empty() ? synthetic_dataset(cfg, synth_count, MotionKind::Circular) : Dataset::load(data);
  check_dataset(cfg, dataset);

  const fs::path out = c.out.empty() ? fs::path("run") : fs::path(c.out);
  fs::create_directories(out);
  write_text(out / "config.json", cfg.to_json() + "\n");
  std::ofstream log(out / "loss_log.jsonl", std::ios::binary | std::ios::trunc);
  TrainOptions opts;
  opts.out_dir = out;
  opts.log = &log;
  opts.max_steps = max_steps;

  std::optional<AnyCheckpoint> from;
  if (!resume.empty()) from = load_checkpoint(resume);

  auto go = [&]<std::floating_point T>() {
    const Checkpoint<T>* start = nullptr;
    Checkpoint<T> cast;
    if (from) {
      std::visit(
          [&](const auto& ck) {
            cast.config = ck.config;
            cast.params = ck.params.template cast<T>();
            cast.optimizer.m = ck.optimizer.m.template cast<T>();
            cast.optimizer.v = ck.optimizer.v.template cast<T>();
            cast.optimizer.step = ck.optimizer.step;
            cast.epoch = ck.epoch;
          },
          *from);
      start = &cast;
    }
    const auto r = train<T>(cfg, dataset, opts, start);
    std::cout << "steps " << r.losses.size() << ", epoch " << r.checkpoint.epoch;
    if (!r.losses.empty()) std::cout << ", final loss " << r.losses.back().total;
    std::cout << "\ncheckpoint " << (out / "checkpoint.jrt").string() << "\n";
  };
  if (cfg.precision == Precision::F32) {
    go.template operator()<float>();
  } else {
    go.template operator()<double>();
  }
  return 0;
}

int run_eval(const Common& c, const std::string& checkpoint, const std::string& data, bool csv) {
  if (data.empty()) throw InvalidArgument("eval: --data is required");
  std::optional<Precision> want;
  if (!c.precision.empty()) want = parse_precision(c.precision);
  EvalReport report;
  if (checkpoint.empty()) {
    const TrainConfig cfg = resolve_config(c, TrainConfig{});
    report = evaluate_baseline(cfg, Dataset::load(data));
  } else {
    const AnyCheckpoint ck = load_checkpoint(checkpoint);
    report = with_checkpoint(ck, want, [&](const TrainConfig& stored, const auto& params) {
      TrainConfig cfg = stored;
      if (!c.config.empty()) {
        // Evaluation settings come from --config; the model shape stays the checkpoint's.
        const TrainConfig over = TrainConfig::load(c.config);
        cfg.eval = over.eval;
        cfg.unit_scale = over.unit_scale;
      }
      return evaluate(cfg, &params, Dataset::load(data));
    });
  }
  const std::string json = report.to_json();
  if (c.out.empty()) {
    std::cout << json << "\n";
    if (csv) std::cout << report.to_csv();
  } else {
    write_text(fs::path(c.out) / "eval_report.json", json + "\n");
    if (csv) write_text(fs::path(c.out) / "eval_report.csv", report.to_csv());
    std::cout << "wrote " << (fs::path(c.out) / "eval_report.json").string() << "\n";
  }
  return 0;
}

int run_gradcheck(const Common& c, double step, double tol) {
  const TrainConfig cfg = resolve_config(c, TrainConfig::tiny());
  const ModelGradCheck r = gradcheck_model(cfg.model, cfg.seed, step, tol);
  print_report(std::cout, r.report);
  std::cout << "seed " << r.seed << ", min kink distance " << r.min_kink_distance << "\n";
  if (!c.out.empty()) {
    std::ostringstream ss;
    print_report(ss, r.report);
    write_text(fs::path(c.out) / "gradcheck.txt", ss.str());
  }
  return r.report.passed() ? 0 : 1;
}

int run_dump_attn(const Common& c, const std::string& checkpoint, const std::string& scene_path) {
  if (scene_path.empty()) throw InvalidArgument("dump-attn: --scene is required");
  const SceneSequence scene = read_scene(scene_path);
  std::string json;
  if (checkpoint.empty()) {
    const TrainConfig cfg = resolve_config(c, TrainConfig{});
    json = attention_json(cfg, init_params<double>(cfg.model, cfg.seed), scene);
  } else {
    std::optional<Precision> want;
    if (!c.precision.empty()) want = parse_precision(c.precision);
    json = with_checkpoint(load_checkpoint(checkpoint), want,
                           [&](const TrainConfig& cfg, const auto& params) {
                             return attention_json(cfg, params, scene);
                           });
  }
  if (c.out.empty()) {
    std::cout << json << "\n";
  } else {
    write_text(fs::path(c.out) / "attention.json", json + "\n");
    std::cout << "wrote " << (fs::path(c.out) / "attention.json").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint-relation transformer for multi-person motion prediction"};
  app.require_subcommand(1);

  Common synth_c, train_c, eval_c, grad_c, attn_c;

  auto* synth = app.add_subcommand("synth", "Write synthetic scene files");
  add_common(synth, synth_c);
  std::size_t count = 1, persons = 2;
  std::optional<std::size_t> joints, frames;
  std::string kind = "circular";
  double fps = 15;
  synth->add_option("--count", count, "Number of scenes")->check(CLI::PositiveNumber);
  synth->add_option("--persons", persons, "Persons per scene")->check(CLI::PositiveNumber);
  synth->add_option("--joints", joints, "Joints per person (default: config J)");
  synth->add_option("--frames", frames, "Frames per scene (default: config T_h+T_f)");
  synth->add_option("--kind", kind, "Motion kind")
      ->check(CLI::IsMember({"static", "constant-velocity", "circular", "two-person-approach"}));
  synth->add_option("--fps", fps, "Frame rate")->check(CLI::PositiveNumber);

  auto* trn = app.add_subcommand("train", "Train a model and write checkpoints");
  add_common(trn, train_c);
  std::string data, resume;
  std::optional<std::size_t> epochs;
  std::size_t synth_count = 8, max_steps = 0;
  trn->add_option("--data", data, "Scene file or directory (default: synthetic scenes)");
  trn->add_option("--epochs", epochs, "Override the configured epoch count");
  trn->add_option("--synth-count", synth_count, "Synthetic scenes when --data is absent");
  trn->add_option("--resume", resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  trn->add_option("--max-steps", max_steps, "Stop after this many optimizer steps");

  auto* ev = app.add_subcommand("eval", "Score a checkpoint and the zero-velocity baseline");
  add_common(ev, eval_c);
  std::string ev_ckpt, ev_data;
  bool csv = false;
  ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file (omit for baseline only)")
      ->check(CLI::ExistingFile);
  ev->add_option("--data", ev_data, "Scene file or directory")->required();
  ev->add_flag("--csv", csv, "Also write per-scene CSV");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every parameter block");
  add_common(gc, grad_c);
  double step = 1e-5, tol = 1e-4;
  gc->add_option("--step", step, "Central-difference step");
  gc->add_option("--tol", tol, "Maximum relative error");

  auto* da = app.add_subcommand("dump-attn", "Export attention matrices for one scene");
  add_common(da, attn_c);
  std::string da_ckpt, da_scene;
  da->add_option("--checkpoint", da_ckpt, "Checkpoint file (omit for initial weights)")
      ->check(CLI::ExistingFile);
  da->add_option("--scene", da_scene, "Scene file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) return run_synth(synth_c, count, persons, joints, frames, kind, fps);
    if (*trn) return run_train(train_c, data, epochs, synth_count, resume, max_steps);
    if (*ev) return run_eval(eval_c, ev_ckpt, ev_data, csv);
    if (*gc) return run_gradcheck(grad_c, step, tol);
    if (*da) return run_dump_attn(attn_c, da_ckpt, da_scene);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
