// Command-line front end: dataset generation, training, rendering,
// tracking, weight rollout, and metric evaluation as reproducible runs.
// One invocation writes one output directory with a manifest.
// Exit codes: 0 ok, 2 usage or config error, 3 numerical abort.
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pref/checkpoint.hpp"
#include "pref/config.hpp"
#include "pref/metrics.hpp"
#include "pref/rollout.hpp"
#include "pref/toy_trainer.hpp"
#include "pref/tracking.hpp"
#include "pref/trainer.hpp"
#include "spec_json.hpp"

#ifndef PREF_TOOL_VERSION
#define PREF_TOOL_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace pref;

namespace {

void ensure_run_dir(const std::string& out, bool force) {
  if (out.empty()) throw train::ConfigError("--out is required");
  fs::path dir(out);
  if (fs::exists(dir) && !fs::is_empty(dir) && !force)
    throw train::ConfigError("output directory '" + out +
                             "' is not empty (pass --force to reuse it)");
  fs::create_directories(dir);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Accumulates run metadata and writes it as the directory's single
// manifest; rerunning with the embedded config reproduces the outputs.
struct Manifest {
  Json j;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  Manifest(const char* command, std::uint64_t seed, bool deterministic) {
    j["command"] = command;
    j["tool_version"] = PREF_TOOL_VERSION;
    j["seed"] = seed;
    j["deterministic"] = deterministic;
    j["started_utc"] = utc_now();
  }
  void write(const std::string& out) {
    j["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream f(fs::path(out) / "manifest.json");
    f << j.dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write manifest.json under " + out);
  }
};

train::Checkpoint load_ck(const std::string& path) {
  if (path.empty()) throw train::ConfigError("--checkpoint is required");
  return train::load_checkpoint(path);
}

// Rebuilds the trained bundle from a checkpoint. Scene bounds are not
// part of the checkpoint, so spatial queries need the dataset they came
// from; commands that never encode positions pass the defaults.
nets::FieldBundle<float> bundle_from(const train::Checkpoint& ck,
                                     const std::array<double, 3>& bounds_min,
                                     const std::array<double, 3>& bounds_max) {
  nets::BundleSpec spec = train::bundle_spec_from(ck.config);
  spec.bounds_min = bounds_min;
  spec.bounds_max = bounds_max;
  auto bundle = nets::init_bundle<float>(spec, ck.config.seed);
  auto live = bundle.parameters(true);
  train::apply_checkpoint_params(ck, live);
  return bundle;
}

std::vector<std::array<double, 3>> parse_seeds_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw train::ConfigError("cannot open seeds file '" + path + "'");
  std::vector<std::array<double, 3>> seeds;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "x,y,z") continue;
    std::array<double, 3> p{};
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &p[0], &p[1], &p[2]) != 3)
      throw train::ConfigError("seeds file '" + path + "': malformed line " +
                               std::to_string(line_no));
    seeds.push_back(p);
  }
  if (seeds.empty()) throw train::ConfigError("seeds file '" + path + "' holds no points");
  return seeds;
}

void write_report(const std::string& out, const std::string& metric, double value) {
  std::ofstream f(fs::path(out) / "report.csv");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", value);
  f << "metric,value\n" << metric << "," << buf << "\n";
  if (!f) throw std::runtime_error("cannot write report.csv under " + out);
}

// --- gen ---

struct GenOpts {
  std::string spec_path, out;
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_gen(const GenOpts& o) {
  auto spec = tool::parse_spec_file(o.spec_path);
  ensure_run_dir(o.out, o.force);
  Manifest man("gen", o.seed, true);
  man.j["spec"] = Json::parse(tool::spec_to_json_text(spec));
  if (spec.kind == tool::ParsedSpec::Kind::kScene3d) {
    auto seq = scenes::make_scene(spec.scene, o.seed);
    scenes::save_dataset(seq, o.out);
    std::printf("wrote scene3d dataset: %zu cameras x %d frames, %zu keypoints\n",
                seq.cameras.size(), seq.spec.frame_count, seq.keypoints[0].size());
  } else {
    auto toy = scenes::make_toy2d(spec.toy, o.seed);
    scenes::save_toy2d(toy, o.out);
    std::printf("wrote toy2d dataset: %d frames of %dx%d\n", toy.spec.frame_count,
                toy.spec.width, toy.spec.height);
  }
  man.j["artifacts"] = {{"dataset", "."}};
  man.write(o.out);
  return 0;
}

// --- train ---

struct TrainOpts {
  std::string dataset, out, config_path, resume, init_from;
  std::uint64_t seed = 0;
  bool deterministic = true;
  std::int64_t iterations = 0;
  double gamma = 0.0;
  bool freeze_predictor = false;
  bool force = false;
  // Which overrides were actually given on the command line.
  bool has_seed = false, has_det = false, has_iters = false, has_gamma = false,
       has_freeze = false;
};

std::string dataset_type(const std::string& dir) {
  std::ifstream meta(fs::path(dir) / "meta.txt");
  if (!meta) throw train::ConfigError("dataset '" + dir + "' has no meta.txt");
  std::string key, value;
  while (meta >> key >> value)
    if (key == "type") return value;
  throw train::ConfigError("dataset '" + dir + "': meta.txt has no type field");
}

// Shared training-loop plumbing for both trainer kinds: metrics CSV,
// progress lines, periodic and final checkpoints, abort dumps.
template <typename TrainerT>
int drive_training(TrainerT& trainer, const TrainOpts& o, Manifest& man) {
  std::ofstream metrics(fs::path(o.out) / "metrics.csv");
  metrics << train::metrics_csv_header() << "\n";
  Json periodic = Json::array();

  auto save_at = [&](const TrainerT& t, const std::string& name) {
    const std::string path = (fs::path(o.out) / name).string();
    train::save_checkpoint(path, t.config(), t.parameters(true), t.adam(), t.iteration(),
                           t.rng_text());
    return name;
  };

  try {
    trainer.run(
        [&](const train::MetricsRow& row) {
          metrics << train::metrics_csv_row(row) << "\n";
          metrics.flush();
          std::printf("iter %lld  lr %.3g  rec %.6g  pred %.6g  psnr %.3f\n",
                      static_cast<long long>(row.iteration), row.lr, row.loss_rec,
                      row.loss_pred, row.psnr);
          std::fflush(stdout);
        },
        [&](const TrainerT& t, std::int64_t iter) {
          char name[64];
          std::snprintf(name, sizeof(name), "ck_%08lld.ckpt", static_cast<long long>(iter));
          periodic.push_back(save_at(t, name));
        });
  } catch (const train::NumericalError& e) {
    save_at(trainer, "abort.ckpt");
    man.j["aborted_at"] = e.iteration;
    man.j["artifacts"] = {{"metrics", "metrics.csv"}, {"abort_checkpoint", "abort.ckpt"}};
    man.write(o.out);
    std::fprintf(stderr, "numerical abort: %s (state dumped to abort.ckpt)\n", e.what());
    return 3;
  }

  save_at(trainer, "final.ckpt");
  man.j["artifacts"] = {{"metrics", "metrics.csv"},
                        {"config", "config.json"},
                        {"final_checkpoint", "final.ckpt"},
                        {"periodic_checkpoints", periodic}};
  man.write(o.out);
  std::printf("done: %lld iterations, final psnr %.3f\n",
              static_cast<long long>(trainer.iteration()), trainer.eval_psnr());
  return 0;
}

int cmd_train(const TrainOpts& o) {
  train::Checkpoint resume_ck;
  train::TrainConfig cfg;
  if (!o.resume.empty()) {
    resume_ck = train::load_checkpoint(o.resume);
    cfg = resume_ck.config;
  } else if (!o.config_path.empty()) {
    cfg = train::config_from_json_file(o.config_path);
  }
  // Flags beat the config file; the manifest records the merged result.
  if (o.has_seed) cfg.seed = o.seed;
  if (o.has_det) cfg.deterministic = o.deterministic;
  if (o.has_iters) cfg.iterations = o.iterations;
  if (o.has_gamma) cfg.gamma = o.gamma;
  if (o.has_freeze) cfg.freeze_predictor = o.freeze_predictor;
  cfg.validate();

  if (o.dataset.empty()) throw train::ConfigError("--dataset is required");
  const std::string type = dataset_type(o.dataset);
  ensure_run_dir(o.out, o.force);

  Manifest man("train", cfg.seed, cfg.deterministic);
  man.j["config"] = Json::parse(train::config_to_json_text(cfg));
  man.j["dataset"] = o.dataset;
  man.j["dataset_type"] = type;
  if (!o.resume.empty()) man.j["resumed_from"] = o.resume;
  if (!o.init_from.empty()) man.j["initialized_from"] = o.init_from;
  {
    std::ofstream cfg_file(fs::path(o.out) / "config.json");
    cfg_file << train::config_to_json_text(cfg) << "\n";
  }

  if (type == "toy2d") {
    if (!o.init_from.empty())
      throw train::ConfigError("--init-from is only supported for scene3d datasets");
    auto toy = scenes::load_toy2d(o.dataset);
    train::ToyTrainer trainer(cfg, toy);
    if (!o.resume.empty()) trainer.restore(resume_ck);
    return drive_training(trainer, o, man);
  }
  auto seq = scenes::load_dataset(o.dataset);
  train::Trainer trainer(cfg, seq);
  if (!o.resume.empty()) trainer.restore(resume_ck);
  if (!o.init_from.empty()) trainer.load_parameters(train::load_checkpoint(o.init_from));
  return drive_training(trainer, o, man);
}

// --- render ---

struct RenderOpts {
  std::string checkpoint, dataset, out;
  int camera = 0, frame = 0;
  std::uint64_t seed = 0;
  bool force = false;
};

int cmd_render(const RenderOpts& o) {
  auto ck = load_ck(o.checkpoint);
  if (o.dataset.empty()) throw train::ConfigError("--dataset is required");
  auto seq = scenes::load_dataset(o.dataset);
  if (o.camera < 0 || o.camera >= static_cast<int>(seq.cameras.size()))
    throw train::ConfigError("camera " + std::to_string(o.camera) + " not in dataset");
  if (o.frame < 0 || o.frame >= ck.config.interval_length)
    throw train::ConfigError("frame " + std::to_string(o.frame) +
                             " lies outside the trained interval");
  if (o.frame >= seq.spec.frame_count)
    throw train::ConfigError("frame " + std::to_string(o.frame) + " not in dataset");

  auto bundle = bundle_from(ck, seq.spec.bounds_min, seq.spec.bounds_max);
  const double t = static_cast<double>(o.frame) * bundle.spec.frame_step();
  ensure_run_dir(o.out, o.force);
  Manifest man("render", ck.config.seed, ck.config.deterministic);

  auto img = render::render_image(bundle, seq.cameras[o.camera], t,
                                  ck.config.samples_per_ray);
  char name[64];
  std::snprintf(name, sizeof(name), "render_cam%d_f%d.png", o.camera, o.frame);
  render::save_png(img, (fs::path(o.out) / name).string());
  const double psnr = render::mse_to_psnr(render::image_mse(img, seq.frames[o.camera][o.frame]));
  std::printf("rendered camera %d frame %d, psnr %.3f\n", o.camera, o.frame, psnr);

  man.j["checkpoint"] = o.checkpoint;
  man.j["camera"] = o.camera;
  man.j["frame"] = o.frame;
  man.j["psnr"] = psnr;
  man.j["artifacts"] = {{"image", name}};
  man.write(o.out);
  return 0;
}

// --- track ---

struct TrackOpts {
  std::string checkpoint, dataset, seeds_file, out;
  int from = 0, to = -1;
  bool force = false;
};

int cmd_track(const TrackOpts& o) {
  auto ck = load_ck(o.checkpoint);
  if (o.dataset.empty())
    throw train::ConfigError("--dataset is required (scene bounds and default seed points)");
  auto seq = scenes::load_dataset(o.dataset);
  auto bundle = bundle_from(ck, seq.spec.bounds_min, seq.spec.bounds_max);

  const int to = o.to < 0 ? bundle.spec.transition_count : o.to;
  std::vector<std::array<double, 3>> seeds;
  if (!o.seeds_file.empty()) {
    seeds = parse_seeds_file(o.seeds_file);
  } else {
    if (o.from >= static_cast<int>(seq.keypoints.size()) || seq.keypoints[o.from].empty())
      throw train::ConfigError("dataset has no keypoints at frame " + std::to_string(o.from));
    seeds = seq.keypoints[o.from];
  }

  auto trajectories = eval::track_points(bundle, seeds, o.from, to);
  ensure_run_dir(o.out, o.force);
  Manifest man("track", ck.config.seed, ck.config.deterministic);
  {
    std::ofstream f(fs::path(o.out) / "trajectories.csv");
    f << eval::trajectory_csv(trajectories);
    if (!f) throw std::runtime_error("cannot write trajectories.csv under " + o.out);
  }
  std::printf("tracked %zu points over frames %d..%d\n", seeds.size(), o.from, to);
  man.j["checkpoint"] = o.checkpoint;
  man.j["from"] = o.from;
  man.j["to"] = to;
  man.j["points"] = seeds.size();
  man.j["artifacts"] = {{"trajectories", "trajectories.csv"}};
  man.write(o.out);
  return 0;
}

// --- predict ---

struct PredictOpts {
  std::string checkpoint, out;
  int start = -1, steps = 5;
  bool force = false;
};

int cmd_predict(const PredictOpts& o) {
  auto ck = load_ck(o.checkpoint);
  // The predictor never encodes positions, so default bounds are fine.
  auto bundle = bundle_from(ck, {-1, -1, -1}, {1, 1, 1});
  const int tau = bundle.spec.tau;
  const int start = o.start < 0 ? bundle.spec.transition_count - tau : o.start;
  if (start < 0 || start + tau > bundle.spec.transition_count)
    throw train::ConfigError("history window [" + std::to_string(start) + ", " +
                             std::to_string(start + tau) + ") exceeds the stored transitions");
  if (o.steps < 1) throw train::ConfigError("--steps must be >= 1");

  auto history = eval::stored_weights(bundle, start, tau);
  auto predicted = eval::rollout_predict(bundle, history, o.steps);
  ensure_run_dir(o.out, o.force);
  Manifest man("predict", ck.config.seed, ck.config.deterministic);
  {
    std::ofstream f(fs::path(o.out) / "rollout.csv");
    f << eval::rollout_csv(predicted);
    if (!f) throw std::runtime_error("cannot write rollout.csv under " + o.out);
  }
  std::printf("rolled out %d steps from transitions [%d, %d)\n", o.steps, start, start + tau);
  man.j["checkpoint"] = o.checkpoint;
  man.j["history_start"] = start;
  man.j["steps"] = o.steps;
  man.j["artifacts"] = {{"rollout", "rollout.csv"}};
  man.write(o.out);
  return 0;
}

// --- eval ---

struct EvalOpts {
  std::string checkpoint, dataset, metric = "mmpjpe", out;
  int k = 5;
  bool force = false;
};

int cmd_eval(const EvalOpts& o) {
  auto ck = load_ck(o.checkpoint);
  if (o.dataset.empty()) throw train::ConfigError("--dataset is required");
  const std::string type = dataset_type(o.dataset);
  std::string name = o.metric;
  double value = 0.0;

  if (o.metric == "mmpjpe") {
    auto seq = scenes::load_dataset(o.dataset);
    auto bundle = bundle_from(ck, seq.spec.bounds_min, seq.spec.bounds_max);
    if (o.k < 1) throw train::ConfigError("--k must be >= 1");
    value = eval::scene_mmpjpe(bundle, seq, o.k);
    name = "mmpjpe_" + std::to_string(o.k);
  } else if (o.metric == "psnr" && type == "scene3d") {
    auto seq = scenes::load_dataset(o.dataset);
    train::Trainer trainer(ck.config, seq);
    trainer.load_parameters(ck);
    value = trainer.eval_psnr();
  } else if (o.metric == "psnr" || o.metric == "toy_abs_err" || o.metric == "pred_loss") {
    auto toy = scenes::load_toy2d(o.dataset);
    train::ToyTrainer trainer(ck.config, toy);
    trainer.restore(ck);
    if (o.metric == "pred_loss") {
      value = trainer.eval_pred_loss();
    } else if (o.metric == "psnr") {
      value = trainer.eval_psnr();
    } else {
      std::vector<std::vector<float>> estimated;
      for (int t = 0; t < trainer.transition_count(); ++t)
        estimated.push_back(trainer.estimate_motion(t));
      value = eval::toy_abs_err(estimated, toy);
    }
  } else {
    throw train::ConfigError("--metric must be mmpjpe|psnr|toy_abs_err|pred_loss, got '" +
                             o.metric + "'");
  }

  ensure_run_dir(o.out, o.force);
  Manifest man("eval", ck.config.seed, ck.config.deterministic);
  write_report(o.out, name, value);
  std::printf("%s = %.9g\n", name.c_str(), value);
  man.j["checkpoint"] = o.checkpoint;
  man.j["dataset"] = o.dataset;
  man.j["metric"] = name;
  man.j["value"] = value;
  man.j["artifacts"] = {{"report", "report.csv"}};
  man.write(o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"predictability-regularized motion field trainer"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PREF_TOOL_VERSION);

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic dataset from a spec file");
  gen_cmd->add_option("--spec,--config", gen.spec_path, "dataset spec JSON")->required();
  gen_cmd->add_option("--out", gen.out, "output dataset directory")->required();
  gen_cmd->add_option("--seed", gen.seed, "generation seed");
  gen_cmd->add_flag("--force", gen.force, "reuse a non-empty output directory");

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "train a bundle on a scene dataset");
  train_cmd->add_option("--dataset", tr.dataset, "dataset directory")->required();
  train_cmd->add_option("--out", tr.out, "run output directory")->required();
  auto* tr_cfg = train_cmd->add_option("--config", tr.config_path, "training config JSON");
  auto* tr_seed = train_cmd->add_option("--seed", tr.seed, "seed override");
  auto* tr_det =
      train_cmd->add_option("--deterministic", tr.deterministic, "deterministic mode override");
  auto* tr_iters = train_cmd->add_option("--iterations", tr.iterations, "iteration override");
  auto* tr_gamma =
      train_cmd->add_option("--gamma", tr.gamma, "predictability weight override (0 disables)");
  auto* tr_freeze = train_cmd->add_flag("--freeze-predictor", tr.freeze_predictor,
                                        "keep predictor parameters fixed");
  auto* tr_init = train_cmd->add_option("--init-from", tr.init_from,
                                        "checkpoint to copy parameters from (fresh run)");
  auto* tr_resume =
      train_cmd->add_option("--resume", tr.resume, "checkpoint to continue bit-exactly from");
  train_cmd->add_flag("--force", tr.force, "reuse a non-empty output directory");
  tr_resume->excludes(tr_cfg);
  tr_resume->excludes(tr_init);

  RenderOpts rn;
  auto* render_cmd = app.add_subcommand("render", "render one camera/frame from a checkpoint");
  render_cmd->add_option("--checkpoint", rn.checkpoint, "trained checkpoint")->required();
  render_cmd->add_option("--dataset", rn.dataset, "dataset directory (cameras and GT)")
      ->required();
  render_cmd->add_option("--camera", rn.camera, "camera index");
  render_cmd->add_option("--frame", rn.frame, "frame index");
  render_cmd->add_option("--out", rn.out, "run output directory")->required();
  render_cmd->add_flag("--force", rn.force, "reuse a non-empty output directory");

  TrackOpts tk;
  auto* track_cmd = app.add_subcommand("track", "advect 3D points through the motion field");
  track_cmd->add_option("--checkpoint", tk.checkpoint, "trained checkpoint")->required();
  track_cmd->add_option("--dataset", tk.dataset, "dataset directory")->required();
  auto* tk_seeds = track_cmd->add_option("--seeds", tk.seeds_file,
                                         "CSV of x,y,z seed points (default: GT keypoints)");
  track_cmd->add_option("--from", tk.from, "start frame");
  track_cmd->add_option("--to", tk.to, "end frame (default: last transition)");
  track_cmd->add_option("--out", tk.out, "run output directory")->required();
  track_cmd->add_flag("--force", tk.force, "reuse a non-empty output directory");
  (void)tk_seeds;

  PredictOpts pd;
  auto* predict_cmd =
      app.add_subcommand("predict", "roll the weight predictor forward autoregressively");
  predict_cmd->add_option("--checkpoint", pd.checkpoint, "trained checkpoint")->required();
  predict_cmd->add_option("--history-start", pd.start,
                          "first transition of the history window (default: latest)");
  predict_cmd->add_option("--steps", pd.steps, "number of predicted transitions");
  predict_cmd->add_option("--out", pd.out, "run output directory")->required();
  predict_cmd->add_flag("--force", pd.force, "reuse a non-empty output directory");

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "compute one metric for a trained checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "trained checkpoint")->required();
  eval_cmd->add_option("--dataset", ev.dataset, "dataset directory")->required();
  eval_cmd->add_option("--metric", ev.metric, "mmpjpe|psnr|toy_abs_err|pred_loss");
  eval_cmd->add_option("--k", ev.k, "mmpjpe window length");
  eval_cmd->add_option("--out", ev.out, "run output directory")->required();
  eval_cmd->add_flag("--force", ev.force, "reuse a non-empty output directory");

  try {
    app.parse(argc, argv);
    tr.has_seed = tr_seed->count() > 0;
    tr.has_det = tr_det->count() > 0;
    tr.has_iters = tr_iters->count() > 0;
    tr.has_gamma = tr_gamma->count() > 0;
    tr.has_freeze = tr_freeze->count() > 0;

    if (*gen_cmd) return cmd_gen(gen);
    if (*train_cmd) return cmd_train(tr);
    if (*render_cmd) return cmd_render(rn);
    if (*track_cmd) return cmd_track(tk);
    if (*predict_cmd) return cmd_predict(pd);
    if (*eval_cmd) return cmd_eval(ev);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const train::NumericalError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const ad::NumericError& e) {
    std::fprintf(stderr, "numerical abort: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
