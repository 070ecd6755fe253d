#include "pref/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace pref::train {

namespace {

using Json = nlohmann::ordered_json;

void require_positive(std::int64_t value, const char* name) {
  if (value <= 0) throw ConfigError(std::string(name) + " must be positive");
}

}  // namespace

void TrainConfig::validate() const {
  if (gamma < 0.0) throw ConfigError("gamma must be >= 0");
  if (tau < 1) throw ConfigError("tau must be >= 1");
  if (interval_length <= tau + 1)
    throw ConfigError("interval_length must exceed tau + 1 (window of tau+1 frames plus a "
                      "prediction target)");
  require_positive(rays_per_batch, "rays_per_batch");
  if (rays_per_batch < tau + 1)
    throw ConfigError("rays_per_batch must cover at least one ray per window frame");
  require_positive(n, "n");
  require_positive(m, "m");
  if (lr_start <= 0.0 || lr_end <= 0.0) throw ConfigError("learning rates must be positive");
  require_positive(decay_span, "decay_span");
  if (iterations < 0) throw ConfigError("iterations must be >= 0");
  require_positive(samples_per_ray, "samples_per_ray");
  require_positive(field_width, "field_width");
  require_positive(motion_width, "motion_width");
  require_positive(predictor_width, "predictor_width");
  require_positive(field_layers, "field_layers");
  require_positive(motion_layers, "motion_layers");
  require_positive(predictor_layers, "predictor_layers");
  if (field_skip >= 0 && (field_skip < 1 || field_skip >= field_layers))
    throw ConfigError("field_skip must lie strictly inside the hidden stack (or be -1)");
  if (motion_skip >= 0 && (motion_skip < 1 || motion_skip >= motion_layers))
    throw ConfigError("motion_skip must lie strictly inside the hidden stack (or be -1)");
  require_positive(freq_position, "freq_position");
  require_positive(freq_time, "freq_time");
  require_positive(log_every, "log_every");
  require_positive(checkpoint_every, "checkpoint_every");
  if (checkpoint_every % log_every != 0)
    throw ConfigError("checkpoint_every must be a multiple of log_every so resumed metric "
                      "traces line up with uninterrupted ones");
}

const char* pred_grad_mode_name(PredGradMode mode) {
  return mode == PredGradMode::kJoint ? "joint" : "predictor_only";
}

const char* embedding_mode_name(nets::EmbeddingMode mode) {
  return mode == nets::EmbeddingMode::kBasis ? "basis" : "per_frame";
}

namespace {

PredGradMode parse_pred_grad_mode(const std::string& s) {
  if (s == "joint") return PredGradMode::kJoint;
  if (s == "predictor_only") return PredGradMode::kPredictorOnly;
  throw ConfigError("pred_grad_mode must be 'joint' or 'predictor_only', got '" + s + "'");
}

nets::EmbeddingMode parse_embedding_mode(const std::string& s) {
  if (s == "basis") return nets::EmbeddingMode::kBasis;
  if (s == "per_frame") return nets::EmbeddingMode::kPerFrame;
  throw ConfigError("embedding_mode must be 'basis' or 'per_frame', got '" + s + "'");
}

// Pulls one typed value out of the parsed object, with the key name in
// every error message.
template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

constexpr const char* kKnownKeys[] = {
    "gamma",           "rays_per_batch", "tau",
    "n",               "m",              "lr_start",
    "lr_end",          "decay_span",     "iterations",
    "samples_per_ray", "interval_length", "stratified",
    "field_width",     "field_layers",   "field_skip",
    "motion_width",    "motion_layers",  "motion_skip",
    "predictor_width", "predictor_layers", "freq_position",
    "freq_time",       "seed",           "deterministic",
    "pred_grad_mode",  "freeze_predictor", "embedding_mode",
    "log_every",       "checkpoint_every",
};

}  // namespace

TrainConfig config_from_json_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* key : kKnownKeys) known |= item.key() == key;
    if (!known) throw ConfigError("unknown config key '" + item.key() + "'");
  }

  TrainConfig c;
  read_field(j, "gamma", c.gamma);
  read_field(j, "rays_per_batch", c.rays_per_batch);
  read_field(j, "tau", c.tau);
  read_field(j, "n", c.n);
  read_field(j, "m", c.m);
  read_field(j, "lr_start", c.lr_start);
  read_field(j, "lr_end", c.lr_end);
  read_field(j, "decay_span", c.decay_span);
  read_field(j, "iterations", c.iterations);
  read_field(j, "samples_per_ray", c.samples_per_ray);
  read_field(j, "interval_length", c.interval_length);
  read_field(j, "stratified", c.stratified);
  read_field(j, "field_width", c.field_width);
  read_field(j, "field_layers", c.field_layers);
  read_field(j, "field_skip", c.field_skip);
  read_field(j, "motion_width", c.motion_width);
  read_field(j, "motion_layers", c.motion_layers);
  read_field(j, "motion_skip", c.motion_skip);
  read_field(j, "predictor_width", c.predictor_width);
  read_field(j, "predictor_layers", c.predictor_layers);
  read_field(j, "freq_position", c.freq_position);
  read_field(j, "freq_time", c.freq_time);
  read_field(j, "seed", c.seed);
  read_field(j, "deterministic", c.deterministic);
  std::string mode = pred_grad_mode_name(c.pred_grad_mode);
  read_field(j, "pred_grad_mode", mode);
  c.pred_grad_mode = parse_pred_grad_mode(mode);
  read_field(j, "freeze_predictor", c.freeze_predictor);
  std::string embedding = embedding_mode_name(c.embedding_mode);
  read_field(j, "embedding_mode", embedding);
  c.embedding_mode = parse_embedding_mode(embedding);
  read_field(j, "log_every", c.log_every);
  read_field(j, "checkpoint_every", c.checkpoint_every);

  c.validate();
  return c;
}

TrainConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return config_from_json_text(buf.str());
}

std::string config_to_json_text(const TrainConfig& config) {
  Json j;
  j["gamma"] = config.gamma;
  j["rays_per_batch"] = config.rays_per_batch;
  j["tau"] = config.tau;
  j["n"] = config.n;
  j["m"] = config.m;
  j["lr_start"] = config.lr_start;
  j["lr_end"] = config.lr_end;
  j["decay_span"] = config.decay_span;
  j["iterations"] = config.iterations;
  j["samples_per_ray"] = config.samples_per_ray;
  j["interval_length"] = config.interval_length;
  j["stratified"] = config.stratified;
  j["field_width"] = config.field_width;
  j["field_layers"] = config.field_layers;
  j["field_skip"] = config.field_skip;
  j["motion_width"] = config.motion_width;
  j["motion_layers"] = config.motion_layers;
  j["motion_skip"] = config.motion_skip;
  j["predictor_width"] = config.predictor_width;
  j["predictor_layers"] = config.predictor_layers;
  j["freq_position"] = config.freq_position;
  j["freq_time"] = config.freq_time;
  j["seed"] = config.seed;
  j["deterministic"] = config.deterministic;
  j["pred_grad_mode"] = pred_grad_mode_name(config.pred_grad_mode);
  j["freeze_predictor"] = config.freeze_predictor;
  j["embedding_mode"] = embedding_mode_name(config.embedding_mode);
  j["log_every"] = config.log_every;
  j["checkpoint_every"] = config.checkpoint_every;
  return j.dump(2);
}

nets::BundleSpec bundle_spec_from(const TrainConfig& config) {
  nets::BundleSpec spec;
  spec.n = config.n;
  spec.m = config.m;
  spec.tau = config.tau;
  spec.embedding_mode = config.embedding_mode;
  spec.transition_count = config.interval_length - 1;
  spec.enc_position = {config.freq_position, true};
  spec.enc_time = {config.freq_time, true};
  spec.field_width = config.field_width;
  spec.field_layers = config.field_layers;
  spec.field_skip = config.field_skip;
  spec.motion_width = config.motion_width;
  spec.motion_layers = config.motion_layers;
  spec.motion_skip = config.motion_skip;
  spec.predictor_width = config.predictor_width;
  spec.predictor_layers = config.predictor_layers;
  return spec;
}

}  // namespace pref::train
