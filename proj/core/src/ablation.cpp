#include "pref/ablation.hpp"

#include <cstdio>
#include <stdexcept>

#include "pref/metrics.hpp"
#include "pref/toy_trainer.hpp"
#include "pref/trainer.hpp"

namespace pref::eval {

namespace {

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

void report(const AblationProgress& progress, const std::string& line) {
  if (progress) progress(line);
}

}  // namespace

double AblationResult::mean_a() const { return mean_of(arm_a); }

double AblationResult::mean_b() const { return mean_of(arm_b); }

int AblationResult::a_wins() const {
  int wins = 0;
  for (std::size_t i = 0; i < arm_a.size(); ++i)
    if (arm_a[i] < arm_b[i]) wins += 1;
  return wins;
}

bool AblationResult::ordered() const {
  return a_wins() == static_cast<int>(arm_a.size()) && !arm_a.empty();
}

std::string AblationResult::csv() const {
  std::string out = "seed," + name_a + "," + name_b + "\n";
  char line[96];
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    std::snprintf(line, sizeof(line), "%llu,%.6g,%.6g\n",
                  static_cast<unsigned long long>(seeds[i]), arm_a[i], arm_b[i]);
    out += line;
  }
  std::snprintf(line, sizeof(line), "mean,%.6g,%.6g\n", mean_a(), mean_b());
  out += line;
  return out;
}

std::string AblationResult::verdict() const {
  char line[192];
  std::snprintf(line, sizeof(line), "%s: %s < %s in %d/%zu seeds (means %.6g vs %.6g)",
                metric_name.c_str(), name_a.c_str(), name_b.c_str(), a_wins(), seeds.size(),
                mean_a(), mean_b());
  return line;
}

AblationResult compare_toy_ablation(const scenes::ToySpec& spec, const AblationArm& a,
                                    const AblationArm& b, const std::vector<std::uint64_t>& seeds,
                                    ToyAblationMetric metric, const AblationProgress& progress) {
  if (seeds.empty()) throw std::invalid_argument("compare_toy_ablation: no seeds");
  AblationResult result;
  result.metric_name = metric == ToyAblationMetric::kAbsErr ? "toy_abs_err" : "pred_loss";
  result.name_a = a.name;
  result.name_b = b.name;
  result.seeds = seeds;

  for (std::uint64_t seed : seeds) {
    const auto toy = scenes::make_toy2d(spec, seed);
    for (int arm = 0; arm < 2; ++arm) {
      train::TrainConfig config = (arm == 0 ? a : b).config;
      config.seed = seed;
      if (metric == ToyAblationMetric::kAbsErr &&
          config.interval_length != spec.frame_count)
        throw std::invalid_argument("compare_toy_ablation: abs-err scoring needs the interval "
                                    "to cover every toy transition");
      train::ToyTrainer trainer(config, toy);
      trainer.run({}, {});
      double score = 0.0;
      if (metric == ToyAblationMetric::kAbsErr) {
        std::vector<std::vector<float>> estimated;
        for (int t = 0; t < trainer.transition_count(); ++t)
          estimated.push_back(trainer.estimate_motion(t));
        score = toy_abs_err(estimated, toy);
      } else {
        score = trainer.eval_pred_loss();
      }
      (arm == 0 ? result.arm_a : result.arm_b).push_back(score);
      report(progress, (arm == 0 ? a : b).name + " seed " + std::to_string(seed) + ": " +
                           std::to_string(score));
    }
  }
  return result;
}

AblationResult compare_scene_ablation(const scenes::SceneSpec& spec, const AblationArm& a,
                                      const AblationArm& b,
                                      const std::vector<std::uint64_t>& seeds, int k,
                                      const AblationProgress& progress) {
  if (seeds.empty()) throw std::invalid_argument("compare_scene_ablation: no seeds");
  AblationResult result;
  result.metric_name = "mmpjpe_" + std::to_string(k);
  result.name_a = a.name;
  result.name_b = b.name;
  result.seeds = seeds;

  for (std::uint64_t seed : seeds) {
    const auto seq = scenes::make_scene(spec, seed);
    for (int arm = 0; arm < 2; ++arm) {
      train::TrainConfig config = (arm == 0 ? a : b).config;
      config.seed = seed;
      train::Trainer trainer(config, seq);
      trainer.run({}, {});
      const double score = scene_mmpjpe(trainer.bundle(), seq, k);
      (arm == 0 ? result.arm_a : result.arm_b).push_back(score);
      report(progress, (arm == 0 ? a : b).name + " seed " + std::to_string(seed) + ": " +
                           std::to_string(score));
    }
  }
  return result;
}

}  // namespace pref::eval
