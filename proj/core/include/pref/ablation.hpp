#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pref/config.hpp"
#include "pref/scenes.hpp"
#include "pref/toy2d.hpp"

namespace pref::eval {

// One side of a paired comparison. The configs of the two arms should
// differ only in the flag under study; each run overwrites the seed with
// the shared per-seed value so arms stay matched.
struct AblationArm {
  std::string name;
  train::TrainConfig config;
};

enum class ToyAblationMetric { kAbsErr, kPredLoss };

struct AblationResult {
  std::string metric_name;
  std::string name_a, name_b;
  std::vector<std::uint64_t> seeds;
  std::vector<double> arm_a, arm_b;

  double mean_a() const;
  double mean_b() const;
  int a_wins() const;     // seeds where arm_a is strictly lower
  bool ordered() const;   // arm_a strictly lower in every seed
  std::string csv() const;
  std::string verdict() const;
};

using AblationProgress = std::function<void(const std::string&)>;

// Trains both arms on a freshly generated toy per seed and scores either
// the motion error against the stored ground truth (requires the arm
// interval to cover the whole toy) or the predictor's converged loss.
AblationResult compare_toy_ablation(const scenes::ToySpec& spec, const AblationArm& a,
                                    const AblationArm& b, const std::vector<std::uint64_t>& seeds,
                                    ToyAblationMetric metric,
                                    const AblationProgress& progress = {});

// Same pairing on a generated 3D scene, scored by tracking mmpjpe at
// horizon k.
AblationResult compare_scene_ablation(const scenes::SceneSpec& spec, const AblationArm& a,
                                      const AblationArm& b,
                                      const std::vector<std::uint64_t>& seeds, int k,
                                      const AblationProgress& progress = {});

}  // namespace pref::eval
