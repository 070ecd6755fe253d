#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pref/adam.hpp"
#include "pref/config.hpp"
#include "pref/tensor.hpp"

namespace pref::train {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Everything a resume needs, as read back from disk. Parameter arrays
// keep file order; optimizer moments are rebuilt into the state's map.
struct Checkpoint {
  TrainConfig config;
  std::int64_t iteration = 0;
  std::int64_t adam_step_count = 0;
  std::string rng_text;
  std::vector<std::pair<std::string, ad::Tensor<float>>> params;
  opt::AdamState<float> adam;
};

// Binary layout, little-endian throughout: magic "PREF", u32 format
// version, u32 metadata entry count followed by length-prefixed key and
// value strings (config JSON, iteration, optimizer step count, RNG
// state), u32 array count followed by named arrays (u32 name length,
// name, u32 rank, u32 dims, f32 values). Optimizer moments ride along as
// arrays named adam.m.<param>, adam.v.<param>, and adam.t.<param> (the
// per-parameter update count, exact in f32 at any plausible step count).
// `params` is whatever the owning trainer lists, every entry named.
void save_checkpoint(const std::string& path, const TrainConfig& config,
                     const std::vector<ad::Tensor<float>>& params,
                     const opt::AdamState<float>& adam, std::int64_t iteration,
                     const std::string& rng_text);

Checkpoint load_checkpoint(const std::string& path);

// Copies every checkpoint array into the matching live parameter.
// Unknown names, shape mismatches, and uncovered parameters are all
// rejected naming the offender.
void apply_checkpoint_params(const Checkpoint& ck, std::vector<ad::Tensor<float>>& live);

// Verifies the checkpoint's optimizer moments line up with the live
// parameter list before they are adopted.
void validate_checkpoint_moments(const Checkpoint& ck,
                                 const std::vector<ad::Tensor<float>>& live);

}  // namespace pref::train
