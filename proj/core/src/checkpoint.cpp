#include "pref/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>

namespace pref::train {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'P', 'R', 'E', 'F'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ofstream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void write_array(std::ofstream& out, const std::string& name, const ad::Shape& shape,
                 const float* data, std::size_t count) {
  write_string(out, name);
  write_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) write_u32(out, static_cast<std::uint32_t>(d));
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
    throw CheckpointError("checkpoint '" + path + "' is truncated");
  return v;
}

std::string read_string(std::ifstream& in, const std::string& path) {
  const std::uint32_t len = read_u32(in, path);
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw CheckpointError("checkpoint '" + path + "' is truncated");
  return s;
}

std::int64_t parse_i64(const std::string& s, const char* key) {
  try {
    return std::stoll(s);
  } catch (const std::exception&) {
    throw CheckpointError(std::string("checkpoint metadata '") + key + "' is not an integer");
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainConfig& config,
                     const std::vector<ad::Tensor<float>>& params,
                     const opt::AdamState<float>& adam, std::int64_t iteration,
                     const std::string& rng_text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open '" + path + "' for writing");

  out.write(kMagic, 4);
  write_u32(out, kVersion);

  const std::vector<std::pair<std::string, std::string>> metadata = {
      {"config", config_to_json_text(config)},
      {"iteration", std::to_string(iteration)},
      {"adam_step_count", std::to_string(adam.step_count)},
      {"rng", rng_text},
  };
  write_u32(out, static_cast<std::uint32_t>(metadata.size()));
  for (const auto& [key, value] : metadata) {
    write_string(out, key);
    write_string(out, value);
  }

  write_u32(out, static_cast<std::uint32_t>(params.size() + 3 * adam.moments.size()));
  for (const auto& p : params) {
    if (p.name().empty()) throw CheckpointError("cannot checkpoint an unnamed parameter");
    write_array(out, p.name(), p.shape(), p.data().data(), p.data().size());
  }
  for (const auto& [name, mom] : adam.moments) {
    write_array(out, "adam.m." + name, {static_cast<std::int64_t>(mom.m.size())}, mom.m.data(),
                mom.m.size());
    write_array(out, "adam.v." + name, {static_cast<std::int64_t>(mom.v.size())}, mom.v.data(),
                mom.v.size());
    const float steps = static_cast<float>(mom.steps);
    write_array(out, "adam.t." + name, {1}, &steps, 1);
  }
  out.flush();
  if (!out) throw CheckpointError("write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");

  char magic[4] = {};
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("'" + path + "' is not a checkpoint (bad magic)");
  const std::uint32_t version = read_u32(in, path);
  if (version != kVersion)
    throw CheckpointError("checkpoint '" + path + "' has format version " +
                          std::to_string(version) + ", expected " + std::to_string(kVersion));

  Checkpoint ck;
  std::map<std::string, std::string> metadata;
  const std::uint32_t meta_count = read_u32(in, path);
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    std::string key = read_string(in, path);
    metadata[key] = read_string(in, path);
  }
  for (const char* key : {"config", "iteration", "adam_step_count", "rng"})
    if (!metadata.count(key))
      throw CheckpointError("checkpoint '" + path + "' lacks metadata key '" + key + "'");
  ck.config = config_from_json_text(metadata["config"]);
  ck.iteration = parse_i64(metadata["iteration"], "iteration");
  ck.adam_step_count = parse_i64(metadata["adam_step_count"], "adam_step_count");
  ck.rng_text = metadata["rng"];
  ck.adam.step_count = ck.adam_step_count;

  struct MomentParts {
    std::vector<float> m, v;
    std::int64_t steps = -1;
  };
  std::map<std::string, MomentParts> moments;

  const std::uint32_t array_count = read_u32(in, path);
  for (std::uint32_t i = 0; i < array_count; ++i) {
    const std::string name = read_string(in, path);
    const std::uint32_t rank = read_u32(in, path);
    if (rank > 8) throw CheckpointError("array '" + name + "' has implausible rank");
    ad::Shape shape;
    std::size_t count = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      shape.push_back(static_cast<std::int64_t>(read_u32(in, path)));
      count *= static_cast<std::size_t>(shape.back());
    }
    std::vector<float> data(count);
    if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(count * 4)))
      throw CheckpointError("checkpoint '" + path + "' is truncated in array '" + name + "'");

    if (name.rfind("adam.m.", 0) == 0) {
      moments[name.substr(7)].m = std::move(data);
    } else if (name.rfind("adam.v.", 0) == 0) {
      moments[name.substr(7)].v = std::move(data);
    } else if (name.rfind("adam.t.", 0) == 0) {
      if (count != 1) throw CheckpointError("array '" + name + "' must hold a single count");
      moments[name.substr(7)].steps = static_cast<std::int64_t>(data[0]);
    } else {
      auto tensor = ad::Tensor<float>::from(std::move(data), shape);
      tensor.set_name(name);
      ck.params.emplace_back(name, std::move(tensor));
    }
  }

  for (auto& [name, parts] : moments) {
    if (parts.m.size() != parts.v.size() || parts.steps < 0)
      throw CheckpointError("optimizer state for '" + name + "' is incomplete");
    auto& mom = ck.adam.moments[name];
    mom.m = std::move(parts.m);
    mom.v = std::move(parts.v);
    mom.steps = parts.steps;
  }
  return ck;
}

void apply_checkpoint_params(const Checkpoint& ck, std::vector<ad::Tensor<float>>& live) {
  std::map<std::string, ad::Tensor<float>*> by_name;
  for (auto& p : live) by_name[p.name()] = &p;
  if (by_name.size() != live.size())
    throw CheckpointError("live parameter list has duplicate names");

  std::size_t covered = 0;
  for (const auto& [name, tensor] : ck.params) {
    auto it = by_name.find(name);
    if (it == by_name.end())
      throw CheckpointError("checkpoint array '" + name +
                            "' matches no parameter (architecture mismatch?)");
    if (tensor.shape() != it->second->shape())
      throw CheckpointError("checkpoint array '" + name + "' has mismatched shape");
    std::copy(tensor.data().begin(), tensor.data().end(), it->second->impl()->data.begin());
    covered += 1;
  }
  if (covered != live.size())
    throw CheckpointError("checkpoint covers " + std::to_string(covered) + " of " +
                          std::to_string(live.size()) + " parameters");
}

void validate_checkpoint_moments(const Checkpoint& ck,
                                 const std::vector<ad::Tensor<float>>& live) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& p : live) sizes[p.name()] = p.data().size();
  for (const auto& [name, mom] : ck.adam.moments) {
    auto it = sizes.find(name);
    if (it == sizes.end())
      throw CheckpointError("optimizer state names unknown parameter '" + name + "'");
    if (mom.m.size() != it->second)
      throw CheckpointError("optimizer moments for '" + name + "' have the wrong size");
  }
}

}  // namespace pref::train
