#pragma once

#include <string>

#include "pref/scenes.hpp"
#include "pref/toy2d.hpp"

namespace pref::tool {

// A parsed dataset spec file; "type" picks which member is live.
struct ParsedSpec {
  enum class Kind { kScene3d, kToy2d };
  Kind kind = Kind::kScene3d;
  scenes::SceneSpec scene;
  scenes::ToySpec toy;
};

// Parses a JSON spec file. Unknown keys and type mismatches are rejected
// with the offending key in the message (train::ConfigError, so the CLI
// maps them to the usage exit code). A scene spec without "primitives"
// gets one sinusoidally translating sphere.
ParsedSpec parse_spec_file(const std::string& path);
ParsedSpec parse_spec_text(const std::string& text);

// Re-serializes with every default materialized, for the run manifest.
std::string spec_to_json_text(const ParsedSpec& spec);

}  // namespace pref::tool
