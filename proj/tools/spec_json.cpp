#include "spec_json.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pref/config.hpp"

namespace pref::tool {

namespace {

using Json = nlohmann::ordered_json;
using train::ConfigError;

template <typename T>
void read_field(const Json& j, const std::string& where, const char* key, T& out) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "key '" + key + "' has the wrong type");
  }
}

void reject_unknown(const Json& j, const std::string& where,
                    std::initializer_list<const char*> known) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* key : known) ok |= item.key() == key;
    if (!ok) throw ConfigError(where + "unknown key '" + item.key() + "'");
  }
}

scenes::TrajectoryKind parse_traj_kind(const std::string& s, const std::string& where) {
  if (s == "static") return scenes::TrajectoryKind::kStatic;
  if (s == "linear") return scenes::TrajectoryKind::kLinear;
  if (s == "sinusoid") return scenes::TrajectoryKind::kSinusoid;
  if (s == "orbit") return scenes::TrajectoryKind::kOrbit;
  throw ConfigError(where + "trajectory kind must be static|linear|sinusoid|orbit, got '" + s +
                    "'");
}

const char* traj_kind_name(scenes::TrajectoryKind k) {
  switch (k) {
    case scenes::TrajectoryKind::kStatic: return "static";
    case scenes::TrajectoryKind::kLinear: return "linear";
    case scenes::TrajectoryKind::kSinusoid: return "sinusoid";
    default: return "orbit";
  }
}

scenes::TrajectorySpec parse_trajectory(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + "'trajectory' must be an object");
  reject_unknown(j, where,
                 {"kind", "base", "velocity", "amplitude", "frequency", "phase", "orbit_radius"});
  scenes::TrajectorySpec t;
  std::string kind = traj_kind_name(t.kind);
  read_field(j, where, "kind", kind);
  t.kind = parse_traj_kind(kind, where);
  read_field(j, where, "base", t.base);
  read_field(j, where, "velocity", t.velocity);
  read_field(j, where, "amplitude", t.amplitude);
  read_field(j, where, "frequency", t.frequency);
  read_field(j, where, "phase", t.phase);
  read_field(j, where, "orbit_radius", t.orbit_radius);
  return t;
}

scenes::PrimitiveSpec parse_primitive(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + "must be an object");
  reject_unknown(j, where,
                 {"solid", "radius", "half_extents", "color", "extinction", "falloff",
                  "trajectory", "appear_from", "appear_to", "keypoints"});
  scenes::PrimitiveSpec p;
  std::string solid = "sphere";
  read_field(j, where, "solid", solid);
  if (solid == "sphere")
    p.solid = scenes::SolidKind::kSphere;
  else if (solid == "box")
    p.solid = scenes::SolidKind::kBox;
  else
    throw ConfigError(where + "solid must be sphere|box, got '" + solid + "'");
  read_field(j, where, "radius", p.radius);
  read_field(j, where, "half_extents", p.half_extents);
  read_field(j, where, "color", p.color);
  read_field(j, where, "extinction", p.extinction);
  read_field(j, where, "falloff", p.falloff);
  if (j.contains("trajectory")) p.trajectory = parse_trajectory(j["trajectory"], where);
  read_field(j, where, "appear_from", p.appear_from);
  read_field(j, where, "appear_to", p.appear_to);
  read_field(j, where, "keypoints", p.keypoints);
  return p;
}

scenes::PrimitiveSpec default_sphere() {
  scenes::PrimitiveSpec p;
  p.trajectory.kind = scenes::TrajectoryKind::kSinusoid;
  p.trajectory.amplitude = {0.45, 0.0, 0.0};
  return p;
}

ParsedSpec parse_scene(const Json& j) {
  reject_unknown(j, "scene spec: ",
                 {"type", "bounds_min", "bounds_max", "frame_count", "gt_samples", "rig",
                  "primitives"});
  ParsedSpec out;
  out.kind = ParsedSpec::Kind::kScene3d;
  auto& s = out.scene;
  read_field(j, "scene spec: ", "bounds_min", s.bounds_min);
  read_field(j, "scene spec: ", "bounds_max", s.bounds_max);
  read_field(j, "scene spec: ", "frame_count", s.frame_count);
  read_field(j, "scene spec: ", "gt_samples", s.gt_samples);
  if (j.contains("rig")) {
    const Json& r = j["rig"];
    if (!r.is_object()) throw ConfigError("scene spec: 'rig' must be an object");
    reject_unknown(r, "rig: ",
                   {"count", "radius", "elevation", "focal", "image_width", "image_height"});
    read_field(r, "rig: ", "count", s.rig.count);
    read_field(r, "rig: ", "radius", s.rig.radius);
    read_field(r, "rig: ", "elevation", s.rig.elevation);
    read_field(r, "rig: ", "focal", s.rig.focal);
    read_field(r, "rig: ", "image_width", s.rig.image_width);
    read_field(r, "rig: ", "image_height", s.rig.image_height);
  }
  if (j.contains("primitives")) {
    const Json& prims = j["primitives"];
    if (!prims.is_array()) throw ConfigError("scene spec: 'primitives' must be an array");
    for (std::size_t i = 0; i < prims.size(); ++i)
      s.primitives.push_back(
          parse_primitive(prims[i], "primitives[" + std::to_string(i) + "]: "));
  } else {
    s.primitives.push_back(default_sphere());
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

ParsedSpec parse_toy(const Json& j) {
  reject_unknown(j, "toy spec: ",
                 {"type", "width", "height", "frame_count", "texture_waves", "warp_a", "warp_b"});
  ParsedSpec out;
  out.kind = ParsedSpec::Kind::kToy2d;
  auto& t = out.toy;
  read_field(j, "toy spec: ", "width", t.width);
  read_field(j, "toy spec: ", "height", t.height);
  read_field(j, "toy spec: ", "frame_count", t.frame_count);
  read_field(j, "toy spec: ", "texture_waves", t.texture_waves);
  auto parse_warp = [](const Json& w, const std::string& where, scenes::ToyWarp& warp) {
    if (!w.is_object()) throw ConfigError(where + "must be an object");
    reject_unknown(w, where, {"kind", "amplitude", "frequency"});
    std::string kind = warp.kind == scenes::WarpKind::kShear ? "shear" : "swirl";
    read_field(w, where, "kind", kind);
    if (kind == "shear")
      warp.kind = scenes::WarpKind::kShear;
    else if (kind == "swirl")
      warp.kind = scenes::WarpKind::kSwirl;
    else
      throw ConfigError(where + "kind must be shear|swirl, got '" + kind + "'");
    read_field(w, where, "amplitude", warp.amplitude);
    read_field(w, where, "frequency", warp.frequency);
  };
  if (j.contains("warp_a")) parse_warp(j["warp_a"], "warp_a: ", t.warp_a);
  if (j.contains("warp_b")) parse_warp(j["warp_b"], "warp_b: ", t.warp_b);
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return out;
}

Json trajectory_json(const scenes::TrajectorySpec& t) {
  Json j;
  j["kind"] = traj_kind_name(t.kind);
  j["base"] = t.base;
  j["velocity"] = t.velocity;
  j["amplitude"] = t.amplitude;
  j["frequency"] = t.frequency;
  j["phase"] = t.phase;
  j["orbit_radius"] = t.orbit_radius;
  return j;
}

}  // namespace

ParsedSpec parse_spec_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("spec root must be a JSON object");
  std::string type;
  read_field(j, "spec: ", "type", type);
  if (type == "scene3d") return parse_scene(j);
  if (type == "toy2d") return parse_toy(j);
  throw ConfigError("spec 'type' must be scene3d|toy2d, got '" + type + "'");
}

ParsedSpec parse_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec_text(buf.str());
}

std::string spec_to_json_text(const ParsedSpec& spec) {
  Json j;
  if (spec.kind == ParsedSpec::Kind::kScene3d) {
    const auto& s = spec.scene;
    j["type"] = "scene3d";
    j["bounds_min"] = s.bounds_min;
    j["bounds_max"] = s.bounds_max;
    j["frame_count"] = s.frame_count;
    j["gt_samples"] = s.gt_samples;
    j["rig"] = {{"count", s.rig.count},
                {"radius", s.rig.radius},
                {"elevation", s.rig.elevation},
                {"focal", s.rig.focal},
                {"image_width", s.rig.image_width},
                {"image_height", s.rig.image_height}};
    j["primitives"] = Json::array();
    for (const auto& p : s.primitives) {
      Json pj;
      pj["solid"] = p.solid == scenes::SolidKind::kSphere ? "sphere" : "box";
      pj["radius"] = p.radius;
      pj["half_extents"] = p.half_extents;
      pj["color"] = p.color;
      pj["extinction"] = p.extinction;
      pj["falloff"] = p.falloff;
      pj["trajectory"] = trajectory_json(p.trajectory);
      pj["appear_from"] = p.appear_from;
      pj["appear_to"] = p.appear_to;
      pj["keypoints"] = p.keypoints;
      j["primitives"].push_back(pj);
    }
  } else {
    const auto& t = spec.toy;
    j["type"] = "toy2d";
    j["width"] = t.width;
    j["height"] = t.height;
    j["frame_count"] = t.frame_count;
    j["texture_waves"] = t.texture_waves;
    auto warp_json = [](const scenes::ToyWarp& w) {
      return Json{{"kind", w.kind == scenes::WarpKind::kShear ? "shear" : "swirl"},
                  {"amplitude", w.amplitude},
                  {"frequency", w.frequency}};
    };
    j["warp_a"] = warp_json(t.warp_a);
    j["warp_b"] = warp_json(t.warp_b);
  }
  return j.dump(2);
}

}  // namespace pref::tool
