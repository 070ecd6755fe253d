#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pref/scenes.hpp"

namespace pref::scenes {

namespace fs = std::filesystem;

namespace {

void write_doubles(std::ostream& os, const double* v, int count) {
  char buf[32];
  for (int i = 0; i < count; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", v[i]);
    os << (i ? " " : "") << buf;
  }
}

[[noreturn]] void fail(const std::string& file, const std::string& what) {
  throw std::runtime_error("dataset: " + file + ": " + what);
}

}  // namespace

void save_dataset(const SceneSequence& seq, const std::string& path) {
  fs::create_directories(path);
  {
    std::ofstream meta(fs::path(path) / "meta.txt");
    meta << "format_version 1\ntype scene3d\nframe_count " << seq.spec.frame_count << "\nseed "
         << seq.seed << "\ncamera_count " << seq.cameras.size() << "\n";
    if (!meta) fail("meta.txt", "write failed");
  }
  {
    std::ofstream bounds(fs::path(path) / "bounds.txt");
    write_doubles(bounds, seq.spec.bounds_min.data(), 3);
    bounds << " ";
    write_doubles(bounds, seq.spec.bounds_max.data(), 3);
    bounds << "\n";
    if (!bounds) fail("bounds.txt", "write failed");
  }
  {
    std::ofstream cams(fs::path(path) / "cameras.txt");
    for (const auto& cam : seq.cameras) {
      const double intr[6] = {cam.fx, cam.fy, cam.cx, cam.cy, static_cast<double>(cam.width),
                              static_cast<double>(cam.height)};
      write_doubles(cams, intr, 6);
      // Row-major 3x4 camera-to-world [R|t].
      for (int r = 0; r < 3; ++r) {
        cams << " ";
        write_doubles(cams, cam.rotation.data() + 3 * r, 3);
        cams << " ";
        write_doubles(cams, &cam.position[r], 1);
      }
      cams << "\n";
    }
    if (!cams) fail("cameras.txt", "write failed");
  }
  {
    std::ofstream kp(fs::path(path) / "keypoints.csv");
    kp << "frame,point_id,x,y,z\n";
    char buf[128];
    for (std::size_t f = 0; f < seq.keypoints.size(); ++f)
      for (std::size_t k = 0; k < seq.keypoints[f].size(); ++k) {
        const auto& p = seq.keypoints[f][k];
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g,%.17g,%.17g\n", f, k, p[0], p[1], p[2]);
        kp << buf;
      }
    if (!kp) fail("keypoints.csv", "write failed");
  }
  for (std::size_t c = 0; c < seq.cameras.size(); ++c) {
    const fs::path dir = fs::path(path) / "frames" / ("cam" + std::to_string(c));
    fs::create_directories(dir);
    for (int f = 0; f < seq.spec.frame_count; ++f)
      render::save_png(seq.frames[c][f], (dir / ("f" + std::to_string(f) + ".png")).string());
  }
}

SceneSequence load_dataset(const std::string& path) {
  SceneSequence seq;
  int camera_count = -1;
  {
    std::ifstream meta(fs::path(path) / "meta.txt");
    if (!meta) fail("meta.txt", "missing");
    std::string key;
    bool type_ok = false;
    while (meta >> key) {
      if (key == "format_version") {
        int v = -1;
        meta >> v;
        if (v != 1) fail("meta.txt", "unsupported format_version " + std::to_string(v));
      } else if (key == "type") {
        std::string t;
        meta >> t;
        if (t != "scene3d") fail("meta.txt", "type '" + t + "' is not scene3d");
        type_ok = true;
      } else if (key == "frame_count")
        meta >> seq.spec.frame_count;
      else if (key == "seed")
        meta >> seq.seed;
      else if (key == "camera_count")
        meta >> camera_count;
      else {
        std::string rest;
        std::getline(meta, rest);
      }
    }
    if (!type_ok) fail("meta.txt", "missing type field");
    if (seq.spec.frame_count < 2) fail("meta.txt", "bad frame_count");
    if (camera_count < 1) fail("meta.txt", "bad camera_count");
  }
  {
    std::ifstream bounds(fs::path(path) / "bounds.txt");
    if (!bounds) fail("bounds.txt", "missing");
    for (int a = 0; a < 3; ++a)
      if (!(bounds >> seq.spec.bounds_min[a])) fail("bounds.txt", "truncated");
    for (int a = 0; a < 3; ++a)
      if (!(bounds >> seq.spec.bounds_max[a])) fail("bounds.txt", "truncated");
  }
  {
    std::ifstream cams(fs::path(path) / "cameras.txt");
    if (!cams) fail("cameras.txt", "missing");
    std::string line;
    int line_no = 0;
    while (std::getline(cams, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      render::Camera cam;
      double w, h;
      if (!(ss >> cam.fx >> cam.fy >> cam.cx >> cam.cy >> w >> h))
        fail("cameras.txt", "truncated intrinsics on line " + std::to_string(line_no));
      cam.width = static_cast<int>(w);
      cam.height = static_cast<int>(h);
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c)
          if (!(ss >> cam.rotation[3 * r + c]))
            fail("cameras.txt", "truncated rotation on line " + std::to_string(line_no));
        if (!(ss >> cam.position[r]))
          fail("cameras.txt", "truncated translation on line " + std::to_string(line_no));
      }
      cam.validate();
      seq.cameras.push_back(cam);
    }
    if (static_cast<int>(seq.cameras.size()) != camera_count)
      fail("cameras.txt", "expected " + std::to_string(camera_count) + " cameras, found " +
                              std::to_string(seq.cameras.size()));
  }
  {
    std::ifstream kp(fs::path(path) / "keypoints.csv");
    if (!kp) fail("keypoints.csv", "missing");
    std::string line;
    if (!std::getline(kp, line) || line != "frame,point_id,x,y,z")
      fail("keypoints.csv", "bad header");
    seq.keypoints.assign(static_cast<std::size_t>(seq.spec.frame_count), {});
    int line_no = 1;
    while (std::getline(kp, line)) {
      ++line_no;
      if (line.empty()) continue;
      long f, id;
      double x, y, z;
      if (std::sscanf(line.c_str(), "%ld,%ld,%lf,%lf,%lf", &f, &id, &x, &y, &z) != 5)
        fail("keypoints.csv", "malformed line " + std::to_string(line_no));
      if (f < 0 || f >= seq.spec.frame_count)
        fail("keypoints.csv", "frame out of range on line " + std::to_string(line_no));
      auto& list = seq.keypoints[static_cast<std::size_t>(f)];
      if (id != static_cast<long>(list.size()))
        fail("keypoints.csv", "non-contiguous point_id on line " + std::to_string(line_no));
      list.push_back({x, y, z});
    }
  }
  for (int c = 0; c < camera_count; ++c) {
    std::vector<render::Image> cam_frames;
    for (int f = 0; f < seq.spec.frame_count; ++f) {
      const fs::path p =
          fs::path(path) / "frames" / ("cam" + std::to_string(c)) / ("f" + std::to_string(f) + ".png");
      if (!fs::exists(p)) fail(p.string(), "missing frame image");
      cam_frames.push_back(render::load_png(p.string()));
    }
    seq.frames.push_back(std::move(cam_frames));
  }
  return seq;
}

}  // namespace pref::scenes
