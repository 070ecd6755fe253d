#include "pref/toy2d.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace pref::scenes {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void ToySpec::validate() const {
  if (width < 8 || height < 8) throw std::invalid_argument("toy2d: image too small");
  if (frame_count < 2) throw std::invalid_argument("toy2d: needs at least 2 frames");
  if (texture_waves < 1) throw std::invalid_argument("toy2d: needs texture content");
  if (warp_a.amplitude < 0 || warp_b.amplitude < 0)
    throw std::invalid_argument("toy2d: negative warp amplitude");
}

std::array<double, 2> warp_displacement(const ToyWarp& warp, double x, double y, int width,
                                        int height) {
  if (warp.kind == WarpKind::kShear)
    return {warp.amplitude * std::sin(kTwoPi * warp.frequency * y / height), 0.0};
  const double cx = (width - 1) / 2.0, cy = (height - 1) / 2.0;
  const double px = x - cx, py = y - cy;
  const double s = 0.25 * std::min(width, height);
  const double theta = warp.amplitude * std::exp(-(px * px + py * py) / (2 * s * s));
  const double c = std::cos(theta), sn = std::sin(theta);
  return {c * px - sn * py - px, sn * px + c * py - py};
}

namespace {

void check_invertible(const ToyWarp& warp, int width, int height) {
  // The warp folds over iff det(I + grad d) hits zero somewhere.
  const double h = 0.5;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const auto dxp = warp_displacement(warp, x + h, y, width, height);
      const auto dxm = warp_displacement(warp, x - h, y, width, height);
      const auto dyp = warp_displacement(warp, x, y + h, width, height);
      const auto dym = warp_displacement(warp, x, y - h, width, height);
      const double j00 = 1 + (dxp[0] - dxm[0]) / (2 * h);
      const double j01 = (dyp[0] - dym[0]) / (2 * h);
      const double j10 = (dxp[1] - dxm[1]) / (2 * h);
      const double j11 = 1 + (dyp[1] - dym[1]) / (2 * h);
      if (j00 * j11 - j01 * j10 < 0.05)
        throw std::invalid_argument("toy2d: warp amplitude causes fold-over");
    }
}

// Solves y + d(y) = x by fixed-point iteration.
std::array<double, 2> invert_warp(const ToyWarp& warp, double x, double y, int width,
                                  int height) {
  double ux = x, uy = y;
  for (int it = 0; it < 40; ++it) {
    const auto d = warp_displacement(warp, ux, uy, width, height);
    const double nx = x - d[0], ny = y - d[1];
    const double step = std::fabs(nx - ux) + std::fabs(ny - uy);
    ux = nx;
    uy = ny;
    if (step < 1e-12) break;
  }
  const auto d = warp_displacement(warp, ux, uy, width, height);
  if (std::fabs(ux + d[0] - x) + std::fabs(uy + d[1] - y) > 1e-6)
    throw std::invalid_argument("toy2d: warp inversion did not converge (fold-over?)");
  return {ux, uy};
}

float sample_clamped(const render::Image& img, double x, double y, int c) {
  x = std::min(std::max(x, 0.0), static_cast<double>(img.width - 1));
  y = std::min(std::max(y, 0.0), static_cast<double>(img.height - 1));
  const int x0 = std::min(static_cast<int>(x), img.width - 2);
  const int y0 = std::min(static_cast<int>(y), img.height - 2);
  const double fx = x - x0, fy = y - y0;
  const double v00 = img.pixel(x0, y0)[c], v10 = img.pixel(x0 + 1, y0)[c];
  const double v01 = img.pixel(x0, y0 + 1)[c], v11 = img.pixel(x0 + 1, y0 + 1)[c];
  return static_cast<float>((1 - fy) * ((1 - fx) * v00 + fx * v10) +
                            fy * ((1 - fx) * v01 + fx * v11));
}

render::Image make_base_image(const ToySpec& spec, Rng& rng) {
  auto img = render::make_image(spec.width, spec.height);
  for (int c = 0; c < 3; ++c) {
    std::vector<std::array<double, 4>> waves;  // fx, fy, phase, amp
    for (int k = 0; k < spec.texture_waves; ++k)
      waves.push_back({rng.uniform(0.5, 3.5), rng.uniform(0.5, 3.5), rng.uniform(0.0, kTwoPi),
                       rng.uniform(0.5, 1.0)});
    double lo = 1e30, hi = -1e30;
    std::vector<double> vals(static_cast<std::size_t>(spec.width) * spec.height);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        double v = 0;
        for (const auto& w : waves)
          v += w[3] * std::sin(kTwoPi * (w[0] * x / spec.width + w[1] * y / spec.height) + w[2]);
        vals[static_cast<std::size_t>(y) * spec.width + x] = v;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    const double span = std::max(hi - lo, 1e-9);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x)
        img.pixel(x, y)[c] = static_cast<float>(
            0.1 + 0.8 * (vals[static_cast<std::size_t>(y) * spec.width + x] - lo) / span);
  }
  return img;
}

}  // namespace

ToySequence2D make_toy2d(const ToySpec& spec, std::uint64_t seed) {
  spec.validate();
  check_invertible(spec.warp_a, spec.width, spec.height);
  check_invertible(spec.warp_b, spec.width, spec.height);

  ToySequence2D toy;
  toy.spec = spec;
  toy.seed = seed;
  Rng rng(seed);
  toy.frames.push_back(make_base_image(spec, rng));

  for (int t = 0; t + 1 < spec.frame_count; ++t) {
    const ToyWarp& warp = t % 2 == 0 ? spec.warp_a : spec.warp_b;
    const auto& prev = toy.frames.back();
    auto next = render::make_image(spec.width, spec.height);
    std::vector<float> flow(static_cast<std::size_t>(spec.width) * spec.height * 2);
    for (int y = 0; y < spec.height; ++y)
      for (int x = 0; x < spec.width; ++x) {
        const auto src = invert_warp(warp, x, y, spec.width, spec.height);
        for (int c = 0; c < 3; ++c)
          next.pixel(x, y)[c] = sample_clamped(prev, src[0], src[1], c);
        const auto d = warp_displacement(warp, x, y, spec.width, spec.height);
        flow[(static_cast<std::size_t>(y) * spec.width + x) * 2 + 0] = static_cast<float>(d[0]);
        flow[(static_cast<std::size_t>(y) * spec.width + x) * 2 + 1] = static_cast<float>(d[1]);
      }
    toy.frames.push_back(std::move(next));
    toy.motion.push_back(std::move(flow));
  }
  return toy;
}

void save_toy2d(const ToySequence2D& toy, const std::string& path) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(path) / "frames");
  {
    std::ofstream meta(fs::path(path) / "meta.txt");
    meta << "format_version 1\ntype toy2d\nwidth " << toy.spec.width << "\nheight "
         << toy.spec.height << "\nframe_count " << toy.spec.frame_count << "\nseed " << toy.seed
         << "\n";
    if (!meta) throw std::runtime_error("toy2d: cannot write meta.txt under " + path);
  }
  for (int t = 0; t < toy.spec.frame_count; ++t)
    render::save_png(toy.frames[t],
                     (fs::path(path) / "frames" / ("f" + std::to_string(t) + ".png")).string());
  std::ofstream bin(fs::path(path) / "motion.bin", std::ios::binary);
  const std::uint32_t header[3] = {static_cast<std::uint32_t>(toy.motion.size()),
                                   static_cast<std::uint32_t>(toy.spec.width),
                                   static_cast<std::uint32_t>(toy.spec.height)};
  bin.write(reinterpret_cast<const char*>(header), sizeof(header));
  for (const auto& flow : toy.motion)
    bin.write(reinterpret_cast<const char*>(flow.data()),
              static_cast<std::streamsize>(flow.size() * sizeof(float)));
  if (!bin) throw std::runtime_error("toy2d: cannot write motion.bin under " + path);
}

ToySequence2D load_toy2d(const std::string& path) {
  namespace fs = std::filesystem;
  ToySequence2D toy;
  {
    std::ifstream meta(fs::path(path) / "meta.txt");
    if (!meta) throw std::runtime_error("toy2d: missing meta.txt under " + path);
    std::string key;
    while (meta >> key) {
      if (key == "format_version") {
        int v;
        meta >> v;
        if (v != 1) throw std::runtime_error("toy2d: unsupported format_version in " + path);
      } else if (key == "width")
        meta >> toy.spec.width;
      else if (key == "height")
        meta >> toy.spec.height;
      else if (key == "frame_count")
        meta >> toy.spec.frame_count;
      else if (key == "seed")
        meta >> toy.seed;
      else {
        std::string rest;
        std::getline(meta, rest);
      }
    }
  }
  toy.spec.validate();
  for (int t = 0; t < toy.spec.frame_count; ++t) {
    auto img = render::load_png(
        (fs::path(path) / "frames" / ("f" + std::to_string(t) + ".png")).string());
    if (img.width != toy.spec.width || img.height != toy.spec.height)
      throw std::runtime_error("toy2d: frame " + std::to_string(t) + " has wrong size");
    toy.frames.push_back(std::move(img));
  }
  std::ifstream bin(fs::path(path) / "motion.bin", std::ios::binary);
  if (!bin) throw std::runtime_error("toy2d: missing motion.bin under " + path);
  std::uint32_t header[3];
  bin.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!bin || header[0] != static_cast<std::uint32_t>(toy.spec.frame_count - 1) ||
      header[1] != static_cast<std::uint32_t>(toy.spec.width) ||
      header[2] != static_cast<std::uint32_t>(toy.spec.height))
    throw std::runtime_error("toy2d: motion.bin header mismatch in " + path);
  for (std::uint32_t t = 0; t < header[0]; ++t) {
    std::vector<float> flow(static_cast<std::size_t>(toy.spec.width) * toy.spec.height * 2);
    bin.read(reinterpret_cast<char*>(flow.data()),
             static_cast<std::streamsize>(flow.size() * sizeof(float)));
    if (!bin) throw std::runtime_error("toy2d: truncated motion.bin in " + path);
    toy.motion.push_back(std::move(flow));
  }
  return toy;
}

}  // namespace pref::scenes
