#pragma once

#include <string>
#include <vector>

namespace pref::render {

// Row-major RGB, linear values in [0,1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  bool empty() const { return rgb.empty(); }
  float* pixel(int x, int y) { return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x); }
  const float* pixel(int x, int y) const {
    return rgb.data() + 3 * (static_cast<std::size_t>(y) * width + x);
  }
};

Image make_image(int width, int height);

// 8-bit PNG round trip; values are clamped to [0,1] and scaled on save.
void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

double image_mse(const Image& a, const Image& b);
double mse_to_psnr(double mse);

}  // namespace pref::render
