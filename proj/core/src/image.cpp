#include "pref/image.hpp"

#include <cmath>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace pref::render {

Image make_image(int width, int height) {
  if (width < 1 || height < 1) throw std::invalid_argument("make_image: empty size");
  Image img;
  img.width = width;
  img.height = height;
  img.rgb.assign(static_cast<std::size_t>(width) * height * 3, 0.0f);
  return img;
}

void save_png(const Image& img, const std::string& path) {
  if (img.empty()) throw std::invalid_argument("save_png: empty image");
  cv::Mat mat(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const float* p = img.pixel(x, y);
      auto& bgr = mat.at<cv::Vec3b>(y, x);
      for (int c = 0; c < 3; ++c) {
        const float v = std::min(std::max(p[c], 0.0f), 1.0f);
        bgr[2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
    }
  if (!cv::imwrite(path, mat)) throw std::runtime_error("save_png: cannot write " + path);
}

Image load_png(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_COLOR);
  if (mat.empty()) throw std::runtime_error("load_png: cannot read " + path);
  Image img = make_image(mat.cols, mat.rows);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto& bgr = mat.at<cv::Vec3b>(y, x);
      float* p = img.pixel(x, y);
      for (int c = 0; c < 3; ++c) p[c] = static_cast<float>(bgr[2 - c]) / 255.0f;
    }
  return img;
}

double image_mse(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("image_mse: size mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.rgb.size());
}

double mse_to_psnr(double mse) { return -10.0 * std::log10(std::max(mse, 1e-12)); }

}  // namespace pref::render
