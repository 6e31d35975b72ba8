#include "ncouple/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ncouple/binio.hpp"
#include "ncouple/error.hpp"

namespace ncouple {

GrayImage render_heatmap(const Mat& c, const HeatmapSpec& spec) {
  if (!c.is_square()) throw ShapeError("heatmap: couplings must be square, got " + c.shape_str());
  const std::size_t n = c.rows();
  const std::size_t begin = spec.zoom_begin;
  const std::size_t end = spec.zoom_end == 0 ? n : spec.zoom_end;
  if (begin >= end || end > n) {
    throw ConfigError("heatmap: zoom [" + std::to_string(begin) + ", " + std::to_string(end) + ") outside [0, " +
                      std::to_string(n) + ")");
  }
  const std::size_t size = end - begin;
  GrayImage img{size, size, std::vector<std::uint8_t>(size * size, 0)};

  double global_max = 0.0;
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = begin; j < end; ++j) global_max = std::max(global_max, std::fabs(c(i, j)));

  for (std::size_t i = begin; i < end; ++i) {
    double denom = global_max;
    if (spec.row_normalize) {
      denom = 0.0;
      for (std::size_t j = begin; j < end; ++j) denom = std::max(denom, std::fabs(c(i, j)));
    }
    if (denom == 0.0) continue;
    for (std::size_t j = begin; j < end; ++j) {
      const double v = std::fabs(c(i, j)) / denom;
      img.pixels[(i - begin) * size + (j - begin)] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& image) {
  const std::string header = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

void export_heatmap(const Mat& c, const HeatmapSpec& spec, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(render_heatmap(c, spec)));
}

}  // namespace ncouple
