#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "ncouple/mat.hpp"

namespace ncouple {

enum class ImageFormat : std::uint8_t { pgm = 0 };

struct HeatmapSpec {
  std::size_t zoom_begin = 0;
  std::size_t zoom_end = 0;  // exclusive; 0 means the full matrix
  bool row_normalize = false;
  ImageFormat format = ImageFormat::pgm;
};

// 8-bit grayscale of |C| over the zoom window (rows and columns), row 0 at
// the top. Each row is divided by its maximum when row_normalize is set,
// otherwise the window is divided by its global maximum. Zero rows stay black.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // row-major
};

GrayImage render_heatmap(const Mat& c, const HeatmapSpec& spec);
std::vector<std::uint8_t> encode_pgm(const GrayImage& image);
void export_heatmap(const Mat& c, const HeatmapSpec& spec, const std::filesystem::path& path);

}  // namespace ncouple
