#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "horizon/geometry.hpp"

namespace horizon {

/// Interleaved float image, row-major, values nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  ImageFrame frame() const { return {width_, height_}; }

  float& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  float at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Luma (BT.601 weights) for 3-channel images, copy for 1-channel.
Image to_grayscale(const Image& image);

/// Integer pixel crop; throws InvalidArgument if out of bounds.
Image crop(const Image& image, int x0, int y0, int width, int height, bool mirrored = false);

/// Crop for a window whose geometry lies on the pixel grid.
Image crop(const Image& image, const Window& window);

/// Area-average downsampling to exactly width x height.
Image resize_area(const Image& image, int width, int height);

/// Largest centered square window.
Window center_square(const ImageFrame& frame);

/// Reader/writer selected by file extension (png, jpg, bmp, ppm, ...).
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& image);

}  // namespace horizon
