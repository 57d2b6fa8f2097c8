#include "horizon/image.hpp"

#include <algorithm>
#include <cmath>
#include <opencv2/imgcodecs.hpp>

#include "horizon/error.hpp"

namespace horizon {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Image to_grayscale(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.width(), image.height(), 1);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (image.channels() >= 3) {
        out.at(x, y) = 0.299f * image.at(x, y, 0) + 0.587f * image.at(x, y, 1) +
                       0.114f * image.at(x, y, 2);
      } else {
        out.at(x, y) = image.at(x, y, 0);
      }
    }
  }
  return out;
}

Image crop(const Image& image, int x0, int y0, int width, int height, bool mirrored) {
  if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 || x0 + width > image.width() ||
      y0 + height > image.height()) {
    throw Error(ErrorCode::kInvalidArgument, "crop outside image");
  }
  Image out(width, height, image.channels());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int sx = mirrored ? x0 + width - 1 - x : x0 + x;
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = image.at(sx, y0 + y, c);
    }
  }
  return out;
}

Image crop(const Image& image, const Window& window) {
  const auto x0 = static_cast<int>(std::lround(window.x0));
  const auto y0 = static_cast<int>(std::lround(window.y0));
  const auto w = static_cast<int>(std::lround(window.width));
  const auto h = static_cast<int>(std::lround(window.height));
  if (std::abs(x0 - window.x0) > 1e-9 || std::abs(y0 - window.y0) > 1e-9 ||
      std::abs(w - window.width) > 1e-9 || std::abs(h - window.height) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "window is not aligned to the pixel grid");
  }
  return crop(image, x0, y0, w, h, window.mirrored);
}

Image resize_area(const Image& image, int width, int height) {
  Image out(width, height, image.channels());
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  std::vector<double> acc(image.channels());
  for (int oy = 0; oy < height; ++oy) {
    const double ya = oy * sy, yb = (oy + 1) * sy;
    for (int ox = 0; ox < width; ++ox) {
      const double xa = ox * sx, xb = (ox + 1) * sx;
      std::fill(acc.begin(), acc.end(), 0.0);
      double area = 0.0;
      for (int y = static_cast<int>(ya); y < std::min<double>(yb, image.height()); ++y) {
        const double wy = std::min<double>(yb, y + 1) - std::max<double>(ya, y);
        if (wy <= 0.0) continue;
        for (int x = static_cast<int>(xa); x < std::min<double>(xb, image.width()); ++x) {
          const double wx = std::min<double>(xb, x + 1) - std::max<double>(xa, x);
          if (wx <= 0.0) continue;
          for (int c = 0; c < image.channels(); ++c) acc[c] += wx * wy * image.at(x, y, c);
          area += wx * wy;
        }
      }
      for (int c = 0; c < image.channels(); ++c) {
        out.at(ox, oy, c) = static_cast<float>(acc[c] / area);
      }
    }
  }
  return out;
}

Window center_square(const ImageFrame& frame) {
  const int side = std::min(frame.width, frame.height);
  return Window::square((frame.width - side) / 2, (frame.height - side) / 2, side);
}

Image read_image(const std::string& path) {
  cv::Mat mat = cv::imread(path, cv::IMREAD_COLOR);
  if (mat.empty()) throw Error(ErrorCode::kFormat, "cannot read image '" + path + "'");
  Image out(mat.cols, mat.rows, 3);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < mat.cols; ++x) {
      // OpenCV stores BGR
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = row[x][2 - c] / 255.0f;
    }
  }
  return out;
}

void write_image(const std::string& path, const Image& image) {
  const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat mat(image.height(), image.width(), type);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      if (image.channels() == 1) {
        row[x] = static_cast<unsigned char>(std::lround(std::clamp(image.at(x, y), 0.0f, 1.0f) * 255.0f));
      } else {
        for (int c = 0; c < 3; ++c) {
          const float v = image.at(x, y, std::min(c, image.channels() - 1));
          row[3 * x + (2 - c)] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        }
      }
    }
  }
  if (!cv::imwrite(path, mat)) throw Error(ErrorCode::kFormat, "cannot write image '" + path + "'");
}

}  // namespace horizon
