#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace risekit {

// H x W x 3 float image with values in [0,1], row-major, channel-interleaved.
class Image {
 public:
  static constexpr int kChannels = 3;

  Image() = default;
  // Black image.
  Image(int height, int width);
  Image(int height, int width, float fill);
  // Validates length (height * width * 3) and the [0,1] value range.
  Image(int height, int width, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t num_pixels() const {
    return static_cast<std::size_t>(height_) * width_;
  }
  bool empty() const { return data_.empty(); }

  float at(int y, int x, int c) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
  }
  std::span<const float> data() const { return data_; }
  // Writers must keep values inside [0,1].
  std::span<float> mutable_data() { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

// Single-channel H x W float plane. The tag keeps masks and saliency maps
// from being mixed up.
template <class Tag>
class Plane {
 public:
  Plane() = default;
  Plane(int height, int width, float fill = 0.0f);
  Plane(int height, int width, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float at(int y, int x) const {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  float& at(int y, int x) {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }

  bool operator==(const Plane&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

struct MaskTag {};
struct SaliencyTag {};

// Occlusion multiplier, values in [0,1].
using Mask = Plane<MaskTag>;
// Per-pixel importance.
using SaliencyMap = Plane<SaliencyTag>;

extern template class Plane<MaskTag>;
extern template class Plane<SaliencyTag>;

// Bilinear upsampling with center-aligned sampling (align-corners = false).
// Output pixel (y, x) samples the source at ((y + 0.5) * h / target_h - 0.5,
// (x + 0.5) * w / target_w - 0.5), clamped to the source extent.
Mask BilinearUpsample(const Mask& mask, int target_h, int target_w);

// Same convention as BilinearUpsample but allows shrinking; used to bring
// decoded files to the configured scorer input size.
Image ResizeBilinear(const Image& image, int target_h, int target_w);

// Normalized 1-D Gaussian weights, length kernel_size.
std::vector<double> GaussianKernel1d(int kernel_size, double sigma);

// Separable Gaussian blur with clamp-to-edge borders.
Image GaussianBlur(const Image& image, int kernel_size, double sigma);

// out[y,x,c] = image[y,x,c] * mask[y,x]
Image ApplyMask(const Image& image, const Mask& mask);
// Allocation-free variant for probe loops; `out` is resized as needed.
void ApplyMaskInto(const Image& image, const Mask& mask, Image& out);

using Rgb = std::array<float, 3>;

// Blue -> green -> red ramp evaluated at t in [0,1].
Rgb HeatRamp(float t);

// Min-max normalizes `saliency`, colors it with HeatRamp and alpha-blends it
// over `base`. A constant map renders as the mid-ramp color.
Image RenderHeatmap(const SaliencyMap& saliency, const Image& base,
                    float alpha);

}  // namespace risekit
