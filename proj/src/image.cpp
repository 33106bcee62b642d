#include "risekit/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "risekit/error.hpp"

namespace risekit {

namespace {

void CheckDims(int height, int width, const char* what) {
  if (height <= 0 || width <= 0) {
    Fail(ErrorKind::kInvalidDimension,
         std::string(what) + ": dimensions must be positive, got " +
             std::to_string(height) + "x" + std::to_string(width));
  }
}

// Source coordinate and blend weight along one axis for center-aligned
// sampling.
struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> MakeTaps(int src, int dst) {
  std::vector<Tap> taps(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    const int hi = std::min(lo + 1, src - 1);
    taps[i] = {lo, hi, s - lo};
  }
  return taps;
}

// v0 + t * (v1 - v0) stays inside [min(v0,v1), max(v0,v1)] and is exact when
// v0 == v1.
inline double Lerp(double v0, double v1, double t) { return v0 + t * (v1 - v0); }

}  // namespace

Image::Image(int height, int width) : Image(height, width, 0.0f) {}

Image::Image(int height, int width, float fill)
    : height_(height), width_(width) {
  CheckDims(height, width, "Image");
  if (!(fill >= 0.0f && fill <= 1.0f)) {
    Fail(ErrorKind::kInvalidArgument, "Image: fill value outside [0,1]");
  }
  data_.assign(num_pixels() * kChannels, fill);
}

Image::Image(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  CheckDims(height, width, "Image");
  if (data_.size() != num_pixels() * kChannels) {
    Fail(ErrorKind::kInvalidDimension,
         "Image: expected " + std::to_string(num_pixels() * kChannels) +
             " values, got " + std::to_string(data_.size()));
  }
  for (float v : data_) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      Fail(ErrorKind::kInvalidArgument, "Image: value outside [0,1]");
    }
  }
}

template <class Tag>
Plane<Tag>::Plane(int height, int width, float fill)
    : height_(height), width_(width) {
  CheckDims(height, width, "Plane");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

template <class Tag>
Plane<Tag>::Plane(int height, int width, std::vector<float> data)
    : height_(height), width_(width), data_(std::move(data)) {
  CheckDims(height, width, "Plane");
  if (data_.size() != static_cast<std::size_t>(height) * width) {
    Fail(ErrorKind::kInvalidDimension,
         "Plane: expected " + std::to_string(height * width) +
             " values, got " + std::to_string(data_.size()));
  }
}

template class Plane<MaskTag>;
template class Plane<SaliencyTag>;

Mask BilinearUpsample(const Mask& mask, int target_h, int target_w) {
  if (mask.empty()) {
    Fail(ErrorKind::kInvalidDimension, "BilinearUpsample: empty source");
  }
  CheckDims(target_h, target_w, "BilinearUpsample target");
  if (target_h < mask.height() || target_w < mask.width()) {
    Fail(ErrorKind::kInvalidDimension,
         "BilinearUpsample: target smaller than source");
  }
  const auto ytaps = MakeTaps(mask.height(), target_h);
  const auto xtaps = MakeTaps(mask.width(), target_w);
  Mask out(target_h, target_w);
  for (int y = 0; y < target_h; ++y) {
    const Tap& ty = ytaps[y];
    for (int x = 0; x < target_w; ++x) {
      const Tap& tx = xtaps[x];
      const double top = Lerp(mask.at(ty.lo, tx.lo), mask.at(ty.lo, tx.hi), tx.frac);
      const double bot = Lerp(mask.at(ty.hi, tx.lo), mask.at(ty.hi, tx.hi), tx.frac);
      out.at(y, x) = static_cast<float>(Lerp(top, bot, ty.frac));
    }
  }
  return out;
}

Image ResizeBilinear(const Image& image, int target_h, int target_w) {
  if (image.empty()) {
    Fail(ErrorKind::kInvalidDimension, "ResizeBilinear: empty source");
  }
  CheckDims(target_h, target_w, "ResizeBilinear target");
  if (target_h == image.height() && target_w == image.width()) return image;
  const auto ytaps = MakeTaps(image.height(), target_h);
  const auto xtaps = MakeTaps(image.width(), target_w);
  Image out(target_h, target_w);
  auto dst = out.mutable_data();
  std::size_t k = 0;
  for (int y = 0; y < target_h; ++y) {
    const Tap& ty = ytaps[y];
    for (int x = 0; x < target_w; ++x) {
      const Tap& tx = xtaps[x];
      for (int c = 0; c < Image::kChannels; ++c) {
        const double top = Lerp(image.at(ty.lo, tx.lo, c), image.at(ty.lo, tx.hi, c), tx.frac);
        const double bot = Lerp(image.at(ty.hi, tx.lo, c), image.at(ty.hi, tx.hi, c), tx.frac);
        dst[k++] = static_cast<float>(Lerp(top, bot, ty.frac));
      }
    }
  }
  return out;
}

std::vector<double> GaussianKernel1d(int kernel_size, double sigma) {
  if (kernel_size < 1 || kernel_size % 2 == 0) {
    Fail(ErrorKind::kInvalidArgument,
         "GaussianKernel1d: kernel size must be odd and >= 1, got " +
             std::to_string(kernel_size));
  }
  if (!(sigma > 0.0)) {
    Fail(ErrorKind::kInvalidArgument, "GaussianKernel1d: sigma must be > 0");
  }
  const int radius = kernel_size / 2;
  std::vector<double> k(kernel_size);
  double sum = 0.0;
  for (int i = 0; i < kernel_size; ++i) {
    const double d = i - radius;
    k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image GaussianBlur(const Image& image, int kernel_size, double sigma) {
  const auto kernel = GaussianKernel1d(kernel_size, sigma);
  if (kernel_size == 1) return image;
  const int h = image.height();
  const int w = image.width();
  const int radius = kernel_size / 2;
  constexpr int C = Image::kChannels;
  auto src = image.data();

  // Horizontal pass into a double buffer, then vertical pass.
  std::vector<double> tmp(src.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          acc += kernel[i + radius] * src[(static_cast<std::size_t>(y) * w + xx) * C + c];
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * C + c] = acc;
      }
    }
  }
  Image out(h, w);
  auto dst = out.mutable_data();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * tmp[(static_cast<std::size_t>(yy) * w + x) * C + c];
        }
        dst[(static_cast<std::size_t>(y) * w + x) * C + c] =
            static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

void ApplyMaskInto(const Image& image, const Mask& mask, Image& out) {
  if (mask.height() != image.height() || mask.width() != image.width()) {
    Fail(ErrorKind::kInvalidDimension,
         "ApplyMask: mask " + std::to_string(mask.height()) + "x" +
             std::to_string(mask.width()) + " does not match image " +
             std::to_string(image.height()) + "x" +
             std::to_string(image.width()));
  }
  if (out.height() != image.height() || out.width() != image.width()) {
    out = Image(image.height(), image.width());
  }
  auto src = image.data();
  auto dst = out.mutable_data();
  auto m = mask.data();
  const std::size_t n = image.num_pixels();
  for (std::size_t p = 0; p < n; ++p) {
    const float mv = m[p];
    dst[3 * p] = src[3 * p] * mv;
    dst[3 * p + 1] = src[3 * p + 1] * mv;
    dst[3 * p + 2] = src[3 * p + 2] * mv;
  }
}

Image ApplyMask(const Image& image, const Mask& mask) {
  Image out;
  ApplyMaskInto(image, mask, out);
  return out;
}

Rgb HeatRamp(float t) {
  t = std::clamp(t, 0.0f, 1.0f);
  if (t < 0.5f) {
    return {0.0f, 2.0f * t, 1.0f - 2.0f * t};
  }
  return {2.0f * t - 1.0f, 2.0f - 2.0f * t, 0.0f};
}

Image RenderHeatmap(const SaliencyMap& saliency, const Image& base,
                    float alpha) {
  if (saliency.height() != base.height() || saliency.width() != base.width()) {
    Fail(ErrorKind::kInvalidDimension,
         "RenderHeatmap: saliency and base image sizes differ");
  }
  if (!(alpha >= 0.0f && alpha <= 1.0f)) {
    Fail(ErrorKind::kInvalidArgument, "RenderHeatmap: alpha outside [0,1]");
  }
  const auto [lo_it, hi_it] =
      std::minmax_element(saliency.data().begin(), saliency.data().end());
  const float lo = *lo_it;
  const float range = *hi_it - lo;

  Image out(base.height(), base.width());
  auto src = base.data();
  auto dst = out.mutable_data();
  for (std::size_t p = 0; p < saliency.size(); ++p) {
    const float t = range > 0.0f ? (saliency[p] - lo) / range : 0.5f;
    const Rgb color = HeatRamp(t);
    for (int c = 0; c < 3; ++c) {
      const float v = (1.0f - alpha) * src[3 * p + c] + alpha * color[c];
      dst[3 * p + c] = std::clamp(v, 0.0f, 1.0f);
    }
  }
  return out;
}

}  // namespace risekit
