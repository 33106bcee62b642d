#include "risekit/baselines.hpp"

#include <algorithm>

#include "risekit/error.hpp"
#include "risekit/rng.hpp"

namespace risekit {

void SlidingWindowConfig::Validate() const {
  if (window < 1) Fail(ErrorKind::kInvalidConfig, "sliding window must be >= 1");
  if (stride < 1 || stride > window) {
    Fail(ErrorKind::kInvalidConfig, "sliding window stride must be in [1, window]");
  }
  if (!(fill_value >= 0.0f && fill_value <= 1.0f)) {
    Fail(ErrorKind::kInvalidConfig, "sliding window fill must be in [0,1]");
  }
}

std::vector<int> WindowOrigins(int size, int window, int stride) {
  std::vector<int> origins;
  for (int o = 0; o + window <= size; o += stride) origins.push_back(o);
  if (origins.empty() || origins.back() != size - window) origins.push_back(size - window);
  return origins;
}

SaliencyMap SlidingWindowSaliency(const Image& image, Scorer& scorer, const Target& target,
                                  const SlidingWindowConfig& config, int batch_size) {
  config.Validate();
  const int h = image.height();
  const int w = image.width();
  if (config.window > std::min(h, w)) {
    Fail(ErrorKind::kInvalidConfig, "sliding window larger than the image");
  }
  const auto ys = WindowOrigins(h, config.window, config.stride);
  const auto xs = WindowOrigins(w, config.window, config.stride);
  const double base = ScoreChecked(scorer, std::span<const Image>(&image, 1), target, 0)[0];

  std::vector<double> sum(image.num_pixels(), 0.0);
  std::vector<int> coverage(image.num_pixels(), 0);
  struct Origin {
    int y, x;
  };
  std::vector<Origin> positions;
  for (int y : ys) {
    for (int x : xs) positions.push_back({y, x});
  }

  batch_size = std::max(1, batch_size);
  std::vector<Image> batch;
  for (std::size_t first = 0; first < positions.size(); first += batch_size) {
    const std::size_t count = std::min<std::size_t>(batch_size, positions.size() - first);
    batch.assign(count, image);
    for (std::size_t i = 0; i < count; ++i) {
      const Origin o = positions[first + i];
      auto dst = batch[i].mutable_data();
      for (int y = o.y; y < o.y + config.window; ++y) {
        for (int x = o.x; x < o.x + config.window; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          dst[3 * p] = dst[3 * p + 1] = dst[3 * p + 2] = config.fill_value;
        }
      }
    }
    const auto scores = ScoreChecked(scorer, batch, target, first);
    for (std::size_t i = 0; i < count; ++i) {
      const Origin o = positions[first + i];
      const double drop = base - scores[i];
      for (int y = o.y; y < o.y + config.window; ++y) {
        for (int x = o.x; x < o.x + config.window; ++x) {
          const std::size_t p = static_cast<std::size_t>(y) * w + x;
          sum[p] += drop;
          coverage[p] += 1;
        }
      }
    }
  }

  SaliencyMap out(h, w);
  for (std::size_t p = 0; p < sum.size(); ++p) {
    out[p] = coverage[p] > 0 ? static_cast<float>(sum[p] / coverage[p]) : 0.0f;
  }
  return out;
}

SaliencyMap RandomSaliency(int height, int width, std::uint64_t seed) {
  Philox rng(seed, 0x72616e64 /* "rand" */);
  SaliencyMap out(height, width);
  for (float& v : out.data()) v = static_cast<float>(rng.NextDouble());
  return out;
}

}  // namespace risekit
