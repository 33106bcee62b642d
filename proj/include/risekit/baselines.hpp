#pragma once

#include <cstdint>
#include <vector>

#include "risekit/image.hpp"
#include "risekit/scorer.hpp"

namespace risekit {

struct SlidingWindowConfig {
  int window = 64;
  int stride = 8;
  float fill_value = 0.0f;

  void Validate() const;
};

// Window origins along one axis: 0, stride, 2*stride, ... plus a final
// origin at size - window when the grid does not land there exactly.
std::vector<int> WindowOrigins(int size, int window, int stride);

// Occlusion baseline. Each window position is filled with fill_value on a
// fresh copy of the image and scored; the drop f(I) - f(I_occluded) is added
// to every covered pixel and each pixel is divided by its coverage count.
SaliencyMap SlidingWindowSaliency(const Image& image, Scorer& scorer, const Target& target,
                                  const SlidingWindowConfig& config, int batch_size = 32);

// I.i.d. uniform [0,1) values; the control condition for metric checks.
SaliencyMap RandomSaliency(int height, int width, std::uint64_t seed);

}  // namespace risekit
