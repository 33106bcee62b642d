#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "risekit/image.hpp"
#include "risekit/rng.hpp"

namespace risekit {

// Parameters of the random mask distribution.
//
// Each mask is an i.i.d. Bernoulli(prob_on) grid of grid_h x grid_w cells,
// bilinearly upsampled to (grid_h + 1) * cell_h x (grid_w + 1) * cell_w with
// cell = floor(image / grid), then cropped to image_h x image_w at an offset
// drawn uniformly from [0, offset_range_h()) x [0, offset_range_w()).
struct MaskConfig {
  int grid_h = 7;
  int grid_w = 7;
  double prob_on = 0.5;
  int num_masks = 4000;
  int image_h = 224;
  int image_w = 224;
  std::uint64_t seed = 0;
  // When false the grid is upsampled straight to image size with no crop.
  // Only the enumeration oracle and its comparisons use this.
  bool random_shift = true;
  // Masks materialized at a time by streaming consumers.
  int chunk_size = 256;

  int cell_h() const { return image_h / grid_h; }
  int cell_w() const { return image_w / grid_w; }
  int upsampled_h() const { return random_shift ? (grid_h + 1) * cell_h() : image_h; }
  int upsampled_w() const { return random_shift ? (grid_w + 1) * cell_w() : image_w; }
  // Number of admissible crop offsets per axis. This is the cell size when
  // the image is a multiple of the grid; otherwise it shrinks so the crop
  // stays inside the upsampled mask.
  int offset_range_h() const { return std::min(cell_h(), upsampled_h() - image_h + 1); }
  int offset_range_w() const { return std::min(cell_w(), upsampled_w() - image_w + 1); }

  // Throws invalid-config on violated ranges.
  void Validate() const;

  bool operator==(const MaskConfig&) const = default;
};

// Random draws behind one mask; useful for inspecting the generator.
struct MaskDraw {
  std::vector<std::uint8_t> grid;  // grid_h * grid_w cells, 0 or 1
  int offset_y = 0;
  int offset_x = 0;
};

// Produces mask `i` of the distribution on demand. Mask i depends only on
// (config, i): every mask has its own RNG sub-stream.
class MaskGenerator {
 public:
  explicit MaskGenerator(MaskConfig config);

  const MaskConfig& config() const { return config_; }
  int size() const { return config_.num_masks; }

  MaskDraw Draw(std::size_t index) const;
  Mask Generate(std::size_t index) const;
  // Reuses `out` when it already has the right shape.
  void GenerateInto(std::size_t index, Mask& out) const;

 private:
  struct Tap {
    int lo;
    int hi;
    double frac;
  };

  MaskConfig config_;
  Philox root_;
  // Interpolation taps over the full upsampled extent.
  std::vector<Tap> ytaps_;
  std::vector<Tap> xtaps_;
};

struct MaskBatch {
  MaskConfig config;
  std::vector<Mask> masks;
  // E[M(lambda)] for every pixel.
  double per_pixel_expectation = 0.5;
};

// Materializes the whole batch. The result is identical for any `workers`.
MaskBatch GenerateMasks(const MaskConfig& config, int workers = 1);

struct MaskStatistics {
  Mask mean_map;
  double global_mean = 0.0;
  float min = 0.0f;
  float max = 0.0f;
  std::size_t count = 0;
};

MaskStatistics ComputeMaskStatistics(const MaskBatch& batch);
// Streams masks from the generator without keeping them.
MaskStatistics ComputeMaskStatistics(const MaskGenerator& generator);

// FNV-1a 64 over the little-endian bytes of all mask values, in order.
std::uint64_t HashMasks(const std::vector<Mask>& masks);

// Mask cache: "RMSK", u32 count, u32 H, u32 W, u64 seed, then count float32
// planes (little-endian, row-major).
struct MaskCache {
  std::uint64_t seed = 0;
  std::vector<Mask> masks;
};

void WriteRmsk(const MaskBatch& batch, const std::filesystem::path& path);
// Streams masks straight from the generator; returns the hash of what was
// written.
std::uint64_t WriteRmsk(const MaskGenerator& generator,
                        const std::filesystem::path& path);
MaskCache ReadRmsk(const std::filesystem::path& path);

}  // namespace risekit
