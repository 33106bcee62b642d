#include "risekit/masking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <thread>

#include "risekit/binary_io.hpp"
#include "risekit/error.hpp"

namespace risekit {

namespace {

std::string DimString(int h, int w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

}  // namespace

void MaskConfig::Validate() const {
  auto bad = [](const std::string& msg) {
    Fail(ErrorKind::kInvalidConfig, "MaskConfig: " + msg);
  };
  if (image_h < 1 || image_w < 1) bad("image size must be positive, got " + DimString(image_h, image_w));
  if (grid_h < 1 || grid_h > image_h) bad("grid_h must be in [1, image_h]");
  if (grid_w < 1 || grid_w > image_w) bad("grid_w must be in [1, image_w]");
  if (!(prob_on > 0.0 && prob_on < 1.0)) bad("prob_on must be in (0, 1)");
  if (num_masks < 1) bad("num_masks must be >= 1");
  if (chunk_size < 1) bad("chunk_size must be >= 1");
  if (random_shift && (upsampled_h() < image_h || upsampled_w() < image_w)) {
    bad("grid " + DimString(grid_h, grid_w) + " leaves the upsampled mask " +
        DimString(upsampled_h(), upsampled_w()) + " smaller than the image " +
        DimString(image_h, image_w));
  }
}

MaskGenerator::MaskGenerator(MaskConfig config)
    : config_(config), root_(config.seed, 0x6d61736b /* "mask" */) {
  config_.Validate();
  auto make = [](int src, int dst) {
    std::vector<Tap> taps(dst);
    const double scale = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, src - 1.0);
      const int lo = static_cast<int>(std::floor(s));
      taps[i] = {lo, std::min(lo + 1, src - 1), s - lo};
    }
    return taps;
  };
  ytaps_ = make(config_.grid_h, config_.upsampled_h());
  xtaps_ = make(config_.grid_w, config_.upsampled_w());
}

MaskDraw MaskGenerator::Draw(std::size_t index) const {
  Philox rng = root_.Split(index);
  MaskDraw draw;
  const std::size_t cells = static_cast<std::size_t>(config_.grid_h) * config_.grid_w;
  draw.grid.resize(cells);
  for (auto& cell : draw.grid) cell = rng.NextBernoulli(config_.prob_on) ? 1 : 0;
  if (config_.random_shift) {
    draw.offset_y = static_cast<int>(rng.NextBelow(config_.offset_range_h()));
    draw.offset_x = static_cast<int>(rng.NextBelow(config_.offset_range_w()));
  }
  return draw;
}

void MaskGenerator::GenerateInto(std::size_t index, Mask& out) const {
  const MaskDraw draw = Draw(index);
  const int h = config_.image_h;
  const int w = config_.image_w;
  const int gw = config_.grid_w;
  if (out.height() != h || out.width() != w) out = Mask(h, w);
  auto cell = [&](int gy, int gx) -> double {
    return draw.grid[static_cast<std::size_t>(gy) * gw + gx];
  };
  // Same arithmetic as BilinearUpsample, evaluated only inside the crop.
  for (int y = 0; y < h; ++y) {
    const Tap& ty = ytaps_[y + draw.offset_y];
    for (int x = 0; x < w; ++x) {
      const Tap& tx = xtaps_[x + draw.offset_x];
      const double a = cell(ty.lo, tx.lo);
      const double b = cell(ty.lo, tx.hi);
      const double c = cell(ty.hi, tx.lo);
      const double d = cell(ty.hi, tx.hi);
      const double top = a + tx.frac * (b - a);
      const double bot = c + tx.frac * (d - c);
      out.at(y, x) = static_cast<float>(top + ty.frac * (bot - top));
    }
  }
}

Mask MaskGenerator::Generate(std::size_t index) const {
  Mask out;
  GenerateInto(index, out);
  return out;
}

MaskBatch GenerateMasks(const MaskConfig& config, int workers) {
  const MaskGenerator generator(config);
  MaskBatch batch;
  batch.config = config;
  batch.per_pixel_expectation = config.prob_on;
  batch.masks.resize(config.num_masks);
  const int n = config.num_masks;
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) generator.GenerateInto(i, batch.masks[i]);
    return batch;
  }
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < n; i += workers) generator.GenerateInto(i, batch.masks[i]);
      });
    }
  }
  return batch;
}

namespace {

class StatsAccumulator {
 public:
  void Add(const Mask& m) {
    if (sum_.empty()) {
      h_ = m.height();
      w_ = m.width();
      sum_.assign(m.size(), 0.0);
    }
    for (std::size_t p = 0; p < m.size(); ++p) {
      sum_[p] += m[p];
      min_ = std::min(min_, m[p]);
      max_ = std::max(max_, m[p]);
    }
    ++count_;
  }

  MaskStatistics Finish() const {
    if (count_ == 0) Fail(ErrorKind::kInvalidArgument, "mask statistics of an empty batch");
    MaskStatistics s;
    s.mean_map = Mask(h_, w_);
    double total = 0.0;
    for (std::size_t p = 0; p < sum_.size(); ++p) {
      const double mean = sum_[p] / count_;
      s.mean_map[p] = static_cast<float>(mean);
      total += mean;
    }
    s.global_mean = total / sum_.size();
    s.min = min_;
    s.max = max_;
    s.count = count_;
    return s;
  }

 private:
  int h_ = 0;
  int w_ = 0;
  std::vector<double> sum_;
  float min_ = std::numeric_limits<float>::infinity();
  float max_ = -std::numeric_limits<float>::infinity();
  std::size_t count_ = 0;
};

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

void FnvUpdate(std::uint64_t& h, std::span<const float> values) {
  for (float v : values) {
    const auto le = binio::ToLittle(v);
    const auto* bytes = reinterpret_cast<const unsigned char*>(&le);
    for (int i = 0; i < 4; ++i) {
      h ^= bytes[i];
      h *= kFnvPrime;
    }
  }
}

void WriteRmskHeader(std::ofstream& out, std::uint32_t count, int h, int w,
                     std::uint64_t seed) {
  out.write("RMSK", 4);
  binio::WriteLe<std::uint32_t>(out, count);
  binio::WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  binio::WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(w));
  binio::WriteLe<std::uint64_t>(out, seed);
}

std::ofstream OpenForWrite(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  return out;
}

void FinishWrite(std::ofstream& out, const std::filesystem::path& path) {
  if (!out.flush()) Fail(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

}  // namespace

MaskStatistics ComputeMaskStatistics(const MaskBatch& batch) {
  StatsAccumulator acc;
  for (const Mask& m : batch.masks) acc.Add(m);
  return acc.Finish();
}

MaskStatistics ComputeMaskStatistics(const MaskGenerator& generator) {
  StatsAccumulator acc;
  Mask m;
  for (int i = 0; i < generator.size(); ++i) {
    generator.GenerateInto(i, m);
    acc.Add(m);
  }
  return acc.Finish();
}

std::uint64_t HashMasks(const std::vector<Mask>& masks) {
  std::uint64_t h = kFnvOffset;
  for (const Mask& m : masks) FnvUpdate(h, m.data());
  return h;
}

void WriteRmsk(const MaskBatch& batch, const std::filesystem::path& path) {
  auto out = OpenForWrite(path);
  WriteRmskHeader(out, static_cast<std::uint32_t>(batch.masks.size()),
                  batch.config.image_h, batch.config.image_w, batch.config.seed);
  for (const Mask& m : batch.masks) binio::WriteFloatsLe(out, m.data());
  FinishWrite(out, path);
}

std::uint64_t WriteRmsk(const MaskGenerator& generator,
                        const std::filesystem::path& path) {
  const MaskConfig& cfg = generator.config();
  auto out = OpenForWrite(path);
  WriteRmskHeader(out, static_cast<std::uint32_t>(cfg.num_masks), cfg.image_h,
                  cfg.image_w, cfg.seed);
  std::uint64_t h = kFnvOffset;
  Mask m;
  for (int i = 0; i < cfg.num_masks; ++i) {
    generator.GenerateInto(i, m);
    binio::WriteFloatsLe(out, m.data());
    FnvUpdate(h, m.data());
  }
  FinishWrite(out, path);
  return h;
}

MaskCache ReadRmsk(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  const std::string ctx = "RMSK '" + path.string() + "'";
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "RMSK") {
    Fail(ErrorKind::kIo, ctx + ": bad magic");
  }
  const auto count = binio::ReadLe<std::uint32_t>(in, ctx);
  const auto h = binio::ReadLe<std::uint32_t>(in, ctx);
  const auto w = binio::ReadLe<std::uint32_t>(in, ctx);
  MaskCache cache;
  cache.seed = binio::ReadLe<std::uint64_t>(in, ctx);
  if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16)) {
    Fail(ErrorKind::kIo, ctx + ": implausible dimensions");
  }
  cache.masks.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Mask m(static_cast<int>(h), static_cast<int>(w));
    binio::ReadFloatsLe(in, m.data(), ctx);
    cache.masks.push_back(std::move(m));
  }
  return cache;
}

}  // namespace risekit
