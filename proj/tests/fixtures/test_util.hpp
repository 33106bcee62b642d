#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "risekit/image.hpp"
#include "risekit/scorer.hpp"
#include "risekit/synthetic.hpp"

namespace risekit::testing {

inline Image RandomImage(int h, int w, std::uint32_t seed, float lo = 0.0f, float hi = 1.0f) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> data(static_cast<std::size_t>(h) * w * 3);
  for (auto& v : data) v = u(rng);
  return Image(h, w, std::move(data));
}

// Dim random background with a bright rectangle: the region-detector trial
// image.
inline Image RegionImage(int h, int w, const Region& r, std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = r.Contains(y, x) ? 0.7f + 0.3f * u(rng) : 0.3f * u(rng);
        data[(static_cast<std::size_t>(y) * w + x) * 3 + c] = v;
      }
    }
  }
  return Image(h, w, std::move(data));
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("risekit_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Mean intensity over all pixels and channels.
class MeanIntensityScorer final : public Scorer {
 public:
  std::vector<double> ScoreBatch(std::span<const Image> images, const Target&) override {
    std::vector<double> out;
    for (const auto& im : images) {
      double s = 0.0;
      for (float v : im.data()) s += v;
      out.push_back(s / static_cast<double>(im.data().size()));
    }
    ++calls;
    return out;
  }
  std::string name() const override { return "mean"; }
  int calls = 0;
};

// Returns one score per call from a fixed table of behaviours.
class ScriptedScorer final : public Scorer {
 public:
  enum class Mode { kOk, kThrow, kWrongCount, kNan };
  explicit ScriptedScorer(Mode mode, int fail_on_call = 0, int max_batch = 32)
      : mode_(mode), fail_on_call_(fail_on_call), max_batch_(max_batch) {}
  std::vector<double> ScoreBatch(std::span<const Image> images, const Target&) override {
    const int call = calls++;
    std::vector<double> out(images.size(), 0.5);
    if (call < fail_on_call_ || mode_ == Mode::kOk) return out;
    switch (mode_) {
      case Mode::kThrow:
        throw std::runtime_error("scripted failure");
      case Mode::kWrongCount:
        out.pop_back();
        return out;
      case Mode::kNan:
        out[0] = std::nan("");
        return out;
      case Mode::kOk:
        break;
    }
    return out;
  }
  int max_batch() const override { return max_batch_; }
  std::string name() const override { return "scripted"; }
  int calls = 0;

 private:
  Mode mode_;
  int fail_on_call_;
  int max_batch_;
};

inline std::string ReadFileBytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace risekit::testing
