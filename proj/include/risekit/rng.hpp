#pragma once

#include <array>
#include <cstdint>

namespace risekit {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). A stream is
// identified by (seed, stream id); every mask, trial or baseline draws from
// its own stream, so results never depend on evaluation order or on how work
// is split across threads.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t seed, std::uint64_t stream);

  // Derives an independent generator for sub-stream `index`.
  Philox Split(std::uint64_t index) const;

  std::uint64_t NextU64();
  // Uniform double in [0, 1) with 53 random bits.
  double NextDouble();
  // Uniform integer in [0, bound); bound must be > 0. Rejection-sampled, so
  // unbiased.
  std::uint64_t NextBelow(std::uint64_t bound);
  bool NextBernoulli(double p) { return NextDouble() < p; }

  // UniformRandomBitGenerator interface.
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()() { return NextU64(); }

  // One raw Philox4x32-10 block; exposed for known-answer tests.
  static std::array<std::uint32_t, 4> Block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key);

 private:
  void Refill();

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace risekit
