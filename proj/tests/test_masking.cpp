#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "fixtures/test_util.hpp"
#include "risekit/error.hpp"
#include "risekit/masking.hpp"
#include "risekit/rng.hpp"

namespace risekit {
namespace {

using Block = std::array<std::uint32_t, 4>;

TEST(Philox, KnownAnswerVectors) {
  EXPECT_EQ(Philox::Block({0, 0, 0, 0}, {0, 0}),
            (Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox::Block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                          {0xffffffff, 0xffffffff}),
            (Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox::Block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                          {0xa4093822, 0x299f31d0}),
            (Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  Philox a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 16; ++i) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
  EXPECT_NE(Philox(42, 1).Split(0).NextU64(), Philox(42, 1).Split(1).NextU64());
}

TEST(Philox, BoundedDrawsStayInRangeAndCoverIt) {
  Philox rng(7, 0);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = rng.NextBelow(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
    const double d = rng.NextDouble();
    ASSERT_GE(d, 0.0);
    ASSERT_LT(d, 1.0);
  }
  EXPECT_EQ(seen.size(), 7u);
}

MaskConfig SmallConfig() {
  MaskConfig c;
  c.grid_h = 3;
  c.grid_w = 4;
  c.image_h = 20;
  c.image_w = 26;
  c.num_masks = 40;
  c.seed = 11;
  return c;
}

TEST(MaskConfig, DerivedSizes) {
  MaskConfig c;
  EXPECT_EQ(c.cell_h(), 32);
  EXPECT_EQ(c.upsampled_h(), 256);
  EXPECT_EQ(c.offset_range_h(), 32);
  c = SmallConfig();
  EXPECT_EQ(c.cell_h(), 6);
  EXPECT_EQ(c.cell_w(), 6);
  EXPECT_EQ(c.upsampled_h(), 24);
  EXPECT_EQ(c.upsampled_w(), 30);
  EXPECT_EQ(c.offset_range_h(), 5);  // 20 = 3 * 6 + 2 leaves room for 5 offsets
  EXPECT_EQ(c.offset_range_w(), 5);
  c.random_shift = false;
  EXPECT_EQ(c.upsampled_h(), 20);
}

TEST(MaskConfig, ValidateRejectsBadValues) {
  auto expect_bad = [](auto mutate) {
    MaskConfig c = SmallConfig();
    mutate(c);
    try {
      c.Validate();
      ADD_FAILURE() << "accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidConfig);
    }
  };
  expect_bad([](MaskConfig& c) { c.prob_on = 0.0; });
  expect_bad([](MaskConfig& c) { c.prob_on = 1.5; });
  expect_bad([](MaskConfig& c) { c.num_masks = 0; });
  expect_bad([](MaskConfig& c) { c.grid_h = 0; });
  expect_bad([](MaskConfig& c) { c.grid_w = 27; });
  expect_bad([](MaskConfig& c) { c.chunk_size = 0; });
  expect_bad([](MaskConfig& c) {  // 20 = 8 * 2 + 4: upsampled 18 rows
    c.grid_h = 8;
  });
  EXPECT_NO_THROW(SmallConfig().Validate());
}

TEST(MaskGenerator, MaskIsCropOfUpsampledGrid) {
  const MaskConfig c = SmallConfig();
  const MaskGenerator gen(c);
  for (int i = 0; i < c.num_masks; ++i) {
    const MaskDraw draw = gen.Draw(i);
    ASSERT_GE(draw.offset_y, 0);
    ASSERT_LT(draw.offset_y, c.offset_range_h());
    ASSERT_GE(draw.offset_x, 0);
    ASSERT_LT(draw.offset_x, c.offset_range_w());
    Mask grid(c.grid_h, c.grid_w);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = draw.grid[k];
    const Mask full = BilinearUpsample(grid, c.upsampled_h(), c.upsampled_w());
    const Mask m = gen.Generate(i);
    ASSERT_EQ(m.height(), c.image_h);
    ASSERT_EQ(m.width(), c.image_w);
    for (int y = 0; y < c.image_h; ++y) {
      for (int x = 0; x < c.image_w; ++x) {
        ASSERT_FLOAT_EQ(m.at(y, x), full.at(y + draw.offset_y, x + draw.offset_x))
            << "mask " << i << " at " << y << "," << x;
      }
    }
  }
}

TEST(MaskGenerator, EveryOffsetIsReachable) {
  MaskConfig c;
  c.grid_h = c.grid_w = 4;
  c.image_h = c.image_w = 16;
  c.num_masks = 400;
  const MaskGenerator gen(c);
  std::set<int> ys, xs;
  for (int i = 0; i < c.num_masks; ++i) {
    const auto d = gen.Draw(i);
    ys.insert(d.offset_y);
    xs.insert(d.offset_x);
  }
  EXPECT_EQ(ys, (std::set<int>{0, 1, 2, 3}));
  EXPECT_EQ(xs, (std::set<int>{0, 1, 2, 3}));
}

TEST(MaskGenerator, NoShiftUpsamplesStraightToImageSize) {
  MaskConfig c = SmallConfig();
  c.random_shift = false;
  const MaskGenerator gen(c);
  for (int i = 0; i < 5; ++i) {
    const MaskDraw draw = gen.Draw(i);
    EXPECT_EQ(draw.offset_y, 0);
    Mask grid(c.grid_h, c.grid_w);
    for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = draw.grid[k];
    EXPECT_EQ(gen.Generate(i), BilinearUpsample(grid, c.image_h, c.image_w));
  }
}

TEST(MaskGenerator, DeterministicAndOrderIndependent) {
  const MaskConfig c = SmallConfig();
  const MaskBatch serial = GenerateMasks(c, 1);
  const MaskBatch threaded = GenerateMasks(c, 3);
  ASSERT_EQ(serial.masks.size(), 40u);
  EXPECT_EQ(serial.masks, threaded.masks);
  const MaskGenerator gen(c);
  EXPECT_EQ(gen.Generate(17), serial.masks[17]);
  MaskConfig other = c;
  other.seed = 12;
  EXPECT_NE(GenerateMasks(other).masks, serial.masks);
  for (const auto& m : serial.masks) {
    for (float v : m.data()) {
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
    }
  }
}

TEST(MaskGenerator, GridBitsFollowProbability) {
  MaskConfig c = SmallConfig();
  c.prob_on = 0.2;
  c.num_masks = 3000;
  const MaskGenerator gen(c);
  double ones = 0.0;
  for (int i = 0; i < c.num_masks; ++i) {
    for (auto b : gen.Draw(i).grid) ones += b;
  }
  const double n = 3000.0 * 12.0;
  const double se = std::sqrt(0.2 * 0.8 / n);
  EXPECT_NEAR(ones / n, 0.2, 4 * se);
}

TEST(MaskStatistics, StreamingMatchesMaterialized) {
  const MaskConfig c = SmallConfig();
  const MaskStatistics a = ComputeMaskStatistics(GenerateMasks(c));
  const MaskStatistics b = ComputeMaskStatistics(MaskGenerator(c));
  EXPECT_EQ(a.mean_map, b.mean_map);
  EXPECT_DOUBLE_EQ(a.global_mean, b.global_mean);
  EXPECT_EQ(a.count, 40u);
  EXPECT_GE(a.min, 0.0f);
  EXPECT_LE(a.max, 1.0f);
}

TEST(MaskCache, RoundTripPreservesMasksSeedAndHash) {
  testing::TempDir dir;
  const MaskConfig c = SmallConfig();
  const MaskBatch batch = GenerateMasks(c);
  WriteRmsk(batch, dir / "a.rmsk");
  const std::uint64_t streamed = WriteRmsk(MaskGenerator(c), dir / "b.rmsk");
  EXPECT_EQ(testing::ReadFileBytes(dir / "a.rmsk"), testing::ReadFileBytes(dir / "b.rmsk"));
  const MaskCache back = ReadRmsk(dir / "a.rmsk");
  EXPECT_EQ(back.seed, 11u);
  EXPECT_EQ(back.masks, batch.masks);
  EXPECT_EQ(HashMasks(back.masks), streamed);

  const std::string bytes = testing::ReadFileBytes(dir / "a.rmsk");
  EXPECT_EQ(bytes.substr(0, 4), "RMSK");
  EXPECT_EQ(bytes.size(), 24u + 40u * 20u * 26u * 4u);
  {
    std::ofstream out(dir / "short.rmsk", std::ios::binary);
    out << bytes.substr(0, bytes.size() - 3);
  }
  EXPECT_THROW(ReadRmsk(dir / "short.rmsk"), Error);
}

TEST(MaskCache, HashIsSensitiveToEveryValue) {
  std::vector<Mask> masks = {Mask(2, 2, 0.5f)};
  const auto h0 = HashMasks(masks);
  masks[0].at(1, 1) = 0.25f;
  EXPECT_NE(HashMasks(masks), h0);
}

}  // namespace
}  // namespace risekit
