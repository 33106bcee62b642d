#include "risekit/saliency.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "risekit/error.hpp"

namespace risekit {

const char* NormalizationName(Normalization n) {
  return n == Normalization::kAnalytic ? "analytic" : "empirical";
}

Normalization ParseNormalization(const std::string& text) {
  if (text == "analytic") return Normalization::kAnalytic;
  if (text == "empirical") return Normalization::kEmpirical;
  Fail(ErrorKind::kInvalidConfig, "normalization must be 'analytic' or 'empirical', got '" +
                                      text + "'");
}

namespace {

void GenerateChunk(const MaskGenerator& gen, int start, int count, int workers,
                   std::vector<Mask>& out) {
  if (static_cast<int>(out.size()) < count) out.resize(count);
  workers = std::clamp(workers, 1, count);
  if (workers == 1) {
    for (int i = 0; i < count; ++i) gen.GenerateInto(start + i, out[i]);
    return;
  }
  std::vector<std::jthread> pool;
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (int i = t; i < count; i += workers) gen.GenerateInto(start + i, out[i]);
    });
  }
}

// Scores one batch for every target; result[t][i]. Checks counts and
// finiteness; failures carry the batch index.
std::vector<std::vector<double>> ScoreAll(Scorer& scorer, std::span<const Image> batch,
                                          const std::vector<Target>& targets,
                                          std::size_t batch_index) {
  if (targets.size() == 1) return {ScoreChecked(scorer, batch, targets[0], batch_index)};
  std::vector<std::vector<double>> scores;
  try {
    scores = scorer.ScoreTargets(batch, targets);
  } catch (const ProbeError&) {
    throw;
  } catch (const Error& e) {
    throw ProbeError(batch_index, "probe " + std::to_string(batch_index) + ": " + e.what(),
                     e.kind());
  } catch (const std::exception& e) {
    throw ProbeError(batch_index, "probe " + std::to_string(batch_index) +
                                      ": scorer failed: " + e.what());
  }
  if (scores.size() != targets.size()) {
    throw ProbeError(batch_index, "probe " + std::to_string(batch_index) +
                                      ": scorer returned the wrong number of targets");
  }
  for (const auto& row : scores) {
    if (row.size() != batch.size()) {
      throw ProbeError(batch_index, "probe " + std::to_string(batch_index) +
                                        ": scorer returned the wrong number of scores");
    }
    for (double s : row) {
      if (!std::isfinite(s)) {
        Fail(ErrorKind::kData, "probe " + std::to_string(batch_index) +
                                   ": scorer returned a non-finite score");
      }
    }
  }
  return scores;
}

std::vector<ExplainResult> RunRise(const Image& image, const std::vector<Target>& targets,
                                   Scorer& scorer, const MaskConfig& config,
                                   Normalization normalization, const ExplainOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  if (targets.empty()) Fail(ErrorKind::kInvalidArgument, "no targets to explain");
  config.Validate();
  if (image.height() != config.image_h || image.width() != config.image_w) {
    Fail(ErrorKind::kInvalidDimension,
         "image is " + std::to_string(image.height()) + "x" + std::to_string(image.width()) +
             " but the mask config expects " + std::to_string(config.image_h) + "x" +
             std::to_string(config.image_w));
  }
  const MaskGenerator generator(config);
  const std::size_t num_pixels = image.num_pixels();
  const std::size_t num_targets = targets.size();
  const ScoreRange range = scorer.score_range_hint();

  std::vector<ExplainResult> results(num_targets);
  const auto unmasked = ScoreAll(scorer, std::span<const Image>(&image, 1), targets, 0);
  for (std::size_t t = 0; t < num_targets; ++t) results[t].score_unmasked = unmasked[t][0];

  std::vector<std::vector<double>> sums(num_targets, std::vector<double>(num_pixels, 0.0));
  std::vector<double> coverage;
  if (normalization == Normalization::kEmpirical) coverage.assign(num_pixels, 0.0);

  const int batch_size = std::max(1, options.batch_size);
  std::vector<Mask> chunk;
  std::vector<Image> masked(batch_size);
  std::size_t batch_index = 0;
  std::vector<std::size_t> out_of_range(num_targets, 0);

  for (int chunk_start = 0; chunk_start < config.num_masks; chunk_start += config.chunk_size) {
    const int chunk_count = std::min(config.chunk_size, config.num_masks - chunk_start);
    GenerateChunk(generator, chunk_start, chunk_count, options.mask_workers, chunk);
    for (int b = 0; b < chunk_count; b += batch_size) {
      const int count = std::min(batch_size, chunk_count - b);
      for (int i = 0; i < count; ++i) ApplyMaskInto(image, chunk[b + i], masked[i]);
      const auto scores =
          ScoreAll(scorer, std::span<const Image>(masked.data(), count), targets, batch_index++);
      // Accumulate strictly in mask order.
      for (int i = 0; i < count; ++i) {
        const auto m = chunk[b + i].data();
        for (std::size_t t = 0; t < num_targets; ++t) {
          const double s = scores[t][i];
          if (s < range.lo || s > range.hi) ++out_of_range[t];
          double* acc = sums[t].data();
          for (std::size_t p = 0; p < num_pixels; ++p) acc[p] += s * m[p];
        }
        if (!coverage.empty()) {
          for (std::size_t p = 0; p < num_pixels; ++p) coverage[p] += m[p];
        }
      }
    }
  }

  std::size_t uncovered = 0;
  if (!coverage.empty()) {
    for (double c : coverage) uncovered += c <= 0.0 ? 1 : 0;
  }
  const double analytic_norm = 1.0 / (static_cast<double>(config.num_masks) * config.prob_on);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (std::size_t t = 0; t < num_targets; ++t) {
    ExplainResult& r = results[t];
    r.saliency = SaliencyMap(config.image_h, config.image_w);
    for (std::size_t p = 0; p < num_pixels; ++p) {
      double v;
      if (normalization == Normalization::kAnalytic) {
        v = sums[t][p] * analytic_norm;
      } else {
        v = coverage[p] > 0.0 ? sums[t][p] / coverage[p] : 0.0;
      }
      r.saliency[p] = static_cast<float>(v);
    }
    r.num_probes = config.num_masks;
    r.elapsed_s = elapsed;
    r.uncovered_pixels = uncovered;
    r.out_of_range_scores = out_of_range[t];
    if (uncovered > 0) {
      r.warnings.push_back(std::to_string(uncovered) +
                           " pixels had zero mask coverage; their saliency is 0");
    }
    if (out_of_range[t] > 0) {
      r.warnings.push_back(std::to_string(out_of_range[t]) + " scores fell outside [" +
                           std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]");
    }
  }
  return results;
}

}  // namespace

ExplainResult RiseSaliency(const ExplainRequest& request, Scorer& scorer,
                           const ExplainOptions& options) {
  auto results = RunRise(request.image, {request.target}, scorer, request.mask_config,
                         request.normalization, options);
  return std::move(results.front());
}

std::vector<ExplainResult> ExplainSequence(const Image& image,
                                           const std::vector<Target>& targets,
                                           Scorer& scorer, const MaskConfig& mask_config,
                                           Normalization normalization,
                                           const ExplainOptions& options) {
  return RunRise(image, targets, scorer, mask_config, normalization, options);
}

SaliencyMap ExactSaliency(const Image& image, int grid_h, int grid_w, double prob_on,
                          Scorer& scorer, const Target& target) {
  if (grid_h < 1 || grid_w < 1 || grid_h > image.height() || grid_w > image.width()) {
    Fail(ErrorKind::kInvalidConfig, "ExactSaliency: grid must fit inside the image");
  }
  if (!(prob_on > 0.0 && prob_on < 1.0)) {
    Fail(ErrorKind::kInvalidConfig, "ExactSaliency: prob_on must be in (0, 1)");
  }
  const int cells = grid_h * grid_w;
  if (cells > kMaxEnumerationCells) {
    Fail(ErrorKind::kEnumerationBound,
         "ExactSaliency: " + std::to_string(cells) + " cells exceed the enumeration bound of " +
             std::to_string(kMaxEnumerationCells));
  }
  const int h = image.height();
  const int w = image.width();
  const std::size_t num_pixels = image.num_pixels();
  const std::uint64_t num_grids = std::uint64_t{1} << cells;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, scorer.max_batch()));

  std::vector<double> weighted(num_pixels, 0.0);
  std::vector<double> expectation(num_pixels, 0.0);
  std::vector<Mask> masks;
  std::vector<double> probs;
  std::vector<Image> masked;

  auto flush = [&](std::size_t batch_index) {
    if (masks.empty()) return;
    const auto scores = ScoreChecked(scorer, masked, target, batch_index);
    for (std::size_t i = 0; i < masks.size(); ++i) {
      const auto m = masks[i].data();
      for (std::size_t p = 0; p < num_pixels; ++p) {
        weighted[p] += scores[i] * m[p] * probs[i];
        expectation[p] += m[p] * probs[i];
      }
    }
    masks.clear();
    probs.clear();
    masked.clear();
  };

  std::size_t batch_index = 0;
  for (std::uint64_t bits = 0; bits < num_grids; ++bits) {
    Mask grid(grid_h, grid_w);
    int ones = 0;
    for (int c = 0; c < cells; ++c) {
      const bool on = (bits >> c) & 1u;
      grid[c] = on ? 1.0f : 0.0f;
      ones += on;
    }
    probs.push_back(std::pow(prob_on, ones) * std::pow(1.0 - prob_on, cells - ones));
    masks.push_back(BilinearUpsample(grid, h, w));
    masked.push_back(ApplyMask(image, masks.back()));
    if (masks.size() == batch) flush(batch_index++);
  }
  flush(batch_index);

  SaliencyMap out(h, w);
  for (std::size_t p = 0; p < num_pixels; ++p) {
    out[p] = expectation[p] > 0.0 ? static_cast<float>(weighted[p] / expectation[p]) : 0.0f;
  }
  return out;
}

nlohmann::json ExplainSidecar(const ExplainRequest& request, const ExplainResult& result) {
  const MaskConfig& c = request.mask_config;
  return {
      {"target", request.target.ToString()},
      {"num_probes", result.num_probes},
      {"seed", c.seed},
      {"normalization", NormalizationName(request.normalization)},
      {"score_unmasked", result.score_unmasked},
      {"elapsed_s", result.elapsed_s},
      {"grid", {c.grid_h, c.grid_w}},
      {"prob_on", c.prob_on},
      {"image_size", {c.image_h, c.image_w}},
      {"random_shift", c.random_shift},
      {"warnings", result.warnings},
  };
}

}  // namespace risekit
