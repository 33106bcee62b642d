#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "risekit/image.hpp"
#include "risekit/masking.hpp"
#include "risekit/scorer.hpp"

namespace risekit {

enum class Normalization {
  // Divide the weighted mask sum by N * p, using E[M(lambda)] = p.
  kAnalytic,
  // Divide pixelwise by the realized coverage sum_i M_i(lambda).
  kEmpirical,
};

const char* NormalizationName(Normalization n);
Normalization ParseNormalization(const std::string& text);

struct ExplainRequest {
  Image image;
  Target target;
  MaskConfig mask_config;
  Normalization normalization = Normalization::kAnalytic;
};

struct ExplainOptions {
  // Masked images per scorer call (further capped by scorer.max_batch()).
  int batch_size = 32;
  // Threads used to generate each chunk of masks. Results do not depend on it.
  int mask_workers = 1;
};

struct ExplainResult {
  SaliencyMap saliency;
  int num_probes = 0;
  // f(I) on the unmasked image.
  double score_unmasked = 0.0;
  double elapsed_s = 0.0;
  // Pixels no mask covered (empirical normalization sets them to 0).
  std::size_t uncovered_pixels = 0;
  // Scores outside the scorer's declared range.
  std::size_t out_of_range_scores = 0;
  std::vector<std::string> warnings;
};

// Monte Carlo estimate
//   S(lambda) ~= 1 / (E[M] * N) * sum_i f(I . M_i) * M_i(lambda)
// accumulated in a single streaming pass over the masks. Masks are
// accumulated in index order, so the map is bit-identical for any batch size
// or worker count.
ExplainResult RiseSaliency(const ExplainRequest& request, Scorer& scorer,
                           const ExplainOptions& options = {});

// Same estimator for several targets. The mask batch is generated once and
// each masked image goes to the scorer once per batch via ScoreTargets.
std::vector<ExplainResult> ExplainSequence(const Image& image,
                                           const std::vector<Target>& targets,
                                           Scorer& scorer, const MaskConfig& mask_config,
                                           Normalization normalization = Normalization::kAnalytic,
                                           const ExplainOptions& options = {});

// Largest grid_h * grid_w the exact oracle will enumerate.
inline constexpr int kMaxEnumerationCells = 20;

// Exact expectation over all 2^(grid_h*grid_w) binary grids, each upsampled
// straight to the image size (no random shift), weighted by
// p^ones (1-p)^zeros and normalized per pixel by E[M(lambda)] under the
// same upsampling. A test oracle, not the production path.
SaliencyMap ExactSaliency(const Image& image, int grid_h, int grid_w, double prob_on,
                          Scorer& scorer, const Target& target = Target::ClassIndex(0));

// Sidecar metadata written next to an RSAL dump.
nlohmann::json ExplainSidecar(const ExplainRequest& request, const ExplainResult& result);

}  // namespace risekit
