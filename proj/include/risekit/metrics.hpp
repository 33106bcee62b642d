#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "risekit/image.hpp"
#include "risekit/scorer.hpp"

namespace risekit {

struct CurvePoint {
  double fraction = 0.0;
  double score = 0.0;
  bool operator==(const CurvePoint&) const = default;
};

struct MetricCurve {
  std::vector<CurvePoint> points;
  double auc = 0.0;
};

// Trapezoidal area under a curve whose x values strictly increase from 0 to 1.
double Auc(std::span<const CurvePoint> points);

// Pixel indices (row-major) by decreasing saliency; equal values keep
// increasing index order. Shared by the curves and the pointing game.
std::vector<std::uint32_t> SaliencyOrder(const SaliencyMap& saliency);

// ceil(num_pixels / 100): about a hundred curve steps.
int DefaultPixelsPerStep(int height, int width);

struct DeletionOptions {
  // 0 selects DefaultPixelsPerStep.
  int pixels_per_step = 0;
  // Value written into removed pixels, per channel.
  Rgb fill = {0.0f, 0.0f, 0.0f};
  // Curve images scored per scorer call.
  int batch_size = 32;
};

struct InsertionOptions {
  int pixels_per_step = 0;
  int blur_kernel = 11;
  double blur_sigma = 5.0;
  int batch_size = 32;
};

// Removes pixels in SaliencyOrder, pixels_per_step at a time, until every
// pixel is removed. Point i is (i / n, f(image after i steps)), i = 0..n.
// A scorer failure raises ProbeError carrying the first step of the failing
// batch.
MetricCurve Deletion(const Image& image, const SaliencyMap& saliency, Scorer& scorer,
                     const Target& target, const DeletionOptions& options = {});

// Starts from GaussianBlur(image) and copies original pixels back in
// SaliencyOrder until every pixel has been revealed.
MetricCurve Insertion(const Image& image, const SaliencyMap& saliency, Scorer& scorer,
                      const Target& target, const InsertionOptions& options = {});

// CSV with header "fraction,score" and one row per point.
std::string CurveCsv(const MetricCurve& curve);
void WriteCurveCsv(const MetricCurve& curve, const std::filesystem::path& path);

nlohmann::json CurveSidecar(const std::string& metric, const MetricCurve& curve,
                            int pixels_per_step, int blur_kernel, double blur_sigma);

// Half-open box [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;
  std::string category;

  bool Contains(int y, int x) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
  // Throws invalid-argument unless 0 <= min < max <= size on both axes.
  void Validate(int height, int width) const;
};

struct PixelCoord {
  int y = 0;
  int x = 0;
};

// First maximum in row-major order.
PixelCoord ArgmaxPixel(const SaliencyMap& saliency);

// Hit iff the saliency argmax lies inside any of `boxes`.
bool PointingGame(const SaliencyMap& saliency, std::span<const BoundingBox> boxes);

class PointingTally {
 public:
  struct Counts {
    std::int64_t hits = 0;
    std::int64_t misses = 0;
    double accuracy() const {
      const auto n = hits + misses;
      return n == 0 ? 0.0 : static_cast<double>(hits) / n;
    }
  };

  void Add(const std::string& category, bool hit);
  void Merge(const PointingTally& other);

  const std::map<std::string, Counts>& categories() const { return categories_; }
  bool empty() const { return categories_.empty(); }
  // Unweighted mean of per-category accuracies; throws on an empty tally.
  double MeanAccuracy() const;

  nlohmann::json ToJson() const;

 private:
  std::map<std::string, Counts> categories_;
};

struct HitRecord {
  std::string category;
  bool hit = false;
};
PointingTally TallyPointing(std::span<const HitRecord> results);

struct BoxRecord {
  std::string image_id;
  BoundingBox box;
};

// One JSON object per line: {image_id, category, x_min, y_min, x_max, y_max}.
// Blank lines are skipped. Parse errors name the line.
std::vector<BoxRecord> LoadBoxesJsonl(const std::filesystem::path& path);

}  // namespace risekit
