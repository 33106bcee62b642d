#include "risekit/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "risekit/error.hpp"

namespace risekit {

double Auc(std::span<const CurvePoint> points) {
  if (points.size() < 2) {
    Fail(ErrorKind::kInvalidArgument, "Auc: need at least 2 points");
  }
  if (points.front().fraction != 0.0 || points.back().fraction != 1.0) {
    Fail(ErrorKind::kInvalidArgument, "Auc: x must span [0, 1]");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].fraction - points[i - 1].fraction;
    if (!(dx > 0.0)) Fail(ErrorKind::kInvalidArgument, "Auc: x must be strictly increasing");
    area += dx * (points[i].score + points[i - 1].score) / 2.0;
  }
  return area;
}

std::vector<std::uint32_t> SaliencyOrder(const SaliencyMap& saliency) {
  std::vector<std::uint32_t> order(saliency.size());
  std::iota(order.begin(), order.end(), 0u);
  const auto values = saliency.data();
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return values[a] > values[b]; });
  return order;
}

int DefaultPixelsPerStep(int height, int width) {
  const long long n = static_cast<long long>(height) * width;
  return static_cast<int>((n + 99) / 100);
}

namespace {

void CheckCurveInputs(const Image& image, const SaliencyMap& saliency, int pixels_per_step,
                      int batch_size) {
  if (saliency.height() != image.height() || saliency.width() != image.width()) {
    Fail(ErrorKind::kInvalidDimension, "saliency and image sizes differ");
  }
  if (pixels_per_step < 1) Fail(ErrorKind::kInvalidArgument, "pixels_per_step must be >= 1");
  if (batch_size < 1) Fail(ErrorKind::kInvalidArgument, "batch_size must be >= 1");
}

// Runs the step loop shared by deletion and insertion: `canvas` starts in its
// initial state and `source` supplies the pixel values written at each step.
MetricCurve RunCurve(Image canvas, const Image& source, const SaliencyMap& saliency,
                     Scorer& scorer, const Target& target, int pixels_per_step,
                     int batch_size) {
  const auto order = SaliencyOrder(saliency);
  const std::size_t num_pixels = order.size();
  const std::size_t steps = (num_pixels + pixels_per_step - 1) / pixels_per_step;
  auto src = source.data();

  std::vector<double> scores;
  scores.reserve(steps + 1);
  std::vector<Image> batch;
  batch.reserve(batch_size);
  std::size_t batch_first_step = 0;

  auto flush = [&] {
    if (batch.empty()) return;
    const auto part = ScoreChecked(scorer, batch, target, batch_first_step);
    scores.insert(scores.end(), part.begin(), part.end());
    batch.clear();
  };

  for (std::size_t step = 0; step <= steps; ++step) {
    if (step > 0) {
      auto dst = canvas.mutable_data();
      const std::size_t begin = (step - 1) * pixels_per_step;
      const std::size_t end = std::min(num_pixels, begin + pixels_per_step);
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t p = order[k];
        dst[3 * p] = src[3 * p];
        dst[3 * p + 1] = src[3 * p + 1];
        dst[3 * p + 2] = src[3 * p + 2];
      }
    }
    if (batch.empty()) batch_first_step = step;
    batch.push_back(canvas);
    if (static_cast<int>(batch.size()) == batch_size) flush();
  }
  flush();

  MetricCurve curve;
  curve.points.reserve(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) {
    curve.points.push_back({static_cast<double>(i) / static_cast<double>(steps), scores[i]});
  }
  curve.auc = Auc(curve.points);
  return curve;
}

}  // namespace

MetricCurve Deletion(const Image& image, const SaliencyMap& saliency, Scorer& scorer,
                     const Target& target, const DeletionOptions& options) {
  const int pps = options.pixels_per_step > 0
                      ? options.pixels_per_step
                      : DefaultPixelsPerStep(image.height(), image.width());
  CheckCurveInputs(image, saliency, pps, options.batch_size);
  for (float f : options.fill) {
    if (!(f >= 0.0f && f <= 1.0f)) Fail(ErrorKind::kInvalidArgument, "fill outside [0,1]");
  }
  // The "source" of a deletion is the constant fill image.
  Image removed(image.height(), image.width());
  auto dst = removed.mutable_data();
  for (std::size_t p = 0; p < removed.num_pixels(); ++p) {
    for (int c = 0; c < 3; ++c) dst[3 * p + c] = options.fill[c];
  }
  return RunCurve(image, removed, saliency, scorer, target, pps, options.batch_size);
}

MetricCurve Insertion(const Image& image, const SaliencyMap& saliency, Scorer& scorer,
                      const Target& target, const InsertionOptions& options) {
  const int pps = options.pixels_per_step > 0
                      ? options.pixels_per_step
                      : DefaultPixelsPerStep(image.height(), image.width());
  CheckCurveInputs(image, saliency, pps, options.batch_size);
  Image canvas = GaussianBlur(image, options.blur_kernel, options.blur_sigma);
  return RunCurve(std::move(canvas), image, saliency, scorer, target, pps, options.batch_size);
}

namespace {

void AppendDouble(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

std::string CurveCsv(const MetricCurve& curve) {
  std::string out = "fraction,score\n";
  for (const CurvePoint& p : curve.points) {
    AppendDouble(out, p.fraction);
    out.push_back(',');
    AppendDouble(out, p.score);
    out.push_back('\n');
  }
  return out;
}

void WriteCurveCsv(const MetricCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out << CurveCsv(curve);
  if (!out.flush()) Fail(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

nlohmann::json CurveSidecar(const std::string& metric, const MetricCurve& curve,
                            int pixels_per_step, int blur_kernel, double blur_sigma) {
  nlohmann::json j = {
      {"metric", metric},
      {"auc", curve.auc},
      {"pixels_per_step", pixels_per_step},
  };
  if (metric == "insertion") {
    j["blur_kernel"] = blur_kernel;
    j["blur_sigma"] = blur_sigma;
  } else {
    j["blur_kernel"] = nullptr;
    j["blur_sigma"] = nullptr;
  }
  return j;
}

void BoundingBox::Validate(int height, int width) const {
  if (x_min < 0 || y_min < 0 || x_min >= x_max || y_min >= y_max || x_max > width ||
      y_max > height) {
    Fail(ErrorKind::kInvalidArgument,
         "bounding box [" + std::to_string(x_min) + "," + std::to_string(y_min) + "," +
             std::to_string(x_max) + "," + std::to_string(y_max) + ") outside a " +
             std::to_string(height) + "x" + std::to_string(width) + " image");
  }
}

PixelCoord ArgmaxPixel(const SaliencyMap& saliency) {
  if (saliency.empty()) Fail(ErrorKind::kInvalidArgument, "argmax of an empty map");
  const auto values = saliency.data();
  // max_element returns the first maximum.
  const auto idx = static_cast<std::size_t>(
      std::max_element(values.begin(), values.end()) - values.begin());
  return {static_cast<int>(idx / saliency.width()), static_cast<int>(idx % saliency.width())};
}

bool PointingGame(const SaliencyMap& saliency, std::span<const BoundingBox> boxes) {
  if (boxes.empty()) Fail(ErrorKind::kInvalidArgument, "pointing game needs at least one box");
  for (const auto& b : boxes) b.Validate(saliency.height(), saliency.width());
  const PixelCoord peak = ArgmaxPixel(saliency);
  return std::any_of(boxes.begin(), boxes.end(),
                     [&](const BoundingBox& b) { return b.Contains(peak.y, peak.x); });
}

void PointingTally::Add(const std::string& category, bool hit) {
  auto& c = categories_[category];
  (hit ? c.hits : c.misses) += 1;
}

void PointingTally::Merge(const PointingTally& other) {
  for (const auto& [cat, counts] : other.categories_) {
    auto& c = categories_[cat];
    c.hits += counts.hits;
    c.misses += counts.misses;
  }
}

double PointingTally::MeanAccuracy() const {
  if (categories_.empty()) Fail(ErrorKind::kData, "pointing tally is empty");
  double sum = 0.0;
  for (const auto& [cat, counts] : categories_) sum += counts.accuracy();
  return sum / static_cast<double>(categories_.size());
}

nlohmann::json PointingTally::ToJson() const {
  nlohmann::json cats = nlohmann::json::object();
  for (const auto& [cat, counts] : categories_) {
    cats[cat] = {{"hits", counts.hits}, {"misses", counts.misses}, {"accuracy", counts.accuracy()}};
  }
  nlohmann::json j = {{"categories", cats}};
  j["mean_accuracy"] = categories_.empty() ? nlohmann::json(nullptr) : nlohmann::json(MeanAccuracy());
  return j;
}

PointingTally TallyPointing(std::span<const HitRecord> results) {
  PointingTally tally;
  for (const auto& r : results) tally.Add(r.category, r.hit);
  return tally;
}

std::vector<BoxRecord> LoadBoxesJsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open boxes file '" + path.string() + "'");
  std::vector<BoxRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      BoxRecord r;
      r.image_id = j.at("image_id").is_string() ? j.at("image_id").get<std::string>()
                                                : j.at("image_id").dump();
      r.box.category = j.at("category").is_string() ? j.at("category").get<std::string>()
                                                    : j.at("category").dump();
      r.box.x_min = j.at("x_min").get<int>();
      r.box.y_min = j.at("y_min").get<int>();
      r.box.x_max = j.at("x_max").get<int>();
      r.box.y_max = j.at("y_max").get<int>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      Fail(ErrorKind::kData, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace risekit
