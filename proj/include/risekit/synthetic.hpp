#pragma once

#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "risekit/image.hpp"
#include "risekit/scorer.hpp"

namespace risekit {

// Half-open pixel rectangle [x_min, x_max) x [y_min, y_max).
struct Region {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int area() const { return (x_max - x_min) * (y_max - y_min); }
  bool Contains(int y, int x) const {
    return x >= x_min && x < x_max && y >= y_min && y < y_max;
  }
  bool operator==(const Region&) const = default;
};

// Oracle scorers with known structure. All outputs lie in [0,1]; the target
// is ignored.
struct ConstantModel {
  double value = 0.5;
};
// Mean channel-averaged intensity inside the region.
struct RegionMeanModel {
  Region region;
};
// clamp(sum(T * I) / sum(T) + bias, 0, 1) with I the channel-averaged
// intensity and T a nonnegative weight plane.
struct TemplateDotModel {
  SaliencyMap weights;
  double bias = 0.0;
};

using SyntheticModel = std::variant<ConstantModel, RegionMeanModel, TemplateDotModel>;

double SyntheticScore(const SyntheticModel& model, const Image& image);

// Checks the model parameters against the image size; throws invalid-config.
void ValidateSyntheticModel(const SyntheticModel& model, int height, int width);

// JSON form shared by the CLI and the stub scorer processes:
//   {"kind":"constant","value":c}
//   {"kind":"region_mean","x_min":..,"y_min":..,"x_max":..,"y_max":..}
//   {"kind":"template_dot","height":H,"width":W,"weights":[...],"bias":b}
nlohmann::json SyntheticModelToJson(const SyntheticModel& model);
SyntheticModel SyntheticModelFromJson(const nlohmann::json& j);

// Parses the compact CLI form: "constant:0.3", "region:x0,y0,x1,y1" or
// "template:<json file>".
SyntheticModel ParseSyntheticSpec(const std::string& spec);

class SyntheticScorer final : public Scorer {
 public:
  explicit SyntheticScorer(SyntheticModel model, int max_batch = 32)
      : model_(std::move(model)), max_batch_(max_batch) {}

  std::vector<double> ScoreBatch(std::span<const Image> images,
                                 const Target& target) override;
  int max_batch() const override { return max_batch_; }
  bool reentrant() const override { return true; }
  std::string name() const override;

  const SyntheticModel& model() const { return model_; }

 private:
  SyntheticModel model_;
  int max_batch_;
};

}  // namespace risekit
