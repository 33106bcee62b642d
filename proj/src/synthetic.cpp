#include "risekit/synthetic.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "risekit/error.hpp"

namespace risekit {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double PixelIntensity(const Image& image, int y, int x) {
  return (static_cast<double>(image.at(y, x, 0)) + image.at(y, x, 1) + image.at(y, x, 2)) / 3.0;
}

}  // namespace

double SyntheticScore(const SyntheticModel& model, const Image& image) {
  return std::visit(
      Overloaded{
          [](const ConstantModel& m) { return m.value; },
          [&](const RegionMeanModel& m) {
            const Region& r = m.region;
            ValidateSyntheticModel(m, image.height(), image.width());
            double sum = 0.0;
            for (int y = r.y_min; y < r.y_max; ++y) {
              for (int x = r.x_min; x < r.x_max; ++x) sum += PixelIntensity(image, y, x);
            }
            return std::clamp(sum / r.area(), 0.0, 1.0);
          },
          [&](const TemplateDotModel& m) {
            if (m.weights.height() != image.height() || m.weights.width() != image.width()) {
              Fail(ErrorKind::kInvalidConfig, "template_dot: template size differs from image");
            }
            double dot = 0.0;
            double total = 0.0;
            for (int y = 0; y < image.height(); ++y) {
              for (int x = 0; x < image.width(); ++x) {
                const double t = m.weights.at(y, x);
                dot += t * PixelIntensity(image, y, x);
                total += t;
              }
            }
            return std::clamp(dot / total + m.bias, 0.0, 1.0);
          },
      },
      model);
}

void ValidateSyntheticModel(const SyntheticModel& model, int height, int width) {
  std::visit(
      Overloaded{
          [](const ConstantModel& m) {
            if (!(m.value >= 0.0 && m.value <= 1.0)) {
              Fail(ErrorKind::kInvalidConfig, "constant model value must be in [0,1]");
            }
          },
          [&](const RegionMeanModel& m) {
            const Region& r = m.region;
            if (r.x_min < 0 || r.y_min < 0 || r.x_min >= r.x_max || r.y_min >= r.y_max ||
                r.x_max > width || r.y_max > height) {
              Fail(ErrorKind::kInvalidConfig, "region_mean: region outside image bounds");
            }
          },
          [&](const TemplateDotModel& m) {
            if (m.weights.height() != height || m.weights.width() != width) {
              Fail(ErrorKind::kInvalidConfig, "template_dot: template size differs from image");
            }
            double total = 0.0;
            for (float t : m.weights.data()) {
              if (!(t >= 0.0f)) Fail(ErrorKind::kInvalidConfig, "template_dot: negative weight");
              total += t;
            }
            if (!(total > 0.0)) Fail(ErrorKind::kInvalidConfig, "template_dot: all-zero template");
          },
      },
      model);
}

nlohmann::json SyntheticModelToJson(const SyntheticModel& model) {
  return std::visit(
      Overloaded{
          [](const ConstantModel& m) -> nlohmann::json {
            return {{"kind", "constant"}, {"value", m.value}};
          },
          [](const RegionMeanModel& m) -> nlohmann::json {
            return {{"kind", "region_mean"},
                    {"x_min", m.region.x_min},
                    {"y_min", m.region.y_min},
                    {"x_max", m.region.x_max},
                    {"y_max", m.region.y_max}};
          },
          [](const TemplateDotModel& m) -> nlohmann::json {
            return {{"kind", "template_dot"},
                    {"height", m.weights.height()},
                    {"width", m.weights.width()},
                    {"weights", std::vector<float>(m.weights.data().begin(), m.weights.data().end())},
                    {"bias", m.bias}};
          },
      },
      model);
}

SyntheticModel SyntheticModelFromJson(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") return ConstantModel{j.at("value").get<double>()};
    if (kind == "region_mean") {
      return RegionMeanModel{{j.at("x_min").get<int>(), j.at("y_min").get<int>(),
                              j.at("x_max").get<int>(), j.at("y_max").get<int>()}};
    }
    if (kind == "template_dot") {
      return TemplateDotModel{
          SaliencyMap(j.at("height").get<int>(), j.at("width").get<int>(),
                      j.at("weights").get<std::vector<float>>()),
          j.value("bias", 0.0)};
    }
    Fail(ErrorKind::kInvalidConfig, "unknown synthetic model kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kInvalidConfig, std::string("malformed synthetic model: ") + e.what());
  }
}

SyntheticModel ParseSyntheticSpec(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (kind == "constant") {
      std::size_t used = 0;
      const double v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
      return ConstantModel{v};
    }
    if (kind == "region") {
      Region r;
      char c1 = 0, c2 = 0, c3 = 0;
      std::istringstream in(arg);
      if (!(in >> r.x_min >> c1 >> r.y_min >> c2 >> r.x_max >> c3 >> r.y_max) || c1 != ',' ||
          c2 != ',' || c3 != ',' || !in.eof()) {
        throw std::invalid_argument(arg);
      }
      return RegionMeanModel{r};
    }
    if (kind == "template") {
      std::ifstream in(arg);
      if (!in) Fail(ErrorKind::kInvalidConfig, "cannot open template file '" + arg + "'");
      return SyntheticModelFromJson(nlohmann::json::parse(in));
    }
  } catch (const std::logic_error&) {
  } catch (const nlohmann::json::exception&) {
  }
  Fail(ErrorKind::kInvalidConfig, "bad synthetic model spec '" + spec + "'");
}

std::vector<double> SyntheticScorer::ScoreBatch(std::span<const Image> images,
                                                const Target&) {
  std::vector<double> scores;
  scores.reserve(images.size());
  for (const Image& image : images) scores.push_back(SyntheticScore(model_, image));
  return scores;
}

std::string SyntheticScorer::name() const {
  static constexpr const char* kNames[] = {"constant", "region_mean", "template_dot"};
  return std::string("synthetic:") + kNames[model_.index()];
}

}  // namespace risekit
