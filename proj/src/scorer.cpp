#include "risekit/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "risekit/error.hpp"

namespace risekit {

Target Target::ClassIndex(int index) {
  if (index < 0) Fail(ErrorKind::kInvalidArgument, "class index must be >= 0");
  Target t;
  t.kind_ = Kind::kClassIndex;
  t.class_index_ = index;
  return t;
}

Target Target::Conditional(std::vector<std::string> context, std::string token) {
  Target t;
  t.kind_ = Kind::kConditional;
  t.context_ = std::move(context);
  t.token_ = std::move(token);
  return t;
}

std::string Target::ToString() const {
  if (kind_ == Kind::kClassIndex) return "class:" + std::to_string(class_index_);
  std::string s = "next:" + token_;
  if (!context_.empty()) {
    s += "|";
    for (std::size_t i = 0; i < context_.size(); ++i) {
      if (i) s += " ";
      s += context_[i];
    }
  }
  return s;
}

Target Target::Parse(const std::string& text) {
  auto parse_index = [&](const std::string& digits) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(digits, &used);
      if (used != digits.size()) throw std::invalid_argument(digits);
      return ClassIndex(v);
    } catch (const std::logic_error&) {
      Fail(ErrorKind::kInvalidConfig, "bad target '" + text + "'");
    }
  };
  if (text.rfind("next:", 0) == 0) {
    const std::string rest = text.substr(5);
    const auto bar = rest.find('|');
    const std::string token = rest.substr(0, bar);
    if (token.empty()) Fail(ErrorKind::kInvalidConfig, "bad target '" + text + "': empty token");
    std::vector<std::string> context;
    if (bar != std::string::npos) {
      std::istringstream words(rest.substr(bar + 1));
      for (std::string w; words >> w;) context.push_back(w);
    }
    return Conditional(std::move(context), token);
  }
  if (text.rfind("class:", 0) == 0) return parse_index(text.substr(6));
  return parse_index(text);
}

nlohmann::json Target::ToJson() const {
  if (kind_ == Kind::kClassIndex) {
    return {{"kind", "class_index"}, {"class_index", class_index_}};
  }
  return {{"kind", "conditional"}, {"context", context_}, {"token", token_}};
}

Target Target::FromJson(const nlohmann::json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "class_index") return ClassIndex(j.at("class_index").get<int>());
    if (kind == "conditional") {
      return Conditional(j.at("context").get<std::vector<std::string>>(),
                         j.at("token").get<std::string>());
    }
    Fail(ErrorKind::kProtocol, "unknown target kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("malformed target: ") + e.what());
  }
}

std::vector<std::vector<double>> Scorer::ScoreTargets(
    std::span<const Image> images, std::span<const Target> targets) {
  std::vector<std::vector<double>> out;
  out.reserve(targets.size());
  for (const Target& t : targets) out.push_back(ScoreBatch(images, t));
  return out;
}

std::vector<double> SerializingScorer::ScoreBatch(std::span<const Image> images,
                                                  const Target& target) {
  std::lock_guard lock(mu_);
  return inner_->ScoreBatch(images, target);
}

std::vector<std::vector<double>> SerializingScorer::ScoreTargets(
    std::span<const Image> images, std::span<const Target> targets) {
  std::lock_guard lock(mu_);
  return inner_->ScoreTargets(images, targets);
}

std::shared_ptr<Scorer> MakeThreadSafe(std::shared_ptr<Scorer> scorer) {
  if (scorer->reentrant()) return scorer;
  return std::make_shared<SerializingScorer>(std::move(scorer));
}

std::vector<double> ScoreChecked(Scorer& scorer, std::span<const Image> images,
                                 const Target& target, std::size_t probe_index) {
  std::vector<double> scores;
  scores.reserve(images.size());
  const std::size_t step = static_cast<std::size_t>(std::max(1, scorer.max_batch()));
  for (std::size_t start = 0; start < images.size(); start += step) {
    const auto slice = images.subspan(start, std::min(step, images.size() - start));
    std::vector<double> part;
    try {
      part = scorer.ScoreBatch(slice, target);
    } catch (const ProbeError&) {
      throw;
    } catch (const Error& e) {
      throw ProbeError(probe_index, "probe " + std::to_string(probe_index) + ": " + e.what(),
                       e.kind());
    } catch (const std::exception& e) {
      throw ProbeError(probe_index, "probe " + std::to_string(probe_index) +
                                        ": scorer failed: " + e.what());
    }
    if (part.size() != slice.size()) {
      throw ProbeError(probe_index,
                       "probe " + std::to_string(probe_index) + ": scorer returned " +
                           std::to_string(part.size()) + " scores for " +
                           std::to_string(slice.size()) + " images");
    }
    for (double s : part) {
      if (!std::isfinite(s)) {
        Fail(ErrorKind::kData, "probe " + std::to_string(probe_index) +
                                   ": scorer returned a non-finite score");
      }
    }
    scores.insert(scores.end(), part.begin(), part.end());
  }
  return scores;
}

}  // namespace risekit
