#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "risekit/image.hpp"

namespace risekit {

// What the scorer should report a confidence for: a class index, or the
// next token given an opaque token context (captioning-style scoring). The
// context is forwarded untouched.
class Target {
 public:
  enum class Kind { kClassIndex, kConditional };

  static Target ClassIndex(int index);
  static Target Conditional(std::vector<std::string> context, std::string token);

  Kind kind() const { return kind_; }
  int class_index() const { return class_index_; }
  const std::vector<std::string>& context() const { return context_; }
  const std::string& token() const { return token_; }

  // Display form: "class:3" or "next:<token>|ctx1 ctx2".
  std::string ToString() const;
  // Parses "3", "class:3" or "next:<token>[|ctx tokens separated by spaces]".
  static Target Parse(const std::string& text);

  nlohmann::json ToJson() const;
  static Target FromJson(const nlohmann::json& j);

  bool operator==(const Target&) const = default;

 private:
  Kind kind_ = Kind::kClassIndex;
  int class_index_ = 0;
  std::vector<std::string> context_;
  std::string token_;
};

struct ScoreRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Black-box confidence function. The only model interface in the library:
// images in, one scalar per image out.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Returns exactly images.size() scores, scores[i] for images[i].
  virtual std::vector<double> ScoreBatch(std::span<const Image> images,
                                         const Target& target) = 0;

  // Scores every image for every target; result[t][i]. Adapters that can
  // amortize a probe across targets override this.
  virtual std::vector<std::vector<double>> ScoreTargets(
      std::span<const Image> images, std::span<const Target> targets);

  virtual int max_batch() const { return 32; }
  // True when concurrent ScoreBatch calls are safe.
  virtual bool reentrant() const { return false; }
  // Concurrent batches the backend accepts; 0 means no limit.
  virtual int max_in_flight() const { return 0; }
  virtual ScoreRange score_range_hint() const { return {}; }
  virtual std::string name() const = 0;
};

// Serializes calls into a non-reentrant scorer.
class SerializingScorer final : public Scorer {
 public:
  explicit SerializingScorer(std::shared_ptr<Scorer> inner)
      : inner_(std::move(inner)) {}

  std::vector<double> ScoreBatch(std::span<const Image> images,
                                 const Target& target) override;
  std::vector<std::vector<double>> ScoreTargets(
      std::span<const Image> images, std::span<const Target> targets) override;
  int max_batch() const override { return inner_->max_batch(); }
  bool reentrant() const override { return true; }
  int max_in_flight() const override { return inner_->max_in_flight(); }
  ScoreRange score_range_hint() const override { return inner_->score_range_hint(); }
  std::string name() const override { return inner_->name(); }

 private:
  std::shared_ptr<Scorer> inner_;
  std::mutex mu_;
};

// Wraps non-reentrant scorers in a SerializingScorer; passes others through.
std::shared_ptr<Scorer> MakeThreadSafe(std::shared_ptr<Scorer> scorer);

// Calls scorer.ScoreBatch in slices of at most max_batch images and checks
// the returned count and finiteness. Failures surface as ProbeError(index).
std::vector<double> ScoreChecked(Scorer& scorer, std::span<const Image> images,
                                 const Target& target, std::size_t probe_index);

}  // namespace risekit
