#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <sys/types.h>

#include <nlohmann/json.hpp>

#include "risekit/scorer.hpp"

namespace risekit {

struct HttpScorerOptions {
  std::chrono::milliseconds timeout{30000};
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  int max_batch = 32;
  // Concurrent in-flight batches.
  int max_in_flight = 4;
};

// Remote scorer speaking the wire protocol: POST <endpoint>/v1/score.
// Transport failures and 5xx responses are retried with exponential backoff;
// other non-2xx responses fail immediately with a remote error.
class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(std::string endpoint, HttpScorerOptions options = {});

  std::vector<double> ScoreBatch(std::span<const Image> images,
                                 const Target& target) override;
  int max_batch() const override { return options_.max_batch; }
  bool reentrant() const override { return true; }
  int max_in_flight() const override { return options_.max_in_flight; }
  std::string name() const override { return "http:" + endpoint_; }

  // GET <endpoint>/v1/health; returns the parsed body.
  nlohmann::json Health();

 private:
  std::string endpoint_;
  std::string host_;  // scheme://host:port
  std::string base_path_;
  HttpScorerOptions options_;
  std::counting_semaphore<1024> in_flight_;
};

// Persistent child process fed length-prefixed JSON frames on stdin; it
// answers each request frame with one response frame on stdout. Calls are
// serialized. Once the child dies the scorer stays failed.
class SubprocessScorer final : public Scorer {
 public:
  explicit SubprocessScorer(std::string command, int max_batch = 32);
  ~SubprocessScorer() override;

  SubprocessScorer(const SubprocessScorer&) = delete;
  SubprocessScorer& operator=(const SubprocessScorer&) = delete;

  std::vector<double> ScoreBatch(std::span<const Image> images,
                                 const Target& target) override;
  int max_batch() const override { return max_batch_; }
  bool reentrant() const override { return false; }
  std::string name() const override { return "subprocess:" + command_; }

  pid_t pid() const { return pid_; }

 private:
  void WriteAll(std::string_view bytes);
  std::string ReadExact(std::size_t n);
  void MarkBroken(const std::string& why);
  void Shutdown();

  std::string command_;
  int max_batch_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  bool broken_ = false;
  std::mutex mu_;
};

// Builds a scorer from a CLI spec:
//   synthetic:<model spec>   (see ParseSyntheticSpec)
//   subprocess:<shell command>
//   http:<url>               (empty url falls back to $RISEKIT_SCORER_URL)
std::shared_ptr<Scorer> MakeScorer(const std::string& spec, int max_batch = 32);

}  // namespace risekit
