// Test double for the model server: serves a synthetic model over the
// stdio frame protocol or over HTTP.

#include <unistd.h>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "risekit/error.hpp"
#include "risekit/serve.hpp"
#include "risekit/synthetic.hpp"

namespace {

// Forwards to a real scorer but misbehaves on request: exits after a number
// of calls, or emits an invalid frame header instead of a reply.
class FaultyScorer final : public risekit::Scorer {
 public:
  FaultyScorer(std::unique_ptr<risekit::Scorer> inner, int exit_after, bool bad_frame)
      : inner_(std::move(inner)), exit_after_(exit_after), bad_frame_(bad_frame) {}

  std::vector<double> ScoreBatch(std::span<const risekit::Image> images,
                                 const risekit::Target& target) override {
    if (exit_after_ >= 0 && calls_++ >= exit_after_) _exit(0);
    if (bad_frame_) {
      const char junk[4] = {'\xff', '\xff', '\xff', '\x7f'};
      [[maybe_unused]] auto n = write(STDOUT_FILENO, junk, sizeof(junk));
      _exit(0);
    }
    return inner_->ScoreBatch(images, target);
  }
  int max_batch() const override { return inner_->max_batch(); }
  bool reentrant() const override { return false; }
  std::string name() const override { return inner_->name(); }

 private:
  std::unique_ptr<risekit::Scorer> inner_;
  int exit_after_;
  bool bad_frame_;
  int calls_ = 0;
};

std::atomic<bool> g_stop{false};
void OnSignal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risekit-stub-scorer: synthetic model behind the scorer protocols"};
  std::string model_spec;
  bool stdio = false;
  int port = -1;
  int exit_after = -1;
  bool bad_frame = false;
  int max_batch = 32;
  app.add_option("--model", model_spec, "constant:<c> | region:x0,y0,x1,y1 | template:<file>")
      ->required();
  auto* stdio_opt = app.add_flag("--stdio", stdio, "Serve length-prefixed frames on stdin/stdout");
  app.add_option("--port", port, "Serve HTTP on 127.0.0.1:<port> (0 picks one)")
      ->excludes(stdio_opt);
  app.add_option("--exit-after", exit_after, "Exit after this many requests");
  app.add_flag("--bad-frame", bad_frame, "Reply with an invalid frame header");
  app.add_option("--max-batch", max_batch, "Largest accepted batch");
  CLI11_PARSE(app, argc, argv);

  try {
    std::unique_ptr<risekit::Scorer> scorer = std::make_unique<risekit::SyntheticScorer>(
        risekit::ParseSyntheticSpec(model_spec), max_batch);
    if (exit_after >= 0 || bad_frame) {
      scorer = std::make_unique<FaultyScorer>(std::move(scorer), exit_after, bad_frame);
    }
    if (stdio) {
      risekit::ServeFrames(*scorer, STDIN_FILENO, STDOUT_FILENO);
      return 0;
    }
    if (port < 0) {
      std::fprintf(stderr, "either --stdio or --port is required\n");
      return 2;
    }
    const std::string name = scorer->name();
    risekit::HttpScoreServer server(std::shared_ptr<risekit::Scorer>(std::move(scorer)), name);
    const int bound = server.Start("127.0.0.1", port);
    std::printf("%d\n", bound);
    std::fflush(stdout);
    std::signal(SIGINT, OnSignal);
    std::signal(SIGTERM, OnSignal);
    while (!g_stop) pause();
    server.Stop();
    return 0;
  } catch (const risekit::Error& e) {
    std::fprintf(stderr, "risekit-stub-scorer: %s\n", e.what());
    return 2;
  }
}
