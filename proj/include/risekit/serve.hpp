#pragma once

#include <memory>
#include <string>
#include <thread>

#include "risekit/scorer.hpp"

namespace httplib {
class Server;
}

namespace risekit {

// Answers length-prefixed request frames from `in_fd` with response frames
// on `out_fd` until EOF. Returns the number of requests served. Malformed
// requests get {"error": "..."} frames.
std::size_t ServeFrames(Scorer& scorer, int in_fd, int out_fd);

// Serves a scorer over HTTP: POST /v1/score and GET /v1/health.
// Malformed body -> 400, batch over max_batch -> 413, scorer failure -> 500.
class HttpScoreServer {
 public:
  HttpScoreServer(std::shared_ptr<Scorer> scorer, std::string model_name);
  ~HttpScoreServer();

  HttpScoreServer(const HttpScoreServer&) = delete;
  HttpScoreServer& operator=(const HttpScoreServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  // Returns the bound port.
  int Start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until Stop().
  void Listen(const std::string& host, int port);
  void Stop();

  std::string url() const;

 private:
  std::shared_ptr<Scorer> scorer_;
  std::string model_name_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
};

}  // namespace risekit
