#include "risekit/serve.hpp"

#include <unistd.h>

#include <cerrno>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "risekit/binary_io.hpp"
#include "risekit/error.hpp"
#include "risekit/wire.hpp"

namespace risekit {

namespace {

bool ReadExact(int fd, char* buf, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::read(fd, buf + got, n - got);
    if (r < 0 && errno == EINTR) continue;
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

bool WriteAll(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(fd, bytes.data(), bytes.size());
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) return false;
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

std::string ErrorBody(const std::string& message) {
  return nlohmann::json{{"error", message}}.dump();
}

}  // namespace

std::size_t ServeFrames(Scorer& scorer, int in_fd, int out_fd) {
  std::size_t served = 0;
  for (;;) {
    unsigned char header[4];
    if (!ReadExact(in_fd, reinterpret_cast<char*>(header), 4)) return served;
    const std::uint32_t len = binio::GetU32Le(header);
    if (len > wire::kMaxFrameBytes) return served;
    std::string payload(len, '\0');
    if (!ReadExact(in_fd, payload.data(), len)) return served;
    std::string reply;
    try {
      const auto req = wire::DecodeScoreRequest(payload);
      const auto scores = scorer.ScoreBatch(req.images, req.target);
      reply = wire::EncodeScoreResponse(scores);
    } catch (const std::exception& e) {
      reply = ErrorBody(e.what());
    }
    if (!WriteAll(out_fd, wire::EncodeFrame(reply))) return served;
    ++served;
  }
}

HttpScoreServer::HttpScoreServer(std::shared_ptr<Scorer> scorer, std::string model_name)
    : scorer_(MakeThreadSafe(std::move(scorer))),
      model_name_(std::move(model_name)),
      server_(std::make_unique<httplib::Server>()) {
  server_->Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(nlohmann::json{{"status", "ok"}, {"model", model_name_}}.dump(),
                    "application/json");
  });
  server_->Post("/v1/score", [this](const httplib::Request& req, httplib::Response& res) {
    wire::ScoreRequest decoded;
    try {
      decoded = wire::DecodeScoreRequest(req.body);
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(ErrorBody(e.what()), "application/json");
      return;
    }
    if (static_cast<int>(decoded.images.size()) > scorer_->max_batch()) {
      res.status = 413;
      res.set_content(ErrorBody("batch exceeds max_batch " + std::to_string(scorer_->max_batch())),
                      "application/json");
      return;
    }
    try {
      const auto scores = scorer_->ScoreBatch(decoded.images, decoded.target);
      res.set_content(wire::EncodeScoreResponse(scores), "application/json");
    } catch (const std::exception&) {
      res.status = 500;
      res.set_content(ErrorBody("internal scoring failure"), "application/json");
    }
  });
}

HttpScoreServer::~HttpScoreServer() { Stop(); }

int HttpScoreServer::Start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) Fail(ErrorKind::kTransport, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpScoreServer::Listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) {
    Fail(ErrorKind::kTransport, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void HttpScoreServer::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string HttpScoreServer::url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

}  // namespace risekit
