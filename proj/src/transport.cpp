#include "risekit/transport.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <httplib.h>

#include "risekit/binary_io.hpp"
#include "risekit/error.hpp"
#include "risekit/synthetic.hpp"
#include "risekit/wire.hpp"

namespace risekit {

namespace {

std::string Excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

// Releases a counting-semaphore slot on scope exit.
template <class Sem>
class SlotGuard {
 public:
  explicit SlotGuard(Sem& sem) : sem_(sem) { sem_.acquire(); }
  ~SlotGuard() { sem_.release(); }
  SlotGuard(const SlotGuard&) = delete;
  SlotGuard& operator=(const SlotGuard&) = delete;

 private:
  Sem& sem_;
};

}  // namespace

HttpScorer::HttpScorer(std::string endpoint, HttpScorerOptions options)
    : endpoint_(std::move(endpoint)),
      options_(options),
      in_flight_(std::clamp(options.max_in_flight, 1, 1024)) {
  if (endpoint_.empty()) Fail(ErrorKind::kInvalidConfig, "empty HTTP endpoint");
  std::string url = endpoint_;
  if (url.find("://") == std::string::npos) url = "http://" + url;
  const auto scheme_end = url.find("://") + 3;
  const auto path_start = url.find('/', scheme_end);
  host_ = url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  if (url.rfind("http://", 0) != 0) {
    Fail(ErrorKind::kInvalidConfig, "only http:// endpoints are supported: " + endpoint_);
  }
  if (options_.attempts < 1) options_.attempts = 1;
}

std::vector<double> HttpScorer::ScoreBatch(std::span<const Image> images,
                                           const Target& target) {
  if (images.empty()) return {};
  if (static_cast<int>(images.size()) > options_.max_batch) {
    Fail(ErrorKind::kInvalidArgument, "batch exceeds declared max_batch");
  }
  const std::string body = wire::EncodeScoreRequest(images, target);
  SlotGuard guard(in_flight_);

  auto backoff = options_.initial_backoff;
  std::string last_error;
  ErrorKind last_kind = ErrorKind::kTransport;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    auto res = client.Post(base_path_ + "/v1/score", body, "application/json");
    if (!res) {
      last_kind = ErrorKind::kTransport;
      last_error = "POST " + endpoint_ + "/v1/score failed: " + httplib::to_string(res.error());
    } else if (res->status >= 200 && res->status < 300) {
      return wire::DecodeScoreResponse(res->body, images.size());
    } else if (res->status >= 500) {
      last_kind = ErrorKind::kRemote;
      last_error = "remote error " + std::to_string(res->status) + ": " + Excerpt(res->body);
    } else {
      Fail(ErrorKind::kRemote,
           "remote error " + std::to_string(res->status) + ": " + Excerpt(res->body));
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  Fail(last_kind, last_error + " (after " + std::to_string(options_.attempts) + " attempts)");
}

nlohmann::json HttpScorer::Health() {
  httplib::Client client(host_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
  client.set_connection_timeout(secs.count(), 0);
  client.set_read_timeout(secs.count(), 0);
  auto res = client.Get(base_path_ + "/v1/health");
  if (!res) {
    Fail(ErrorKind::kTransport,
         "GET " + endpoint_ + "/v1/health failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    Fail(ErrorKind::kRemote,
         "health check returned " + std::to_string(res->status) + ": " + Excerpt(res->body));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("malformed health response: ") + e.what());
  }
}

SubprocessScorer::SubprocessScorer(std::string command, int max_batch)
    : command_(std::move(command)), max_batch_(max_batch) {
  if (command_.empty()) Fail(ErrorKind::kInvalidConfig, "empty subprocess command");
  // A dead child must surface as EPIPE, not kill the process.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0 || ::pipe2(out_pipe, O_CLOEXEC) != 0) {
    Fail(ErrorKind::kTransport, std::string("pipe failed: ") + std::strerror(errno));
  }
  pid_ = ::fork();
  if (pid_ < 0) Fail(ErrorKind::kTransport, std::string("fork failed: ") + std::strerror(errno));
  if (pid_ == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
}

SubprocessScorer::~SubprocessScorer() { Shutdown(); }

void SubprocessScorer::Shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    // Closing stdin asks the child to exit; give it a moment, then kill.
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

void SubprocessScorer::MarkBroken(const std::string& why) {
  broken_ = true;
  Fail(ErrorKind::kTransport, "subprocess '" + command_ + "': " + why);
}

void SubprocessScorer::WriteAll(std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::write(to_child_, bytes.data(), bytes.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      MarkBroken(std::string("write failed: ") + std::strerror(errno));
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string SubprocessScorer::ReadExact(std::size_t n) {
  std::string buf(n, '\0');
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::read(from_child_, buf.data() + got, n - got);
    if (r < 0) {
      if (errno == EINTR) continue;
      MarkBroken(std::string("read failed: ") + std::strerror(errno));
    }
    if (r == 0) MarkBroken("child closed its output (exited?)");
    got += static_cast<std::size_t>(r);
  }
  return buf;
}

std::vector<double> SubprocessScorer::ScoreBatch(std::span<const Image> images,
                                                 const Target& target) {
  if (images.empty()) return {};
  std::lock_guard lock(mu_);
  if (broken_) Fail(ErrorKind::kTransport, "subprocess '" + command_ + "' is no longer usable");
  WriteAll(wire::EncodeFrame(wire::EncodeScoreRequest(images, target)));
  const std::string header = ReadExact(4);
  const std::uint32_t len =
      binio::GetU32Le(reinterpret_cast<const unsigned char*>(header.data()));
  if (len == 0 || len > wire::kMaxFrameBytes) {
    broken_ = true;
    Fail(ErrorKind::kProtocol, "subprocess frame desync: length " + std::to_string(len));
  }
  const std::string payload = ReadExact(len);
  try {
    return wire::DecodeScoreResponse(payload, images.size());
  } catch (const Error& e) {
    // A malformed reply means request/response pairing can no longer be trusted.
    if (e.kind() != ErrorKind::kRemote) broken_ = true;
    throw;
  }
}

std::shared_ptr<Scorer> MakeScorer(const std::string& spec, int max_batch) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "synthetic") {
    return std::make_shared<SyntheticScorer>(ParseSyntheticSpec(rest), max_batch);
  }
  if (kind == "subprocess") {
    return std::make_shared<SubprocessScorer>(rest, max_batch);
  }
  if (kind == "http") {
    std::string url = rest.rfind("//", 0) == 0 ? "http:" + rest : rest;
    if (url.empty()) {
      const char* env = std::getenv("RISEKIT_SCORER_URL");
      if (!env || !*env) {
        Fail(ErrorKind::kInvalidConfig, "--scorer http: needs a URL or RISEKIT_SCORER_URL");
      }
      url = env;
    }
    HttpScorerOptions opts;
    opts.max_batch = max_batch;
    return std::make_shared<HttpScorer>(url, opts);
  }
  Fail(ErrorKind::kInvalidConfig, "unknown scorer spec '" + spec + "'");
}

}  // namespace risekit
