#pragma once

#include <stdexcept>
#include <string>

namespace risekit {

// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kInvalidArgument,
  kInvalidDimension,
  kInvalidConfig,
  kEnumerationBound,
  kIo,
  kData,
  kProbe,
  kTransport,
  kProtocol,
  kRemote,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Raised when a scorer call fails while probing. `index` is the batch index
// (saliency), step index (metrics) or window index (baselines).
class ProbeError : public Error {
 public:
  ProbeError(std::size_t index, const std::string& message,
             ErrorKind cause = ErrorKind::kProbe)
      : Error(ErrorKind::kProbe, message), index_(index), cause_(cause) {}

  std::size_t index() const { return index_; }
  // Kind of the underlying failure (transport, protocol, ...).
  ErrorKind cause() const { return cause_; }

 private:
  std::size_t index_;
  ErrorKind cause_;
};

[[noreturn]] void Fail(ErrorKind kind, const std::string& message);

}  // namespace risekit
