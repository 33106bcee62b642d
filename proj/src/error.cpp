#include "risekit/error.hpp"

namespace risekit {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kInvalidDimension: return "invalid-dimension";
    case ErrorKind::kInvalidConfig: return "invalid-config";
    case ErrorKind::kEnumerationBound: return "enumeration-bound";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kData: return "data";
    case ErrorKind::kProbe: return "probe";
    case ErrorKind::kTransport: return "transport";
    case ErrorKind::kProtocol: return "protocol";
    case ErrorKind::kRemote: return "remote";
  }
  return "unknown";
}

void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace risekit
