#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "risekit/image.hpp"
#include "risekit/scorer.hpp"

// Batch scoring wire format shared verbatim by the HTTP and subprocess
// transports.
//
// Request:  {"shape":[B,H,W,3], "dtype":"f32le",
//            "data":"<base64 of B*H*W*3 little-endian float32>",
//            "target":{...}}
// Response: {"scores":[s_0, ..., s_{B-1}]}
//
// Subprocess frames prefix each JSON document with its byte length as a
// little-endian u32.
namespace risekit::wire {

std::string Base64Encode(std::string_view bytes);
// Throws a protocol error on invalid input.
std::string Base64Decode(std::string_view text);

// All images must share one size.
std::string EncodeScoreRequest(std::span<const Image> images, const Target& target);

struct ScoreRequest {
  std::vector<Image> images;
  Target target;
};
// Server-side decoding; values outside [0,1] raise a protocol error.
ScoreRequest DecodeScoreRequest(std::string_view body);

std::string EncodeScoreResponse(std::span<const double> scores);
// Checks that exactly `expected` finite scores came back. An {"error": ...}
// reply raises a remote error.
std::vector<double> DecodeScoreResponse(std::string_view body, std::size_t expected);

std::string EncodeFrame(std::string_view payload);

// Largest frame accepted from a peer.
inline constexpr std::uint32_t kMaxFrameBytes = 1u << 30;

}  // namespace risekit::wire
