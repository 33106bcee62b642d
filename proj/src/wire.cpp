#include "risekit/wire.hpp"

#include <array>

#include <nlohmann/json.hpp>

#include "risekit/binary_io.hpp"
#include "risekit/error.hpp"

namespace risekit::wire {

namespace {

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

constexpr std::array<int, 256> MakeDecodeTable() {
  std::array<int, 256> t{};
  for (int& v : t) v = -1;
  for (int i = 0; i < 64; ++i) t[static_cast<unsigned char>(kAlphabet[i])] = i;
  return t;
}
constexpr auto kDecode = MakeDecodeTable();

}  // namespace

std::string Base64Encode(std::string_view bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(bytes[i]) << 16) |
                            (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                            static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(kAlphabet[(v >> 6) & 63]);
    out.push_back(kAlphabet[v & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out.push_back(kAlphabet[(v >> 18) & 63]);
    out.push_back(kAlphabet[(v >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(v >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string Base64Decode(std::string_view text) {
  if (text.size() % 4 != 0) Fail(ErrorKind::kProtocol, "base64 length not a multiple of 4");
  std::string out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    int pad = 0;
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) {
      const char ch = text[i + k];
      int d;
      if (ch == '=') {
        // Padding only in the last quantum, and only in the last two slots.
        if (i + 4 != text.size() || k < 2) Fail(ErrorKind::kProtocol, "misplaced base64 padding");
        ++pad;
        d = 0;
      } else {
        if (pad) Fail(ErrorKind::kProtocol, "misplaced base64 padding");
        d = kDecode[static_cast<unsigned char>(ch)];
        if (d < 0) Fail(ErrorKind::kProtocol, "invalid base64 character");
      }
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
  }
  return out;
}

std::string EncodeScoreRequest(std::span<const Image> images, const Target& target) {
  if (images.empty()) Fail(ErrorKind::kInvalidArgument, "empty score batch");
  const int h = images.front().height();
  const int w = images.front().width();
  std::string raw;
  raw.reserve(images.size() * images.front().data().size_bytes());
  for (const Image& im : images) {
    if (im.height() != h || im.width() != w) {
      Fail(ErrorKind::kInvalidDimension, "score batch mixes image sizes");
    }
    binio::AppendFloatsLe(raw, im.data());
  }
  nlohmann::json body = {
      {"shape", {images.size(), h, w, Image::kChannels}},
      {"dtype", "f32le"},
      {"data", Base64Encode(raw)},
      {"target", target.ToJson()},
  };
  return body.dump();
}

ScoreRequest DecodeScoreRequest(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("request is not JSON: ") + e.what());
  }
  ScoreRequest req;
  std::vector<std::int64_t> shape;
  std::string data;
  try {
    shape = j.at("shape").get<std::vector<std::int64_t>>();
    if (j.at("dtype").get<std::string>() != "f32le") {
      Fail(ErrorKind::kProtocol, "unsupported dtype");
    }
    data = Base64Decode(j.at("data").get<std::string>());
    req.target = Target::FromJson(j.at("target"));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("malformed request: ") + e.what());
  }
  if (shape.size() != 4 || shape[0] < 1 || shape[1] < 1 || shape[2] < 1 || shape[3] != 3 ||
      shape[1] > (1 << 16) || shape[2] > (1 << 16)) {
    Fail(ErrorKind::kProtocol, "bad shape");
  }
  const std::size_t per_image = static_cast<std::size_t>(shape[1]) * shape[2] * 3;
  if (data.size() != static_cast<std::size_t>(shape[0]) * per_image * 4) {
    Fail(ErrorKind::kProtocol, "payload length does not match shape");
  }
  req.images.reserve(shape[0]);
  std::vector<float> values(per_image);
  for (std::int64_t b = 0; b < shape[0]; ++b) {
    binio::DecodeFloatsLe(std::string_view(data).substr(b * per_image * 4, per_image * 4),
                          values);
    for (float v : values) {
      if (!(v >= 0.0f && v <= 1.0f)) Fail(ErrorKind::kProtocol, "pixel value outside [0,1]");
    }
    req.images.emplace_back(static_cast<int>(shape[1]), static_cast<int>(shape[2]), values);
  }
  return req;
}

std::string EncodeScoreResponse(std::span<const double> scores) {
  return nlohmann::json{{"scores", std::vector<double>(scores.begin(), scores.end())}}.dump();
}

std::vector<double> DecodeScoreResponse(std::string_view body, std::size_t expected) {
  std::vector<double> scores;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("malformed score response: ") + e.what());
  }
  if (j.is_object() && j.contains("error") && !j.contains("scores")) {
    Fail(ErrorKind::kRemote, "scorer reported: " + j["error"].dump());
  }
  try {
    scores = j.at("scores").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kProtocol, std::string("malformed score response: ") + e.what());
  }
  if (scores.size() != expected) {
    Fail(ErrorKind::kProtocol, "score response has " + std::to_string(scores.size()) +
                                   " entries, expected " + std::to_string(expected));
  }
  return scores;
}

std::string EncodeFrame(std::string_view payload) {
  if (payload.size() > kMaxFrameBytes) Fail(ErrorKind::kProtocol, "frame too large");
  std::string out;
  out.reserve(payload.size() + 4);
  binio::PutU32Le(out, static_cast<std::uint32_t>(payload.size()));
  out.append(payload);
  return out;
}

}  // namespace risekit::wire
