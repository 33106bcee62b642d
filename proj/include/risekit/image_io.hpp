#pragma once

#include <filesystem>
#include <optional>

#include "risekit/image.hpp"

namespace risekit {

struct ImageSize {
  int height = 224;
  int width = 224;
};

// Decodes a PNG or JPEG file (detected by signature) to [0,1] floats.
// Grayscale is replicated to three channels and alpha is dropped. When `size`
// is given the image is bilinearly resized to it. Corrupt or truncated files
// raise an io error naming the path.
Image LoadImage(const std::filesystem::path& path,
                std::optional<ImageSize> size = std::nullopt);

// Writes an 8-bit RGB PNG.
void SaveImage(const Image& image, const std::filesystem::path& path);

// Raw saliency dump: "RSAL", u32 height, u32 width, u32 reserved = 0, then
// height * width little-endian float32 values.
void WriteRsal(const SaliencyMap& saliency, const std::filesystem::path& path);
SaliencyMap ReadRsal(const std::filesystem::path& path);

}  // namespace risekit
