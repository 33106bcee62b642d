#include "risekit/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "risekit/binary_io.hpp"
#include "risekit/error.hpp"

namespace risekit {

namespace {

std::vector<unsigned char> ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open image '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image FromRgb8(int height, int width, const std::vector<unsigned char>& rgb) {
  std::vector<float> data(rgb.size());
  for (std::size_t i = 0; i < rgb.size(); ++i) data[i] = rgb[i] / 255.0f;
  return Image(height, width, std::move(data));
}

Image DecodePng(const std::vector<unsigned char>& bytes,
                const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    const std::string msg = img.message;
    png_image_free(&img);
    Fail(ErrorKind::kIo, "cannot decode PNG '" + path.string() + "': " + msg);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> rgb(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    Fail(ErrorKind::kIo, "cannot decode PNG '" + path.string() + "': " + msg);
  }
  const int h = static_cast<int>(img.height);
  const int w = static_cast<int>(img.width);
  png_image_free(&img);
  return FromRgb8(h, w, rgb);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void JpegErrorExit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Warnings (e.g. premature end of data) are promoted to errors so a
// truncated file never yields a partially grey image.
void JpegEmitMessage(j_common_ptr cinfo, int msg_level) {
  if (msg_level < 0) JpegErrorExit(cinfo);
}

Image DecodeJpeg(const std::vector<unsigned char>& bytes,
                 const std::filesystem::path& path) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = JpegErrorExit;
  err.base.emit_message = JpegEmitMessage;

  std::vector<unsigned char> rgb;
  int h = 0;
  int w = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    Fail(ErrorKind::kIo, "cannot decode JPEG '" + path.string() + "': " +
                             std::string(err.message));
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = static_cast<int>(cinfo.output_height);
  w = static_cast<int>(cinfo.output_width);
  rgb.resize(static_cast<std::size_t>(h) * w * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = rgb.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return FromRgb8(h, w, rgb);
}

}  // namespace

Image LoadImage(const std::filesystem::path& path,
                std::optional<ImageSize> size) {
  const auto bytes = ReadFileBytes(path);
  static constexpr unsigned char kPngSig[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  Image image;
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin())) {
    image = DecodePng(bytes, path);
  } else if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    image = DecodeJpeg(bytes, path);
  } else {
    Fail(ErrorKind::kIo, "'" + path.string() + "' is not a PNG or JPEG file");
  }
  if (size) image = ResizeBilinear(image, size->height, size->width);
  return image;
}

void SaveImage(const Image& image, const std::filesystem::path& path) {
  std::vector<unsigned char> rgb(image.data().size());
  auto src = image.data();
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    rgb[i] = static_cast<unsigned char>(std::lround(std::clamp(src[i], 0.0f, 1.0f) * 255.0f));
  }
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    Fail(ErrorKind::kIo, "cannot write PNG '" + path.string() + "': " + msg);
  }
}

void WriteRsal(const SaliencyMap& saliency, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out.write("RSAL", 4);
  binio::WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(saliency.height()));
  binio::WriteLe<std::uint32_t>(out, static_cast<std::uint32_t>(saliency.width()));
  binio::WriteLe<std::uint32_t>(out, 0);
  binio::WriteFloatsLe(out, saliency.data());
  if (!out.flush()) Fail(ErrorKind::kIo, "write failed for '" + path.string() + "'");
}

SaliencyMap ReadRsal(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  const std::string ctx = "RSAL '" + path.string() + "'";
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != "RSAL") {
    Fail(ErrorKind::kIo, ctx + ": bad magic");
  }
  const auto h = binio::ReadLe<std::uint32_t>(in, ctx);
  const auto w = binio::ReadLe<std::uint32_t>(in, ctx);
  const auto reserved = binio::ReadLe<std::uint32_t>(in, ctx);
  if (reserved != 0) Fail(ErrorKind::kIo, ctx + ": nonzero reserved field");
  if (h == 0 || w == 0 || h > (1u << 16) || w > (1u << 16)) {
    Fail(ErrorKind::kIo, ctx + ": implausible dimensions");
  }
  SaliencyMap map(static_cast<int>(h), static_cast<int>(w));
  binio::ReadFloatsLe(in, map.data(), ctx);
  return map;
}

}  // namespace risekit
