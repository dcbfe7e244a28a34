#include <cstddef>
#include <cstdio>

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include "segagent/error.hpp"
#include "segagent/image.hpp"

namespace segagent {

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
constexpr std::uint8_t kJpegSignature[3] = {0xFF, 0xD8, 0xFF};

bool has_prefix(std::span<const std::uint8_t> bytes, std::span<const std::uint8_t> prefix) {
  return bytes.size() >= prefix.size() &&
         std::memcmp(bytes.data(), prefix.data(), prefix.size()) == 0;
}

struct PngHeader {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int bit_depth = 0;
  int color_type = 0;
};

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// IHDR is required to be the first chunk, at a fixed offset.
std::optional<PngHeader> read_png_header(std::span<const std::uint8_t> bytes) {
  if (!has_prefix(bytes, kPngSignature) || bytes.size() < 33) return std::nullopt;
  if (std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) return std::nullopt;
  return PngHeader{read_be32(bytes.data() + 16), read_be32(bytes.data() + 20), bytes[24],
                   bytes[25]};
}

std::vector<std::uint8_t> png_write(const std::uint8_t* data, int width, int height,
                                    std::uint32_t format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::BadImage, std::string("png encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::BadImage, std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> png_read(std::span<const std::uint8_t> bytes, std::uint32_t format,
                                   ImageDims& dims) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::BadImage, std::string("png decode failed: ") + image.message);
  }
  image.format = format;
  std::vector<std::uint8_t> out(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(ErrorCode::BadImage, std::string("png decode failed: ") + image.message);
  }
  dims = ImageDims{static_cast<int>(image.width), static_cast<int>(image.height)};
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Image decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> pixels;
  int width = 0;
  int height = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorCode::BadImage, std::string("jpeg decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  width = static_cast<int>(cinfo.output_width);
  height = static_cast<int>(cinfo.output_height);
  pixels.resize(static_cast<std::size_t>(width) * height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return Image(ImageDims{width, height}, std::move(pixels));
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  return png_write(img.pixels().data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (has_prefix(bytes, kPngSignature)) {
    ImageDims dims;
    auto pixels = png_read(bytes, PNG_FORMAT_RGB, dims);
    return Image(dims, std::move(pixels));
  }
  if (has_prefix(bytes, kJpegSignature)) return decode_jpeg(bytes);
  throw Error(ErrorCode::BadImage, "unrecognised image format (expected PNG or JPEG)");
}

std::vector<std::uint8_t> mask_encode(const BinaryMask& mask) {
  std::vector<std::uint8_t> gray(mask.bits().size());
  std::transform(mask.bits().begin(), mask.bits().end(), gray.begin(),
                 [](std::uint8_t b) { return static_cast<std::uint8_t>(b ? 255 : 0); });
  return png_write(gray.data(), mask.width(), mask.height(), PNG_FORMAT_GRAY);
}

BinaryMask mask_decode(std::span<const std::uint8_t> bytes) {
  const auto header = read_png_header(bytes);
  if (!header) throw Error(ErrorCode::BadMaskFormat, "mask is not a PNG");
  if (header->color_type != PNG_COLOR_TYPE_GRAY) {
    throw Error(ErrorCode::BadMaskFormat,
                "mask must be single-channel grayscale (PNG colour type " +
                    std::to_string(header->color_type) + ")");
  }
  if (header->bit_depth != 8) {
    throw Error(ErrorCode::BadMaskFormat,
                "mask must be 8-bit (got " + std::to_string(header->bit_depth) + ")");
  }
  ImageDims dims;
  std::vector<std::uint8_t> gray;
  try {
    gray = png_read(bytes, PNG_FORMAT_GRAY, dims);
  } catch (const Error& e) {
    throw Error(ErrorCode::BadMaskFormat, e.what());
  }
  for (auto& v : gray) v = v >= 128 ? 1 : 0;
  return BinaryMask(dims, std::move(gray));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Config, "short write to " + path.string());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(ErrorCode::BadImage, path.string() + ": " + e.what());
  }
}

BinaryMask load_mask(const std::filesystem::path& path) { return mask_decode(read_file(path)); }

}  // namespace segagent
