#include "pnp/image_io.hpp"

#include <png.h>

#include <cmath>
#include <fstream>
#include <iterator>

namespace pnp {
namespace {

constexpr char kMagic[4] = {'P', 'N', 'P', 'F'};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

}  // namespace

wire::Bytes encode_raw(const ImageF& image) {
  wire::Bytes buf(kMagic, kMagic + 4);
  wire::append_u32(buf, static_cast<std::uint32_t>(image.height()));
  wire::append_u32(buf, static_cast<std::uint32_t>(image.width()));
  wire::append_u32(buf, static_cast<std::uint32_t>(image.channels()));
  wire::append_f32(buf, {image.data(), static_cast<std::size_t>(image.size())});
  return buf;
}

ImageF decode_raw(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
    throw IoError("not a PNPF stream");
  const Shape shape{wire::read_u32(bytes.subspan(4, 4)), wire::read_u32(bytes.subspan(8, 4)),
                    wire::read_u32(bytes.subspan(12, 4))};
  if (shape.channels != 1 && shape.channels != 3)
    throw IoError("unsupported channel count " + std::to_string(shape.channels));
  const auto n = static_cast<std::size_t>(shape.size());
  if (bytes.size() != 16 + 4 * n) throw IoError("PNPF payload length mismatch");
  ImageF image(shape);
  wire::read_f32(bytes.subspan(16), {image.data(), n});
  return image;
}

void store_raw(const ImageTensor& image, const std::filesystem::path& path) {
  write_file(path, encode_raw(image.cast<float>()));
}

ImageTensor load_raw(const std::filesystem::path& path) {
  return decode_raw(read_file(path)).cast<double>();
}

void store_png(const ImageTensor& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3)
    throw IoError("PNG supports 1 or 3 channels, got " + std::to_string(image.channels()));
  std::vector<png_byte> pixels(static_cast<std::size_t>(image.size()));
  for (Index i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 1.0);
    pixels[static_cast<std::size_t>(i)] = static_cast<png_byte>(std::floor(v * 255.0 + 0.5));
  }
  png_image info{};
  info.version = PNG_IMAGE_VERSION;
  info.width = static_cast<png_uint_32>(image.width());
  info.height = static_cast<png_uint_32>(image.height());
  info.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&info, path.c_str(), 0, pixels.data(), 0, nullptr))
    throw IoError("PNG write failed for " + path.string() + ": " + info.message);
}

ImageTensor load_png(const std::filesystem::path& path) {
  png_image info{};
  info.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&info, path.c_str()))
    throw IoError("cannot read PNG " + path.string() + ": " + info.message);
  const bool color = (info.format & PNG_FORMAT_FLAG_COLOR) != 0;
  info.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const Index channels = color ? 3 : 1;
  std::vector<png_byte> pixels(PNG_IMAGE_SIZE(info));
  if (!png_image_finish_read(&info, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&info);
    throw IoError("PNG decode failed for " + path.string() + ": " + info.message);
  }
  ImageTensor image(info.height, info.width, channels);
  for (Index i = 0; i < image.size(); ++i) image[i] = pixels[static_cast<std::size_t>(i)] / 255.0;
  return image;
}

void store_image(const ImageTensor& image, const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return store_png(image, path);
  if (ext == ".pnpf") return store_raw(image, path);
  throw IoError("unsupported image format: " + path.string());
}

ImageTensor load_image(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pnpf") return load_raw(path);
  throw IoError("unsupported image format: " + path.string());
}

}  // namespace pnp
