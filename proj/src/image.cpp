#include "koopgait/image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <vector>

#include <png.h>

#include "koopgait/error.hpp"

namespace koopgait {

namespace {

[[noreturn]] void unreadable(const std::filesystem::path& path, const std::string& why) {
  throw Error(ErrorCode::UnreadableImage, path.string() + ": " + why);
}

// Tokenizer for the PGM header, which allows '#' comments between fields.
class PgmHeader {
 public:
  explicit PgmHeader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  bool next_token(std::string& tok) {
    tok.clear();
    while (pos_ < bytes_.size()) {
      const char c = static_cast<char>(bytes_[pos_]);
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
      tok.push_back(static_cast<char>(bytes_[pos_++]));
    return !tok.empty();
  }

  bool next_int(long& value) {
    std::string tok;
    if (!next_token(tok)) return false;
    char* end = nullptr;
    value = std::strtol(tok.c_str(), &end, 10);
    return end && *end == '\0';
  }

  std::size_t pos() const { return pos_; }
  void skip_one() { ++pos_; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

Eigen::MatrixXd read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) unreadable(path, "cannot open");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PgmHeader hdr(bytes);
  std::string magic;
  if (!hdr.next_token(magic) || (magic != "P2" && magic != "P5")) unreadable(path, "not a P2/P5 PGM");
  long width = 0, height = 0, maxval = 0;
  if (!hdr.next_int(width) || !hdr.next_int(height) || !hdr.next_int(maxval))
    unreadable(path, "malformed header");
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) unreadable(path, "bad dimensions");

  Eigen::MatrixXd img(height, width);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P2") {
    for (long r = 0; r < height; ++r)
      for (long c = 0; c < width; ++c) {
        long v = 0;
        if (!hdr.next_int(v) || v < 0 || v > maxval) unreadable(path, "truncated or invalid pixel data");
        img(r, c) = static_cast<double>(v) * scale;
      }
    return img;
  }
  hdr.skip_one();  // single whitespace after maxval
  const std::size_t bpp = maxval < 256 ? 1 : 2;
  const std::size_t need = static_cast<std::size_t>(width * height) * bpp;
  if (bytes.size() < hdr.pos() || bytes.size() - hdr.pos() < need) unreadable(path, "truncated pixel data");
  const unsigned char* p = bytes.data() + hdr.pos();
  for (long r = 0; r < height; ++r)
    for (long c = 0; c < width; ++c) {
      unsigned v = bpp == 1 ? *p : (static_cast<unsigned>(p[0]) << 8) | p[1];
      p += bpp;
      img(r, c) = static_cast<double>(v) * scale;
    }
  return img;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

Eigen::MatrixXd read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) unreadable(path, "cannot open");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) unreadable(path, "not a PNG");

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) unreadable(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    unreadable(path, "libpng init failed");
  }
  Eigen::MatrixXd img;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    unreadable(path, "corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) rows[r] = buffer.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);

  img.resize(height, width);
  for (png_uint_32 r = 0; r < height; ++r)
    for (png_uint_32 c = 0; c < width; ++c) img(r, c) = rows[r][c] / 255.0;
  return img;
}

std::string lower_ext(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  return ext == ".pgm" || ext == ".png";
}

Eigen::MatrixXd read_gray_image(const std::filesystem::path& path) {
  const auto ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm") return read_pgm(path);
  unreadable(path, "unsupported image extension");
}

void write_pgm(const Eigen::MatrixXd& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << "P5\n" << image.cols() << ' ' << image.rows() << "\n255\n";
  for (Eigen::Index r = 0; r < image.rows(); ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp(image(r, c), 0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void write_heatmap_pgm(const Eigen::MatrixXd& map, const std::filesystem::path& path) {
  const double peak = map.size() ? map.maxCoeff() : 0.0;
  write_pgm(peak > 0.0 ? Eigen::MatrixXd(map / peak) : Eigen::MatrixXd::Zero(map.rows(), map.cols()), path);
}

}  // namespace koopgait
