#include "koopgait/tensor.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "koopgait/error.hpp"

namespace koopgait {

namespace {

constexpr char kMagic[4] = {'I', 'K', 'A', '1'};

static_assert(std::endian::native == std::endian::little,
              "IKA1 codec assumes a little-endian host");

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void check_shape(std::span<const std::uint32_t> shape) {
  if (shape.empty() || shape.size() > 3)
    throw Error(ErrorCode::DimMismatch,
                "tensor must have 1 to 3 dimensions, got " + std::to_string(shape.size()));
  for (auto e : shape)
    if (e == 0) throw Error(ErrorCode::DimMismatch, "tensor extents must be >= 1");
}

}  // namespace

Tensor::Tensor(std::vector<std::uint32_t> extents, std::vector<float> values)
    : shape(std::move(extents)), data(std::move(values)) {
  check_shape(shape);
  if (element_count(shape) != data.size())
    throw Error(ErrorCode::DimMismatch, "extents do not match value count");
}

std::size_t element_count(std::span<const std::uint32_t> shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::vector<std::uint8_t> encode_ika1(const Tensor& t) {
  check_shape(t.shape);
  if (element_count(t.shape) != t.data.size())
    throw Error(ErrorCode::DimMismatch, "extents do not match value count");
  std::vector<std::uint8_t> out;
  out.reserve(5 + 4 * t.shape.size() + 4 * t.data.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(t.shape.size()));
  for (auto e : t.shape) put_u32(out, e);
  for (float v : t.data) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Tensor decode_ika1(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::BadMagic, "missing IKA1 magic");
  const std::size_t ndim = bytes[4];
  if (ndim == 0 || ndim > 3)
    throw Error(ErrorCode::DimMismatch, "ndim must be 1..3, got " + std::to_string(ndim));
  const std::size_t header = 5 + 4 * ndim;
  if (bytes.size() < header) throw Error(ErrorCode::DimMismatch, "truncated extents");
  Tensor t;
  t.shape.resize(ndim);
  for (std::size_t i = 0; i < ndim; ++i) t.shape[i] = get_u32(bytes.data() + 5 + 4 * i);
  check_shape(t.shape);
  const std::size_t n = element_count(t.shape);
  if (bytes.size() - header != 4 * n)
    throw Error(ErrorCode::DimMismatch, "payload holds " + std::to_string(bytes.size() - header) +
                                            " bytes, extents require " + std::to_string(4 * n));
  t.data.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    t.data[i] = std::bit_cast<float>(get_u32(bytes.data() + header + 4 * i));
  return t;
}

void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  const auto bytes = encode_ika1(t);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ika1(bytes);
}

Tensor to_tensor(const Eigen::MatrixXd& m) {
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(static_cast<float>(m(r, c)));
  return t;
}

Tensor to_tensor(const Eigen::VectorXd& v) {
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(v.size())};
  t.data.reserve(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) t.data.push_back(static_cast<float>(v(i)));
  return t;
}

Tensor to_tensor(std::span<const Eigen::MatrixXd> frames) {
  if (frames.empty()) throw Error(ErrorCode::DimMismatch, "cannot build tensor from zero frames");
  const auto rows = frames.front().rows();
  const auto cols = frames.front().cols();
  Tensor t;
  t.shape = {static_cast<std::uint32_t>(frames.size()), static_cast<std::uint32_t>(rows),
             static_cast<std::uint32_t>(cols)};
  t.data.reserve(frames.size() * rows * cols);
  for (const auto& f : frames) {
    if (f.rows() != rows || f.cols() != cols)
      throw Error(ErrorCode::DimMismatch, "frames differ in shape");
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) t.data.push_back(static_cast<float>(f(r, c)));
  }
  return t;
}

Eigen::MatrixXd to_matrix(const Tensor& t) {
  if (t.ndim() != 2) throw Error(ErrorCode::DimMismatch, "expected a 2-d tensor");
  Eigen::MatrixXd m(t.shape[0], t.shape[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
  return m;
}

Eigen::VectorXd to_vector(const Tensor& t) {
  if (t.ndim() != 1) throw Error(ErrorCode::DimMismatch, "expected a 1-d tensor");
  Eigen::VectorXd v(t.shape[0]);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = t.data[i];
  return v;
}

std::vector<Eigen::MatrixXd> to_frames(const Tensor& t) {
  if (t.ndim() == 2) return {to_matrix(t)};
  if (t.ndim() != 3) throw Error(ErrorCode::DimMismatch, "expected a 3-d tensor");
  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(t.shape[0]);
  std::size_t k = 0;
  for (std::uint32_t i = 0; i < t.shape[0]; ++i) {
    Eigen::MatrixXd m(t.shape[1], t.shape[2]);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = t.data[k++];
    frames.push_back(std::move(m));
  }
  return frames;
}

}  // namespace koopgait
