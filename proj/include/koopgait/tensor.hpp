#pragma once

// Dense float32 tensors and the IKA1 on-disk format.
//
// IKA1 layout (all little-endian):
//   bytes 0..3   magic "IKA1"
//   byte  4      u8 ndim (1..3)
//   ndim x u32   extents
//   payload      row-major IEEE-754 binary32 values

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace koopgait {

struct Tensor {
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::uint32_t> extents, std::vector<float> values);

  std::size_t size() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(std::span<const std::uint32_t> shape);

void save_tensor(const Tensor& t, const std::filesystem::path& path);
Tensor load_tensor(const std::filesystem::path& path);

// Byte-level codec used by save/load; exposed for tests.
std::vector<std::uint8_t> encode_ika1(const Tensor& t);
Tensor decode_ika1(std::span<const std::uint8_t> bytes);

// Conversions between row-major tensors and Eigen types.
Tensor to_tensor(const Eigen::MatrixXd& m);
Tensor to_tensor(const Eigen::VectorXd& v);
Tensor to_tensor(std::span<const Eigen::MatrixXd> frames);
Eigen::MatrixXd to_matrix(const Tensor& t);
Eigen::VectorXd to_vector(const Tensor& t);
std::vector<Eigen::MatrixXd> to_frames(const Tensor& t);

}  // namespace koopgait
