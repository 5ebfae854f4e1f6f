#pragma once

// Invertible checkerboard-coupling autoencoder.
//
// A frame is split by pixel parity into U1 ((row+col) even) and U2 (odd).
// Encoding applies one additive coupling block,
//
//   Y1 = U1 + f(U2),   Y2 = U2 + g(Y1),
//
// and writes Y1/Y2 back into the same parity positions, so the embedding
// keeps the w x w frame shape. Decoding subtracts in reverse order and is
// exact for any f, g. Each of f, g is an "ET" block: dense layer followed
// by batch normalisation (optionally tanh).

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "koopgait/error.hpp"

namespace koopgait {

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Checkerboard partition

template <typename Scalar>
std::pair<VectorT<Scalar>, VectorT<Scalar>> checkerboard_split(const MatrixT<Scalar>& frame) {
  if (frame.rows() != frame.cols()) throw Error(ErrorCode::DimMismatch, "frame must be square");
  if (frame.rows() % 2 != 0) throw Error(ErrorCode::OddResolution, "checkerboard split needs an even w");
  const Eigen::Index w = frame.rows();
  VectorT<Scalar> u1(w * w / 2), u2(w * w / 2);
  Eigen::Index i1 = 0, i2 = 0;
  for (Eigen::Index r = 0; r < w; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      if ((r + c) % 2 == 0)
        u1(i1++) = frame(r, c);
      else
        u2(i2++) = frame(r, c);
    }
  return {std::move(u1), std::move(u2)};
}

template <typename Scalar>
MatrixT<Scalar> checkerboard_merge(const VectorT<Scalar>& u1, const VectorT<Scalar>& u2, Eigen::Index w) {
  if (w % 2 != 0) throw Error(ErrorCode::OddResolution, "checkerboard merge needs an even w");
  if (u1.size() != w * w / 2 || u2.size() != w * w / 2)
    throw Error(ErrorCode::DimMismatch, "checkerboard halves must each hold w*w/2 values");
  MatrixT<Scalar> frame(w, w);
  Eigen::Index i1 = 0, i2 = 0;
  for (Eigen::Index r = 0; r < w; ++r)
    for (Eigen::Index c = 0; c < w; ++c) frame(r, c) = (r + c) % 2 == 0 ? u1(i1++) : u2(i2++);
  return frame;
}

// Batched forms: column n of each half holds frame n.
template <typename Scalar>
std::pair<MatrixT<Scalar>, MatrixT<Scalar>> checkerboard_split(std::span<const MatrixT<Scalar>> frames) {
  if (frames.empty()) throw Error(ErrorCode::DimMismatch, "empty frame batch");
  const Eigen::Index w = frames.front().rows();
  MatrixT<Scalar> u1(w * w / 2, static_cast<Eigen::Index>(frames.size()));
  MatrixT<Scalar> u2(w * w / 2, static_cast<Eigen::Index>(frames.size()));
  for (std::size_t n = 0; n < frames.size(); ++n) {
    if (frames[n].rows() != w || frames[n].cols() != w)
      throw Error(ErrorCode::DimMismatch, "frames in a batch must share their shape");
    auto [a, b] = checkerboard_split<Scalar>(frames[n]);
    u1.col(static_cast<Eigen::Index>(n)) = a;
    u2.col(static_cast<Eigen::Index>(n)) = b;
  }
  return {std::move(u1), std::move(u2)};
}

template <typename Scalar>
std::vector<MatrixT<Scalar>> checkerboard_merge(const MatrixT<Scalar>& u1, const MatrixT<Scalar>& u2,
                                                Eigen::Index w) {
  std::vector<MatrixT<Scalar>> frames;
  frames.reserve(u1.cols());
  for (Eigen::Index n = 0; n < u1.cols(); ++n)
    frames.push_back(checkerboard_merge<Scalar>(VectorT<Scalar>(u1.col(n)), VectorT<Scalar>(u2.col(n)), w));
  return frames;
}

// ---------------------------------------------------------------------------
// ET block: batchnorm(W x + b), optionally followed by tanh.

template <typename Scalar>
struct BasicEtBlock {
  MatrixT<Scalar> weight;
  VectorT<Scalar> bias;
  VectorT<Scalar> bn_gamma;
  VectorT<Scalar> bn_beta;
  VectorT<Scalar> bn_mean;
  VectorT<Scalar> bn_var;
  Scalar bn_eps = Scalar(1e-5);
  Scalar bn_momentum = Scalar(0.9);
  bool training_mode = false;
  bool use_tanh = false;

  BasicEtBlock() = default;

  // f == 0: zero dense layer with identity batch-norm statistics.
  explicit BasicEtBlock(Eigen::Index units)
      : weight(MatrixT<Scalar>::Zero(units, units)),
        bias(VectorT<Scalar>::Zero(units)),
        bn_gamma(VectorT<Scalar>::Ones(units)),
        bn_beta(VectorT<Scalar>::Zero(units)),
        bn_mean(VectorT<Scalar>::Zero(units)),
        bn_var(VectorT<Scalar>::Ones(units)) {}

  Eigen::Index units() const { return bias.size(); }

  // Columns are samples. In training mode the normalisation uses the
  // statistics of this batch; otherwise the running statistics.
  MatrixT<Scalar> apply(const MatrixT<Scalar>& x) const {
    if (x.rows() != units())
      throw Error(ErrorCode::DimMismatch, "ET input has " + std::to_string(x.rows()) + " rows, block expects " +
                                              std::to_string(units()));
    MatrixT<Scalar> z = weight * x;
    z.colwise() += bias;
    VectorT<Scalar> mean, var;
    if (training_mode) {
      mean = z.rowwise().mean();
      var = (z.colwise() - mean).array().square().rowwise().mean();
    } else {
      mean = bn_mean;
      var = bn_var;
    }
    const VectorT<Scalar> scale = bn_gamma.array() / (var.array() + bn_eps).sqrt();
    MatrixT<Scalar> y = ((z.colwise() - mean).array().colwise() * scale.array()).matrix();
    y.colwise() += bn_beta;
    if (use_tanh) y = y.array().tanh().matrix();
    return y;
  }

  VectorT<Scalar> apply(const VectorT<Scalar>& x) const { return apply(MatrixT<Scalar>(x)).col(0); }

  template <typename To>
  BasicEtBlock<To> cast() const {
    BasicEtBlock<To> out;
    out.weight = weight.template cast<To>();
    out.bias = bias.template cast<To>();
    out.bn_gamma = bn_gamma.template cast<To>();
    out.bn_beta = bn_beta.template cast<To>();
    out.bn_mean = bn_mean.template cast<To>();
    out.bn_var = bn_var.template cast<To>();
    out.bn_eps = static_cast<To>(bn_eps);
    out.bn_momentum = static_cast<To>(bn_momentum);
    out.training_mode = training_mode;
    out.use_tanh = use_tanh;
    return out;
  }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(weight.size() + bias.size() + bn_gamma.size() + bn_beta.size());
  }
};

template <typename Scalar>
MatrixT<Scalar> et_apply(const BasicEtBlock<Scalar>& block, const MatrixT<Scalar>& x) {
  return block.apply(x);
}

// ---------------------------------------------------------------------------
// Coupling coder

template <typename Scalar>
class BasicCouplingCoder {
 public:
  using Mat = MatrixT<Scalar>;

  BasicCouplingCoder() = default;

  // Zero ET blocks: encode and decode are both the identity.
  explicit BasicCouplingCoder(Eigen::Index w) : w_(w), f_(w * w / 2), g_(w * w / 2) {
    if (w <= 0 || w % 2 != 0) throw Error(ErrorCode::OddResolution, "coder resolution must be even");
  }

  BasicCouplingCoder(Eigen::Index w, BasicEtBlock<Scalar> f, BasicEtBlock<Scalar> g)
      : w_(w), f_(std::move(f)), g_(std::move(g)) {
    if (w <= 0 || w % 2 != 0) throw Error(ErrorCode::OddResolution, "coder resolution must be even");
    if (f_.units() != half() || g_.units() != half())
      throw Error(ErrorCode::DimMismatch, "ET blocks must map w*w/2 values to w*w/2 values");
  }

  Eigen::Index resolution() const { return w_; }
  Eigen::Index half() const { return w_ * w_ / 2; }

  const BasicEtBlock<Scalar>& f() const { return f_; }
  const BasicEtBlock<Scalar>& g() const { return g_; }
  BasicEtBlock<Scalar>& f() { return f_; }
  BasicEtBlock<Scalar>& g() { return g_; }

  void set_training(bool on) {
    f_.training_mode = on;
    g_.training_mode = on;
  }
  bool training() const { return f_.training_mode; }

  std::size_t parameter_count() const { return f_.parameter_count() + g_.parameter_count(); }

  Mat encode(const Mat& frame) const {
    check_frame(frame);
    return encode_batch(std::span<const Mat>(&frame, 1)).front();
  }

  Mat decode(const Mat& embedding) const {
    check_frame(embedding);
    return decode_batch(std::span<const Mat>(&embedding, 1)).front();
  }

  // Batched transforms; in training mode the batch defines the BN statistics.
  std::vector<Mat> encode_batch(std::span<const Mat> frames) const {
    auto [u1, u2] = checkerboard_split<Scalar>(frames);
    check_batch(u1);
    Mat y1 = u1 + f_.apply(u2);
    Mat y2 = u2 + g_.apply(y1);
    return checkerboard_merge<Scalar>(y1, y2, w_);
  }

  std::vector<Mat> decode_batch(std::span<const Mat> embeddings) const {
    auto [y1, y2] = checkerboard_split<Scalar>(embeddings);
    check_batch(y1);
    Mat u2 = y2 - g_.apply(y1);
    Mat u1 = y1 - f_.apply(u2);
    return checkerboard_merge<Scalar>(u1, u2, w_);
  }

  template <typename To>
  BasicCouplingCoder<To> cast() const {
    return BasicCouplingCoder<To>(w_, f_.template cast<To>(), g_.template cast<To>());
  }

 private:
  void check_frame(const Mat& m) const {
    if (m.rows() != w_ || m.cols() != w_)
      throw Error(ErrorCode::DimMismatch, "coder expects " + std::to_string(w_) + "x" + std::to_string(w_) +
                                              " frames, got " + std::to_string(m.rows()) + "x" +
                                              std::to_string(m.cols()));
  }
  void check_batch(const Mat& half_batch) const {
    if (half_batch.rows() != half())
      throw Error(ErrorCode::DimMismatch, "frame resolution does not match coder");
  }

  Eigen::Index w_ = 0;
  BasicEtBlock<Scalar> f_;
  BasicEtBlock<Scalar> g_;
};

using EtBlock = BasicEtBlock<double>;
using CouplingCoder = BasicCouplingCoder<double>;

struct CoderOptions {
  bool use_tanh = false;
  double bn_eps = 1e-5;
  double bn_momentum = 0.9;
};

// Dense weights ~ U(+-sqrt(6/(fan_in+fan_out))), bias 0, gamma 1, beta 0,
// running mean 0 / var 1.
CouplingCoder make_coder(Eigen::Index w, std::uint64_t seed, const CoderOptions& opts = {});

// Trainable parameter count for resolution w: 2 * (half^2 + 3*half).
std::size_t expected_parameter_count(Eigen::Index w);

}  // namespace koopgait

#include <filesystem>

namespace koopgait {

// Checkpoint layout: <dir>/coder.json plus one IKA1 file per parameter
// (f.weight.ika, f.bias.ika, f.bn_gamma.ika, ... and the same for g).
void save_coder(const CouplingCoder& coder, const std::filesystem::path& dir);
CouplingCoder load_coder(const std::filesystem::path& dir);

}  // namespace koopgait
