#include "koopgait/coder_backward.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace koopgait {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

EtGradients EtGradients::zeros(Index units) {
  return {MatrixXd::Zero(units, units), VectorXd::Zero(units), VectorXd::Zero(units), VectorXd::Zero(units)};
}

double EtGradients::squared_norm() const {
  return weight.squaredNorm() + bias.squaredNorm() + gamma.squaredNorm() + beta.squaredNorm();
}

void EtGradients::scale(double s) {
  weight *= s;
  bias *= s;
  gamma *= s;
  beta *= s;
}

namespace {

// Everything the backward pass of one ET application needs.
struct EtTape {
  MatrixXd input;
  MatrixXd xhat;   // normalised pre-activation
  MatrixXd out;    // block output (post tanh when enabled)
  VectorXd mean;
  VectorXd var;
  VectorXd inv_std;
};

MatrixXd et_forward(const EtBlock& b, const MatrixXd& x, EtTape& tape) {
  tape.input = x;
  MatrixXd z = b.weight * x;
  z.colwise() += b.bias;
  if (b.training_mode) {
    tape.mean = z.rowwise().mean();
    tape.var = (z.colwise() - tape.mean).array().square().rowwise().mean();
  } else {
    tape.mean = b.bn_mean;
    tape.var = b.bn_var;
  }
  tape.inv_std = (tape.var.array() + b.bn_eps).rsqrt();
  tape.xhat = ((z.colwise() - tape.mean).array().colwise() * tape.inv_std.array()).matrix();
  MatrixXd y = (tape.xhat.array().colwise() * b.bn_gamma.array()).matrix();
  y.colwise() += b.bn_beta;
  if (b.use_tanh) y = y.array().tanh().matrix();
  tape.out = y;
  return y;
}

// Accumulates parameter gradients into `acc` and returns dL/d(input).
MatrixXd et_backward(const EtBlock& b, const EtTape& tape, const MatrixXd& d_out, EtGradients& acc) {
  MatrixXd dy = d_out;
  if (b.use_tanh) dy = (dy.array() * (1.0 - tape.out.array().square())).matrix();

  acc.gamma += (dy.array() * tape.xhat.array()).rowwise().sum().matrix();
  acc.beta += dy.rowwise().sum();

  const MatrixXd dxhat = (dy.array().colwise() * b.bn_gamma.array()).matrix();
  MatrixXd dz;
  if (b.training_mode) {
    const double n = static_cast<double>(dy.cols());
    const VectorXd sum_dxhat = dxhat.rowwise().sum();
    const VectorXd sum_dxhat_xhat = (dxhat.array() * tape.xhat.array()).rowwise().sum().matrix();
    dz = (n * dxhat.array() - (tape.xhat.array().colwise() * sum_dxhat_xhat.array())).matrix();
    dz.colwise() -= sum_dxhat;
    dz = (dz.array().colwise() * (tape.inv_std.array() / n)).matrix();
  } else {
    dz = (dxhat.array().colwise() * tape.inv_std.array()).matrix();
  }

  acc.weight.noalias() += dz * tape.input.transpose();
  acc.bias += dz.rowwise().sum();
  return b.weight.transpose() * dz;
}

// Frame <-> half-vector batches. Column n is frame n.
struct Halves {
  MatrixXd a;  // (row+col) even
  MatrixXd b;  // (row+col) odd
};

Halves split(const std::vector<MatrixXd>& frames) {
  auto [a, b] = checkerboard_split<double>(std::span<const MatrixXd>(frames));
  return {std::move(a), std::move(b)};
}

std::vector<MatrixXd> merge(const Halves& h, Index w) { return checkerboard_merge<double>(h.a, h.b, w); }

// Decoder tape: Q = split(P), A = g(Q1), V2 = Q2 - A, B = f(V2), V1 = Q1 - B.
struct DecodeTape {
  EtTape g;
  EtTape f;
};

std::vector<MatrixXd> decode_forward(const CouplingCoder& coder, const std::vector<MatrixXd>& p, DecodeTape& tape) {
  Halves q = split(p);
  MatrixXd v2 = q.b - et_forward(coder.g(), q.a, tape.g);
  MatrixXd v1 = q.a - et_forward(coder.f(), v2, tape.f);
  return merge({std::move(v1), std::move(v2)}, coder.resolution());
}

// Given dL/d(decoded frames), returns dL/d(embedding inputs) and accumulates
// ET parameter gradients.
std::vector<MatrixXd> decode_backward(const CouplingCoder& coder, const DecodeTape& tape,
                                      const std::vector<MatrixXd>& d_out, CoderGradients& grads) {
  Halves dv = split(d_out);
  MatrixXd dq1 = dv.a;
  MatrixXd dv2 = dv.b + et_backward(coder.f(), tape.f, -dv.a, grads.f);
  MatrixXd dq2 = dv2;
  dq1 += et_backward(coder.g(), tape.g, -dv2, grads.g);
  return merge({std::move(dq1), std::move(dq2)}, coder.resolution());
}

}  // namespace

CoderGradients coder_backward(const CouplingCoder& coder, std::span<const GaitCycle> cycles, const MatrixXd& k,
                              const LossWeights& weights) {
  const Index w = coder.resolution();
  if (cycles.empty()) throw Error(ErrorCode::DimMismatch, "empty cycle batch");
  if (k.rows() != w || k.cols() != w) throw Error(ErrorCode::DimMismatch, "K must be w x w");
  if (weights.autoencoder < 0 || weights.linear < 0 || weights.prediction < 0)
    throw Error(ErrorCode::BadConfig, "loss weights must be non-negative");
  const std::size_t T = cycles.front().length();
  if (T < 2) throw Error(ErrorCode::DimMismatch, "cycles need at least 2 frames");

  // Flatten the batch: column n = b*T + t.
  std::vector<MatrixXd> frames;
  frames.reserve(cycles.size() * T);
  for (const auto& c : cycles) {
    if (c.length() != T) throw Error(ErrorCode::DimMismatch, "cycles in a batch must share T");
    for (const auto& f : c.frames) {
      if (f.rows() != w || f.cols() != w) throw Error(ErrorCode::DimMismatch, "frame does not match coder w");
      frames.push_back(f);
    }
  }
  const std::size_t n = frames.size();
  auto next = [T](std::size_t i) { return (i / T) * T + (i % T + 1) % T; };

  CoderGradients out;
  out.f = EtGradients::zeros(coder.half());
  out.g = EtGradients::zeros(coder.half());
  out.k = MatrixXd::Zero(w, w);

  // Encode: Y1 = U1 + f(U2), Y2 = U2 + g(Y1).
  EtTape tape_f, tape_g;
  Halves u = split(frames);
  MatrixXd y1 = u.a + et_forward(coder.f(), u.b, tape_f);
  MatrixXd y2 = u.b + et_forward(coder.g(), y1, tape_g);
  const std::vector<MatrixXd> x = merge({y1, y2}, w);
  out.f_batch_mean = tape_f.mean;
  out.f_batch_var = tape_f.var;
  out.g_batch_mean = tape_g.mean;
  out.g_batch_var = tape_g.var;

  std::vector<MatrixXd> dx(n, MatrixXd::Zero(w, w));

  // loss1 = 1/2 sum ||X_{t+1} - K X_t||^2
  for (std::size_t i = 0; i < n; ++i) {
    const MatrixXd e = k * x[i] - x[next(i)];
    out.loss1 += 0.5 * e.squaredNorm();
    if (weights.linear > 0.0) {
      out.k.noalias() += weights.linear * e * x[i].transpose();
      dx[i].noalias() += weights.linear * k.transpose() * e;
      dx[next(i)] -= weights.linear * e;
    }
  }

  // loss2 = 1/2 sum ||G_{t+1} - decode(K X_t)||^2
  {
    std::vector<MatrixXd> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = k * x[i];
    DecodeTape tape;
    const auto pred = decode_forward(coder, p, tape);
    std::vector<MatrixXd> d_pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      const MatrixXd r = pred[i] - frames[next(i)];
      out.loss2 += 0.5 * r.squaredNorm();
      d_pred[i] = weights.prediction * r;
    }
    if (weights.prediction > 0.0) {
      const auto dp = decode_backward(coder, tape, d_pred, out);
      for (std::size_t i = 0; i < n; ++i) {
        out.k.noalias() += dp[i] * x[i].transpose();
        dx[i].noalias() += k.transpose() * dp[i];
      }
    }
  }

  // loss0 = 1/2 sum ||G_t - decode(encode(G_t))||^2
  {
    DecodeTape tape;
    const auto recon = decode_forward(coder, x, tape);
    std::vector<MatrixXd> d_recon(n);
    for (std::size_t i = 0; i < n; ++i) {
      const MatrixXd r = recon[i] - frames[i];
      out.loss0 += 0.5 * r.squaredNorm();
      d_recon[i] = weights.autoencoder * r;
    }
    if (weights.autoencoder > 0.0) {
      const auto dxr = decode_backward(coder, tape, d_recon, out);
      for (std::size_t i = 0; i < n; ++i) dx[i] += dxr[i];
    }
  }

  out.total = weights.autoencoder * out.loss0 + weights.linear * out.loss1 + weights.prediction * out.loss2;
  if (!std::isfinite(out.total) || !std::isfinite(out.loss0) || !std::isfinite(out.loss1) ||
      !std::isfinite(out.loss2))
    throw Error(ErrorCode::NonFiniteLoss, "loss evaluated to a non-finite value");

  // Back through the encoder. U1/U2 are data, so only parameter gradients matter.
  Halves dy = split(dx);
  dy.a += et_backward(coder.g(), tape_g, dy.b, out.g);
  et_backward(coder.f(), tape_f, dy.a, out.f);
  return out;
}

void update_running_stats(CouplingCoder& coder, const CoderGradients& grads) {
  auto fold = [](EtBlock& b, const VectorXd& mean, const VectorXd& var) {
    if (mean.size() != b.units() || var.size() != b.units()) return;
    b.bn_mean = b.bn_momentum * b.bn_mean + (1.0 - b.bn_momentum) * mean;
    b.bn_var = b.bn_momentum * b.bn_var + (1.0 - b.bn_momentum) * var;
  };
  fold(coder.f(), grads.f_batch_mean, grads.f_batch_var);
  fold(coder.g(), grads.g_batch_mean, grads.g_batch_var);
}

}  // namespace koopgait
