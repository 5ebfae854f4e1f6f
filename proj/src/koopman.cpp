#include "koopgait/koopman.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "koopgait/error.hpp"
#include "koopgait/optim.hpp"

namespace koopgait {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;

namespace {

void check_square(const MatrixXd& k, const char* what) {
  if (k.rows() != k.cols() || k.rows() == 0) throw Error(ErrorCode::DimMismatch, std::string(what) + " must be square");
}

void check_cycle(const MatrixXd& k, const EmbeddingCycle& x) {
  check_square(k, "K");
  if (x.size() < 2) throw Error(ErrorCode::DimMismatch, "embedding cycle needs T >= 2");
  for (const auto& f : x)
    if (f.rows() != k.cols() || f.cols() != k.cols())
      throw Error(ErrorCode::DimMismatch, "embedding frames must be w x w with K w x w");
}

}  // namespace

MatrixXd advance(const MatrixXd& k, const MatrixXd& x, int m) {
  check_square(k, "K");
  if (x.rows() != k.cols()) throw Error(ErrorCode::DimMismatch, "K and X dimensions disagree");
  if (m < 0) throw Error(ErrorCode::BadSpec, "step count must be >= 0");
  MatrixXd out = x;
  for (int i = 0; i < m; ++i) out = k * out;
  return out;
}

EmbeddingCycle encode_cycle(const CouplingCoder& coder, const GaitCycle& cycle) {
  if (cycle.frames.empty()) throw Error(ErrorCode::DimMismatch, "empty cycle");
  for (const auto& f : cycle.frames)
    if (f.rows() != coder.resolution() || f.cols() != coder.resolution())
      throw Error(ErrorCode::DimMismatch, "cycle frames do not match coder resolution");
  return coder.encode_batch(std::span<const MatrixXd>(cycle.frames));
}

CycleLosses cycle_losses(const CouplingCoder& coder, const MatrixXd& k, const GaitCycle& cycle) {
  const auto x = encode_cycle(coder, cycle);
  check_cycle(k, x);
  const std::size_t T = x.size();
  CycleLosses out;

  const auto recon = coder.decode_batch(std::span<const MatrixXd>(x));
  std::vector<MatrixXd> pushed(T);
  for (std::size_t t = 0; t < T; ++t) pushed[t] = k * x[t];
  const auto pred = coder.decode_batch(std::span<const MatrixXd>(pushed));

  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t nx = (t + 1) % T;
    out.loss0 += 0.5 * (cycle.frames[t] - recon[t]).squaredNorm();
    out.loss1 += 0.5 * (x[nx] - pushed[t]).squaredNorm();
    out.loss2 += 0.5 * (cycle.frames[nx] - pred[t]).squaredNorm();
  }
  return out;
}

double linear_loss(const MatrixXd& k, const EmbeddingCycle& x) {
  check_cycle(k, x);
  double loss = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) loss += 0.5 * (x[(t + 1) % x.size()] - k * x[t]).squaredNorm();
  return loss;
}

MatrixXd linear_loss_gradient(const MatrixXd& k, const EmbeddingCycle& x) {
  check_cycle(k, x);
  MatrixXd grad = MatrixXd::Zero(k.rows(), k.cols());
  for (std::size_t t = 0; t < x.size(); ++t) grad.noalias() += (k * x[t] - x[(t + 1) % x.size()]) * x[t].transpose();
  return grad;
}

MatrixXd fit_closed_form(const EmbeddingCycle& x) {
  if (x.size() < 2) throw Error(ErrorCode::DimMismatch, "embedding cycle needs T >= 2");
  const Index w = x.front().rows();
  MatrixXd gram = MatrixXd::Zero(w, w);
  MatrixXd cross = MatrixXd::Zero(w, w);
  for (std::size_t t = 0; t < x.size(); ++t) {
    gram.noalias() += x[t] * x[t].transpose();
    cross.noalias() += x[(t + 1) % x.size()] * x[t].transpose();
  }
  if (gram.trace() == 0.0) throw Error(ErrorCode::DegenerateCycle, "every embedded frame is zero");

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(gram);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "Gram eigendecomposition failed");
  const auto& vals = eig.eigenvalues();
  const double cutoff = 1e-10 * vals.maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(w);
  for (Index i = 0; i < w; ++i)
    if (vals(i) > cutoff) inv(i) = 1.0 / vals(i);
  const MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return cross * pinv;
}

MatrixXd fit_closed_form(const CouplingCoder& coder, const GaitCycle& cycle) {
  return fit_closed_form(encode_cycle(coder, cycle));
}

MatrixXd assemble_augmented_system(const EmbeddingCycle& x) {
  if (x.size() < 2) throw Error(ErrorCode::DimMismatch, "embedding cycle needs T >= 2");
  const Index w = x.front().rows();
  MatrixXd s = MatrixXd::Zero(w, 2 * w);
  // Row m of A_t: coefficients X_m . X_i for every i, then right-hand sides
  // X_m . Y_n for every output row n (Y = X_{t+1}).
  for (std::size_t t = 0; t < x.size(); ++t) {
    const MatrixXd& xt = x[t];
    const MatrixXd& yt = x[(t + 1) % x.size()];
    MatrixXd a(w, 2 * w);
    for (Index m = 0; m < w; ++m) {
      for (Index i = 0; i < w; ++i) a(m, i) = xt.row(m).dot(xt.row(i));
      for (Index n = 0; n < w; ++n) a(m, w + n) = xt.row(m).dot(yt.row(n));
    }
    s += a;
  }
  return s;
}

MatrixXd solve_augmented_system(const MatrixXd& s_in) {
  const Index w = s_in.rows();
  if (s_in.cols() != 2 * w) throw Error(ErrorCode::DimMismatch, "augmented system must be w x 2w");
  MatrixXd s = s_in;
  const double scale = s.leftCols(w).cwiseAbs().maxCoeff();
  if (scale == 0.0) throw Error(ErrorCode::DegenerateCycle, "augmented system has a zero coefficient block");
  for (Index col = 0; col < w; ++col) {
    Index pivot = col;
    s.col(col).tail(w - col).cwiseAbs().maxCoeff(&pivot);
    pivot += col;
    if (std::abs(s(pivot, col)) <= 1e-12 * scale)
      throw Error(ErrorCode::DegenerateCycle, "augmented system is singular");
    if (pivot != col) s.row(col).swap(s.row(pivot));
    s.row(col) /= s(col, col);
    for (Index r = 0; r < w; ++r)
      if (r != col && s(r, col) != 0.0) s.row(r) -= s(r, col) * s.row(col);
  }
  // Column n of the right block holds row n of K.
  return s.rightCols(w).transpose();
}

GradientFit fit_gradient_descent(const EmbeddingCycle& x, const MatrixXd& prototype, double lr, int epochs) {
  check_cycle(prototype, x);
  if (!(lr > 0.0)) throw Error(ErrorCode::BadSpec, "learning rate must be positive");
  if (epochs < 0) throw Error(ErrorCode::BadSpec, "epochs must be >= 0");

  GradientFit fit;
  fit.k = prototype;
  fit.losses.reserve(epochs + 1);
  Adam adam(AdamConfig{lr});
  AdamMoments<MatrixXd> moments;
  const std::size_t T = x.size();
  // Adam normalises the step, so round-off gradients at an optimum would
  // still move K by ~lr. Stop once the gradient is negligible.
  double cross_norm = 0.0;
  for (std::size_t t = 0; t < T; ++t) cross_norm += x[(t + 1) % T].norm() * x[t].norm();
  const double grad_floor = 1e-10 * cross_norm;
  for (int e = 0; e <= epochs; ++e) {
    double loss = 0.0;
    MatrixXd grad = MatrixXd::Zero(fit.k.rows(), fit.k.cols());
    for (std::size_t t = 0; t < T; ++t) {
      const MatrixXd r = fit.k * x[t] - x[(t + 1) % T];
      loss += 0.5 * r.squaredNorm();
      grad.noalias() += r * x[t].transpose();
    }
    if (!std::isfinite(loss))
      throw Error(ErrorCode::NonFiniteLoss, "loss diverged at epoch " + std::to_string(e) + "; lower the learning rate");
    fit.losses.push_back(loss);
    if (e == epochs || grad.norm() <= grad_floor) break;
    adam.begin_step();
    adam.update(fit.k, grad, moments);
  }
  return fit;
}

GradientFit fit_gradient_descent(const CouplingCoder& coder, const GaitCycle& cycle, const MatrixXd& prototype,
                                 double lr, int epochs) {
  return fit_gradient_descent(encode_cycle(coder, cycle), prototype, lr, epochs);
}

Spectrum spectrum(const MatrixXd& k) {
  check_square(k, "K");
  if (!k.allFinite()) throw Error(ErrorCode::NumericalFailure, "K has non-finite entries");
  Eigen::EigenSolver<MatrixXd> es(k, false);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigen-solver did not converge");

  struct Entry {
    std::complex<double> value;
    double magnitude;
    double angle;
  };
  std::vector<Entry> entries;
  entries.reserve(k.rows());
  for (Index i = 0; i < k.rows(); ++i) {
    const auto v = es.eigenvalues()(i);
    double angle = std::arg(v);
    if (angle <= -std::numbers::pi) angle = std::numbers::pi;
    entries.push_back({v, std::abs(v), angle});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.angle < b.angle;
  });
  Spectrum s;
  for (const auto& e : entries) {
    s.eigenvalues.push_back(e.value);
    s.magnitudes.push_back(e.magnitude);
    s.angles.push_back(e.angle);
  }
  return s;
}

MatrixXd fractional_power(const MatrixXd& k, double r) {
  check_square(k, "K");
  if (!k.allFinite()) throw Error(ErrorCode::NumericalFailure, "K has non-finite entries");
  const double norm = k.norm();
  Eigen::EigenSolver<MatrixXd> es(k, true);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::NumericalFailure, "eigen-solver did not converge");
  const auto& lambda = es.eigenvalues();
  const MatrixXcd v = es.eigenvectors();

  const double axis_tol = 1e-12 * std::max(1.0, norm);
  for (Index i = 0; i < lambda.size(); ++i)
    if (std::abs(lambda(i).imag()) <= axis_tol && lambda(i).real() <= axis_tol)
      throw Error(ErrorCode::BranchCut, "eigenvalue " + std::to_string(lambda(i).real()) +
                                            " lies on the closed negative real axis");

  Eigen::JacobiSVD<MatrixXcd> svd(v);
  const auto& sv = svd.singularValues();
  const double cond = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : INFINITY;
  if (!(cond <= 1e12)) throw Error(ErrorCode::NotDiagonalizable, "eigenvector condition number " + std::to_string(cond));

  Eigen::VectorXcd powered(lambda.size());
  for (Index i = 0; i < lambda.size(); ++i) powered(i) = std::pow(lambda(i), r);
  const MatrixXcd result = (v * powered.asDiagonal()) * v.partialPivLu().inverse();
  const double residue = result.imag().cwiseAbs().maxCoeff();
  if (residue > 1e-6 * std::max(norm, 1e-300))
    throw Error(ErrorCode::NumericalFailure, "imaginary residue " + std::to_string(residue) + " too large");
  return result.real();
}

bool convexity_probe(const EmbeddingCycle& x, const MatrixXd& ka, const MatrixXd& kb, int n_points) {
  check_cycle(ka, x);
  check_cycle(kb, x);
  const double la = linear_loss(ka, x);
  const double lb = linear_loss(kb, x);
  const double scale = std::max({1.0, std::abs(la), std::abs(lb)});
  const int n = std::max(n_points, 1);
  for (int j = 0; j < n; ++j) {
    const double a = n == 1 ? 0.5 : static_cast<double>(j) / (n - 1);
    const double mixed = linear_loss(a * ka + (1.0 - a) * kb, x);
    if (mixed > a * la + (1.0 - a) * lb + 1e-9 * scale) return false;
  }
  return true;
}

bool convexity_probe(const CouplingCoder& coder, const GaitCycle& cycle, const MatrixXd& ka, const MatrixXd& kb,
                     int n_points) {
  return convexity_probe(encode_cycle(coder, cycle), ka, kb, n_points);
}

void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "index,re,im,magnitude,angle\n" << std::setprecision(17);
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    out << i << ',' << s.eigenvalues[i].real() << ',' << s.eigenvalues[i].imag() << ',' << s.magnitudes[i] << ','
        << s.angles[i] << '\n';
}

}  // namespace koopgait
