#pragma once

// Shared helpers for the test binaries: seeded generators and scratch dirs.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

#include "koopgait/coder.hpp"
#include "koopgait/dataio.hpp"

namespace testing {

inline Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline Eigen::MatrixXd uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo = 0.0,
                               double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline Eigen::MatrixXd binary(Eigen::Index w, std::mt19937_64& rng, double p = 0.5) {
  std::bernoulli_distribution b(p);
  Eigen::MatrixXd m(w, w);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = b(rng) ? 1.0 : 0.0;
  return m;
}

// Random orthogonal matrix from the QR of a Gaussian draw.
inline Eigen::MatrixXd orthogonal(Eigen::Index w, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(w, w, rng));
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

// Coder with random dense weights and random but valid BN statistics.
inline koopgait::CouplingCoder random_coder(Eigen::Index w, std::mt19937_64& rng, double scale = 0.3) {
  auto coder = koopgait::make_coder(w, rng());
  for (auto* et : {&coder.f(), &coder.g()}) {
    const auto h = et->units();
    et->weight = gaussian(h, h, rng, scale / std::sqrt(static_cast<double>(h)));
    et->bias = gaussian(h, 1, rng, 0.1);
    et->bn_gamma = (uniform(h, 1, rng, 0.5, 1.5));
    et->bn_beta = gaussian(h, 1, rng, 0.1);
    et->bn_mean = gaussian(h, 1, rng, 0.1);
    et->bn_var = uniform(h, 1, rng, 0.5, 2.0);
  }
  coder.set_training(false);
  return coder;
}

// Orthogonal operator with K^T = I: 2x2 rotation blocks by multiples of
// 2 pi / period in a random orthonormal basis. w must be even.
inline Eigen::MatrixXd periodic_operator(Eigen::Index w, int period, std::mt19937_64& rng) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(w, w);
  std::uniform_int_distribution<int> harmonic(1, period - 1);
  for (Eigen::Index b = 0; b < w / 2; ++b) {
    const double th = 2.0 * M_PI * harmonic(rng) / period;
    d(2 * b, 2 * b) = std::cos(th);
    d(2 * b, 2 * b + 1) = -std::sin(th);
    d(2 * b + 1, 2 * b) = std::sin(th);
    d(2 * b + 1, 2 * b + 1) = std::cos(th);
  }
  const Eigen::MatrixXd q = orthogonal(w, rng);
  return q * d * q.transpose();
}

// X_{t+1} = K X_t from an orthogonal X_1, so the Gram matrix is T * I and the
// wraparound pair X_T -> X_1 is also exact.
struct PeriodicCycle {
  Eigen::MatrixXd k;
  std::vector<Eigen::MatrixXd> x;
};

inline PeriodicCycle periodic_cycle(Eigen::Index w, int period, std::mt19937_64& rng) {
  PeriodicCycle out;
  out.k = periodic_operator(w, period, rng);
  Eigen::MatrixXd xt = orthogonal(w, rng);
  for (int t = 0; t < period; ++t) {
    out.x.push_back(xt);
    xt = out.k * xt;
  }
  return out;
}

inline double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("koopgait-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
