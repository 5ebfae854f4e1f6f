#pragma once

#include <complex>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "koopgait/coder.hpp"
#include "koopgait/dataio.hpp"

namespace koopgait {

// Encoded cycle X_1..X_T (embedding frames).
using EmbeddingCycle = std::vector<Eigen::MatrixXd>;

struct CycleLosses {
  double loss0 = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
};

struct Spectrum {
  std::vector<std::complex<double>> eigenvalues;
  std::vector<double> magnitudes;
  std::vector<double> angles;  // (-pi, pi]
};

// K^m X.
Eigen::MatrixXd advance(const Eigen::MatrixXd& k, const Eigen::MatrixXd& x, int m);

EmbeddingCycle encode_cycle(const CouplingCoder& coder, const GaitCycle& cycle);

// The three restrictions with wraparound G_{T+1} = G_1.
CycleLosses cycle_losses(const CouplingCoder& coder, const Eigen::MatrixXd& k, const GaitCycle& cycle);

// 1/2 sum_t ||X_{t+1} - K X_t||^2 on an already-encoded cycle (wrapping).
double linear_loss(const Eigen::MatrixXd& k, const EmbeddingCycle& x);
// sum_t (K X_t - X_{t+1}) X_t^T
Eigen::MatrixXd linear_loss_gradient(const Eigen::MatrixXd& k, const EmbeddingCycle& x);

// Least-squares K: solves K (sum X_t X_t^T) = sum X_{t+1} X_t^T, using a
// minimum-norm pseudo-inverse (cutoff 1e-10 * largest eigenvalue) when the
// Gram matrix is singular.
Eigen::MatrixXd fit_closed_form(const EmbeddingCycle& x);
Eigen::MatrixXd fit_closed_form(const CouplingCoder& coder, const GaitCycle& cycle);

// The per-row normal equations stacked as one augmented system
// S = sum_t [X_t X_t^T | X_t X_{t+1}^T]  (w x 2w).
Eigen::MatrixXd assemble_augmented_system(const EmbeddingCycle& x);
// Gauss-Jordan elimination with partial pivoting on S; returns K.
// Throws DegenerateCycle when the left block is singular.
Eigen::MatrixXd solve_augmented_system(const Eigen::MatrixXd& s);

struct GradientFit {
  Eigen::MatrixXd k;
  std::vector<double> losses;  // loss before each epoch's update, then final loss
};

// Full-batch Adam on loss1 over K from `prototype`, coder frozen. Stops
// early (shorter `losses`) once the gradient norm falls below
// 1e-10 * sum_t ||X_{t+1}|| ||X_t||.
GradientFit fit_gradient_descent(const EmbeddingCycle& x, const Eigen::MatrixXd& prototype, double lr, int epochs);
GradientFit fit_gradient_descent(const CouplingCoder& coder, const GaitCycle& cycle, const Eigen::MatrixXd& prototype,
                                 double lr, int epochs);

// Eigenvalues sorted by descending magnitude, then ascending angle.
Spectrum spectrum(const Eigen::MatrixXd& k);

// Principal real power V diag(lambda^r) V^{-1}.
Eigen::MatrixXd fractional_power(const Eigen::MatrixXd& k, double r);

// Checks L(a K_a + (1-a) K_b) <= a L(K_a) + (1-a) L(K_b) + 1e-9 * scale at
// n_points evenly spaced a in [0,1].
bool convexity_probe(const EmbeddingCycle& x, const Eigen::MatrixXd& ka, const Eigen::MatrixXd& kb, int n_points);
bool convexity_probe(const CouplingCoder& coder, const GaitCycle& cycle, const Eigen::MatrixXd& ka,
                     const Eigen::MatrixXd& kb, int n_points);

// CSV columns: index,re,im,magnitude,angle
void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& path);

}  // namespace koopgait
