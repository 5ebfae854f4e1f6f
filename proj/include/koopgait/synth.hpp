#pragma once

#include <Eigen/Dense>

#include "koopgait/coder.hpp"
#include "koopgait/dataio.hpp"

namespace koopgait {

struct QualityReport {
  double mse_sim = 0.0;  // 1 - MSE
  double psnr = 0.0;     // dB, peak 1.0, capped at kPsnrCap
  double uqi = 0.0;      // global universal quality index
};

inline constexpr double kPsnrCap = 99.0;

// decode(K^m encode(frame)) without clamping.
Eigen::MatrixXd generate_future_raw(const CouplingCoder& coder, const Eigen::MatrixXd& k, const Frame& frame, int m);
// Same, clamped to [0,1].
Frame generate_future(const CouplingCoder& coder, const Eigen::MatrixXd& k, const Frame& frame, int m);

// decode(K^r encode(frame)) using the principal fractional power.
Eigen::MatrixXd interpolate_raw(const CouplingCoder& coder, const Eigen::MatrixXd& k, const Frame& frame, double r);
Frame interpolate(const CouplingCoder& coder, const Eigen::MatrixXd& k, const Frame& frame, double r);

QualityReport image_metrics(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// 3x3 median with replicated borders.
Eigen::MatrixXd median_filter3(const Eigen::MatrixXd& image);

}  // namespace koopgait
