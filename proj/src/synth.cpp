#include "koopgait/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "koopgait/error.hpp"
#include "koopgait/koopman.hpp"

namespace koopgait {

using Eigen::Index;
using Eigen::MatrixXd;

namespace {

Frame clamp01(const MatrixXd& m) { return m.cwiseMax(0.0).cwiseMin(1.0); }

void check_operator(const CouplingCoder& coder, const MatrixXd& k, const Frame& frame) {
  const auto w = coder.resolution();
  if (k.rows() != w || k.cols() != w) throw Error(ErrorCode::DimMismatch, "K must match coder resolution");
  if (frame.rows() != w || frame.cols() != w) throw Error(ErrorCode::DimMismatch, "frame must match coder resolution");
}

}  // namespace

MatrixXd generate_future_raw(const CouplingCoder& coder, const MatrixXd& k, const Frame& frame, int m) {
  check_operator(coder, k, frame);
  if (m < 0) throw Error(ErrorCode::BadSpec, "step count must be >= 0");
  return coder.decode(advance(k, coder.encode(frame), m));
}

Frame generate_future(const CouplingCoder& coder, const MatrixXd& k, const Frame& frame, int m) {
  return clamp01(generate_future_raw(coder, k, frame, m));
}

MatrixXd interpolate_raw(const CouplingCoder& coder, const MatrixXd& k, const Frame& frame, double r) {
  check_operator(coder, k, frame);
  return coder.decode(fractional_power(k, r) * coder.encode(frame));
}

Frame interpolate(const CouplingCoder& coder, const MatrixXd& k, const Frame& frame, double r) {
  return clamp01(interpolate_raw(coder, k, frame, r));
}

QualityReport image_metrics(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.size() == 0)
    throw Error(ErrorCode::ShapeMismatch, "images must share a non-empty shape");
  QualityReport q;
  const double mse = (a - b).squaredNorm() / static_cast<double>(a.size());
  q.mse_sim = 1.0 - mse;
  q.psnr = mse > 0.0 ? std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse)) : kPsnrCap;

  const double n = static_cast<double>(a.size());
  const double mu_a = a.mean();
  const double mu_b = b.mean();
  const auto da = a.array() - mu_a;
  const auto db = b.array() - mu_b;
  const double var_a = da.square().sum() / n;
  const double var_b = db.square().sum() / n;
  const double cov = (da * db).sum() / n;
  const double denom = (var_a + var_b) * (mu_a * mu_a + mu_b * mu_b);
  q.uqi = denom != 0.0 ? 4.0 * cov * mu_a * mu_b / denom : 0.0;
  return q;
}

MatrixXd median_filter3(const MatrixXd& image) {
  MatrixXd out(image.rows(), image.cols());
  std::array<double, 9> win{};
  for (Index r = 0; r < image.rows(); ++r)
    for (Index c = 0; c < image.cols(); ++c) {
      std::size_t k = 0;
      for (Index dr = -1; dr <= 1; ++dr)
        for (Index dc = -1; dc <= 1; ++dc) {
          const Index rr = std::clamp<Index>(r + dr, 0, image.rows() - 1);
          const Index cc = std::clamp<Index>(c + dc, 0, image.cols() - 1);
          win[k++] = image(rr, cc);
        }
      std::nth_element(win.begin(), win.begin() + 4, win.end());
      out(r, c) = win[4];
    }
  return out;
}

}  // namespace koopgait
