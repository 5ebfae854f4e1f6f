#include "koopgait/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "koopgait/error.hpp"
#include "koopgait/image.hpp"

namespace koopgait {

namespace fs = std::filesystem;

void validate_frame(const Frame& frame) {
  if (frame.rows() != frame.cols() || frame.rows() == 0)
    throw Error(ErrorCode::BadSpec, "frame must be square and non-empty");
  if (!frame.allFinite()) throw Error(ErrorCode::BadSpec, "frame contains non-finite values");
  if (frame.minCoeff() < 0.0 || frame.maxCoeff() > 1.0)
    throw Error(ErrorCode::BadSpec, "frame values must lie in [0,1]");
}

bool is_binary(const Frame& frame) {
  return (frame.array() == 0.0 || frame.array() == 1.0).all();
}

Frame resize_and_binarize(const Eigen::MatrixXd& image, int w) {
  if (w <= 0) throw Error(ErrorCode::BadSpec, "resolution must be positive");
  Frame out(w, w);
  const auto h_src = image.rows();
  const auto w_src = image.cols();
  for (int r = 0; r < w; ++r) {
    const auto sr = static_cast<Eigen::Index>(static_cast<long long>(r) * h_src / w);
    for (int c = 0; c < w; ++c) {
      const auto sc = static_cast<Eigen::Index>(static_cast<long long>(c) * w_src / w);
      out(r, c) = image(sr, sc) >= 0.5 ? 1.0 : 0.0;
    }
  }
  return out;
}

SilhouetteSequence load_sequence(const fs::path& dir, int w) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::MissingDirectory, dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (files.size() < 2)
    throw Error(ErrorCode::TooFewFrames, dir.string() + " holds " + std::to_string(files.size()) + " image(s)");

  SilhouetteSequence seq;
  seq.source_id = dir.filename().string();
  seq.frames.reserve(files.size());
  for (const auto& f : files) seq.frames.push_back(resize_and_binarize(read_gray_image(f), w));
  return seq;
}

void save_sequence(const SilhouetteSequence& seq, const fs::path& dir) {
  fs::create_directories(dir);
  char name[32];
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::snprintf(name, sizeof name, "frame_%04zu.pgm", i);
    write_pgm(seq.frames[i], dir / name);
  }
}

namespace {

void check_spec(const SyntheticSpec& spec) {
  if (spec.n_subjects < 1) throw Error(ErrorCode::BadSpec, "n_subjects must be >= 1");
  if (spec.cycles_per_subject < 1) throw Error(ErrorCode::BadSpec, "cycles_per_subject must be >= 1");
  if (spec.period < 4) throw Error(ErrorCode::BadSpec, "period must be >= 4");
  if (spec.w < 8) throw Error(ErrorCode::BadSpec, "w must be >= 8");
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) throw Error(ErrorCode::BadSpec, "noise must lie in [0,1]");
}

// Squared distance from point p to segment [a, b] (2-d, row/col order).
double segment_dist2(double pr, double pc, double ar, double ac, double br, double bc) {
  const double dr = br - ar, dc = bc - ac;
  const double len2 = dr * dr + dc * dc;
  double u = len2 > 0.0 ? ((pr - ar) * dr + (pc - ac) * dc) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  const double qr = ar + u * dr - pr, qc = ac + u * dc - pc;
  return qr * qr + qc * qc;
}

}  // namespace

std::vector<WalkerParams> synthetic_walker_params(const SyntheticSpec& spec) {
  check_spec(spec);
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> amp(0.60, 1.00);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> leg(0.85, 1.0);
  std::vector<WalkerParams> params;
  params.reserve(spec.n_subjects);
  for (int s = 0; s < spec.n_subjects; ++s) {
    WalkerParams p;
    p.amplitude = amp(rng);
    p.phase = phase(rng);
    p.leg_scale = leg(rng);
    params.push_back(p);
  }
  return params;
}

double walker_angle(const WalkerParams& params, int period, int t) {
  const int k = ((t % period) + period) % period;
  // Triangle wave in [-A, A]: constant angular speed between the extremes.
  const double u = std::fmod(static_cast<double>(k) / period + params.phase / (2.0 * std::numbers::pi), 1.0);
  return params.amplitude * (u < 0.5 ? 4.0 * u - 1.0 : 3.0 - 4.0 * u);
}

Frame render_walker(const WalkerParams& params, int period, int t, int w) {
  const double W = w;
  const double theta = walker_angle(params, period, t);

  const double torso_top = 0.12 * W, torso_bottom = 0.55 * W;
  const double torso_left = 0.42 * W, torso_right = 0.58 * W;
  const double hip_row = 0.55 * W;
  const double hip_left = 0.46 * W, hip_right = 0.54 * W;
  const double leg_len = 0.38 * W * params.leg_scale;
  const double half_thick = std::max(0.75, 0.045 * W);
  const double ht2 = half_thick * half_thick;
  // The near leg sweeps a filled wedge between the vertical and itself, so
  // the mismatch against any fixed pose grows with the angle difference; the
  // thin far leg stays vertical and one arm swings against the near leg.
  const double far_thick2 = 0.36 * ht2;
  const double shoulder_row = 0.2 * W, shoulder_col = 0.5 * W;
  const double arm_len = 0.3 * W;
  const double arm_thick2 = 0.64 * ht2;

  const double foot1_r = hip_row + leg_len * std::cos(theta), foot1_c = hip_left + leg_len * std::sin(theta);
  const double foot2_r = hip_row + leg_len, foot2_c = hip_right;
  const double hand_r = shoulder_row + arm_len * std::cos(theta), hand_c = shoulder_col - arm_len * std::sin(theta);

  Frame f = Frame::Zero(w, w);
  for (int r = 0; r < w; ++r) {
    const double pr = r + 0.5;
    for (int c = 0; c < w; ++c) {
      const double pc = c + 0.5;
      const bool torso = pr >= torso_top && pr <= torso_bottom && pc >= torso_left && pc <= torso_right;
      const bool leg1 = segment_dist2(pr, pc, hip_row, hip_left, foot1_r, foot1_c) <= ht2;
      const bool leg2 = segment_dist2(pr, pc, hip_row, hip_right, foot2_r, foot2_c) <= far_thick2;
      const bool arm = segment_dist2(pr, pc, shoulder_row, shoulder_col, hand_r, hand_c) <= arm_thick2;
      bool wedge = false;
      const double dr = pr - hip_row, dc = pc - hip_left;
      // Back-swing wedge is shorter so the area series is not half-periodic.
      const double reach = theta >= 0.0 ? leg_len : 0.75 * leg_len;
      if (dr > 0.0 && dr * dr + dc * dc <= reach * reach) {
        const double a = std::atan2(dc, dr);
        wedge = theta >= 0.0 ? (a >= 0.0 && a <= theta) : (a <= 0.0 && a >= theta);
      }
      if (torso || leg1 || leg2 || arm || wedge) f(r, c) = 1.0;
    }
  }
  return f;
}

std::vector<SilhouetteSequence> generate_synthetic_dataset(const SyntheticSpec& spec) {
  const auto params = synthetic_walker_params(spec);
  const int length = spec.cycles_per_subject * spec.period + spec.period / 2;

  // Noise stream is separate from the parameter stream so that changing the
  // noise level never changes the walkers themselves.
  std::mt19937_64 noise_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution flip(spec.noise);

  std::vector<SilhouetteSequence> out;
  out.reserve(params.size());
  for (std::size_t s = 0; s < params.size(); ++s) {
    std::vector<Frame> cycle;
    cycle.reserve(spec.period);
    for (int k = 0; k < spec.period; ++k) cycle.push_back(render_walker(params[s], spec.period, k, spec.w));

    SilhouetteSequence seq;
    seq.subject_id = static_cast<int>(s) + 1;
    char id[32];
    std::snprintf(id, sizeof id, "%03d-synth", seq.subject_id);
    seq.source_id = id;
    seq.frames.reserve(length);
    for (int t = 0; t < length; ++t) {
      Frame f = cycle[t % spec.period];
      if (spec.noise > 0.0)
        for (Eigen::Index i = 0; i < f.size(); ++i)
          if (flip(noise_rng)) f.data()[i] = 1.0 - f.data()[i];
      seq.frames.push_back(std::move(f));
    }
    out.push_back(std::move(seq));
  }
  return out;
}

}  // namespace koopgait
