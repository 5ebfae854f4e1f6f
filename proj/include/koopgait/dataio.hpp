#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace koopgait {

// A w x w silhouette image with values in [0,1], indexed (row, col).
using Frame = Eigen::MatrixXd;

struct SilhouetteSequence {
  std::vector<Frame> frames;
  std::string source_id;
  int subject_id = 0;

  std::size_t length() const { return frames.size(); }
  Eigen::Index resolution() const { return frames.empty() ? 0 : frames.front().rows(); }
};

struct SyntheticSpec {
  int n_subjects = 10;
  int cycles_per_subject = 6;
  int period = 12;
  int w = 32;
  double noise = 0.0;  // per-pixel flip probability
  std::uint64_t seed = 7;
};

// Throws BadSpec when a frame is not square, not finite, or outside [0,1].
void validate_frame(const Frame& frame);
bool is_binary(const Frame& frame);

// Nearest-neighbour resize to w x w followed by thresholding at 0.5.
Frame resize_and_binarize(const Eigen::MatrixXd& image, int w);

// Loads every PGM/PNG in `dir` (lexicographic filename order).
SilhouetteSequence load_sequence(const std::filesystem::path& dir, int w);

// Writes frames as frame_0000.pgm, frame_0001.pgm, ...
void save_sequence(const SilhouetteSequence& seq, const std::filesystem::path& dir);

// Parametric walkers: a fixed torso, a near leg sweeping a filled wedge, a
// thin vertical far leg and one arm swinging against the near leg. Each
// subject draws its own swing amplitude, phase and leg length.
// A sequence holds cycles_per_subject periods plus a half-period lead-in.
std::vector<SilhouetteSequence> generate_synthetic_dataset(const SyntheticSpec& spec);

// Per-subject walker parameters, in the order the generator draws them.
struct WalkerParams {
  double amplitude = 0.0;  // radians
  double phase = 0.0;      // radians
  double leg_scale = 1.0;  // leg length relative to 0.38 w
};
std::vector<WalkerParams> synthetic_walker_params(const SyntheticSpec& spec);

// Near-leg angle at phase index t: a triangle wave between -amplitude and
// +amplitude.
double walker_angle(const WalkerParams& params, int period, int t);

// Renders one noiseless walker frame at phase index t (taken mod period).
Frame render_walker(const WalkerParams& params, int period, int t, int w);

}  // namespace koopgait

namespace koopgait {

// One segmented gait cycle: T consecutive frames of a source sequence.
struct GaitCycle {
  std::vector<Frame> frames;
  int subject_id = 0;
  std::size_t start_index = 0;

  std::size_t length() const { return frames.size(); }
  Eigen::Index resolution() const { return frames.empty() ? 0 : frames.front().rows(); }
};

}  // namespace koopgait
