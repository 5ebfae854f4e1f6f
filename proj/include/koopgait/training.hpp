#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "koopgait/coder.hpp"
#include "koopgait/coder_backward.hpp"
#include "koopgait/dataio.hpp"
#include "koopgait/optim.hpp"

namespace koopgait {

enum class KInit {
  Scaled,    // entries ~ N(mean / w, variance / w^2)
  Unscaled,  // entries ~ N(mean, variance)
};

struct TrainConfig {
  int batch_size = 4;
  double lr = 0.001;
  int epochs = 2000;
  LossWeights loss_weights{};
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 7;
  KInit k_init = KInit::Scaled;
  double k_init_mean = 1.0;
  double k_init_variance = 4.0;
  double grad_clip = 10.0;  // global L2 norm; <= 0 disables
  CoderOptions coder{};
};

enum class FitMethod { GradientDescent, Analytic };

struct MatrixTrainConfig {
  FitMethod method = FitMethod::GradientDescent;
  double lr = 0.01;
  int epochs = 400;
  int threads = 1;
};

struct TraceEntry {
  double loss0 = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double total = 0.0;
  double seconds = 0.0;
};

using TrainTrace = std::vector<TraceEntry>;

struct TrainResult {
  CouplingCoder coder;       // eval mode
  Eigen::MatrixXd prototype;  // shared K
  TrainTrace trace;
};

void validate(const TrainConfig& cfg);

Eigen::MatrixXd initial_k(Eigen::Index w, const TrainConfig& cfg);

// Jointly trains the shared coder and a prototype K with Adam on
// mini-batches of cycles. Deterministic for a given seed.
TrainResult train_coder(std::span<const GaitCycle> cycles, const TrainConfig& cfg);

// One operator per cycle, in input order, with the coder frozen.
std::vector<Eigen::MatrixXd> fit_all_matrices(const CouplingCoder& coder, const Eigen::MatrixXd& prototype,
                                              std::span<const GaitCycle> cycles, const MatrixTrainConfig& cfg);

// CSV columns: epoch,loss0,loss1,loss2,total,seconds
void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);

}  // namespace koopgait
