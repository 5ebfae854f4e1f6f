#pragma once

#include <span>

#include <Eigen/Dense>

#include "koopgait/coder.hpp"
#include "koopgait/dataio.hpp"

namespace koopgait {

struct LossWeights {
  double autoencoder = 0.0;  // loss0
  double linear = 1.0;       // loss1
  double prediction = 0.0;   // loss2
};

struct EtGradients {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;

  static EtGradients zeros(Eigen::Index units);
  double squared_norm() const;
  void scale(double s);
};

struct CoderGradients {
  EtGradients f;
  EtGradients g;
  Eigen::MatrixXd k;

  double loss0 = 0.0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double total = 0.0;

  // Batch statistics seen by f and g on the encode pass, for running-stat updates.
  Eigen::VectorXd f_batch_mean, f_batch_var;
  Eigen::VectorXd g_batch_mean, g_batch_var;

  double squared_norm() const { return f.squared_norm() + g.squared_norm() + k.squaredNorm(); }
};

// Weighted loss over a mini-batch of cycles plus exact gradients w.r.t. every
// ET parameter and K. The cycles form one batch-norm batch (all B*T frames)
// when the coder is in training mode. Each cycle wraps around: G_{T+1} = G_1.
CoderGradients coder_backward(const CouplingCoder& coder, std::span<const GaitCycle> cycles,
                              const Eigen::MatrixXd& k, const LossWeights& weights);

// Folds encode-pass batch statistics into the running BN statistics:
// running = momentum * running + (1 - momentum) * batch.
void update_running_stats(CouplingCoder& coder, const CoderGradients& grads);

}  // namespace koopgait
