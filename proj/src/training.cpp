#include "koopgait/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <thread>

#include "koopgait/error.hpp"
#include "koopgait/koopman.hpp"

namespace koopgait {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void validate(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw Error(ErrorCode::BadConfig, "batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw Error(ErrorCode::BadConfig, "lr must be > 0");
  if (cfg.epochs < 1) throw Error(ErrorCode::BadConfig, "epochs must be >= 1");
  const auto& lw = cfg.loss_weights;
  if (lw.autoencoder < 0 || lw.linear < 0 || lw.prediction < 0)
    throw Error(ErrorCode::BadConfig, "loss weights must be >= 0");
  if (lw.autoencoder + lw.linear + lw.prediction <= 0.0)
    throw Error(ErrorCode::BadConfig, "at least one loss weight must be positive");
  if (cfg.k_init_variance < 0.0) throw Error(ErrorCode::BadConfig, "K init variance must be >= 0");
}

MatrixXd initial_k(Eigen::Index w, const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed ^ 0x4b4b4b4b4b4b4b4bULL);
  double mean = cfg.k_init_mean;
  double sd = std::sqrt(cfg.k_init_variance);
  if (cfg.k_init == KInit::Scaled) {
    mean /= static_cast<double>(w);
    sd /= static_cast<double>(w);
  }
  std::normal_distribution<double> dist(mean, sd);
  MatrixXd k(w, w);
  for (Eigen::Index r = 0; r < w; ++r)
    for (Eigen::Index c = 0; c < w; ++c) k(r, c) = dist(rng);
  return k;
}

namespace {

void check_shapes(std::span<const GaitCycle> cycles) {
  if (cycles.empty()) throw Error(ErrorCode::InconsistentShapes, "no training cycles");
  const auto T = cycles.front().length();
  const auto w = cycles.front().resolution();
  if (T < 2) throw Error(ErrorCode::InconsistentShapes, "cycles need at least 2 frames");
  for (const auto& c : cycles) {
    if (c.length() != T) throw Error(ErrorCode::InconsistentShapes, "cycles differ in length");
    for (const auto& f : c.frames)
      if (f.rows() != w || f.cols() != w) throw Error(ErrorCode::InconsistentShapes, "frames differ in resolution");
  }
}

struct CoderMoments {
  AdamMoments<MatrixXd> weight;
  AdamMoments<VectorXd> bias, gamma, beta;
};

void adam_block(const Adam& adam, EtBlock& b, const EtGradients& g, CoderMoments& m) {
  adam.update(b.weight, g.weight, m.weight);
  adam.update(b.bias, g.bias, m.bias);
  adam.update(b.bn_gamma, g.gamma, m.gamma);
  adam.update(b.bn_beta, g.beta, m.beta);
}

}  // namespace

TrainResult train_coder(std::span<const GaitCycle> cycles, const TrainConfig& cfg) {
  validate(cfg);
  check_shapes(cycles);
  const auto w = cycles.front().resolution();

  TrainResult result{make_coder(w, cfg.seed, cfg.coder), initial_k(w, cfg), {}};
  CouplingCoder& coder = result.coder;
  MatrixXd& k = result.prototype;
  coder.set_training(true);

  Adam adam(AdamConfig{cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps});
  CoderMoments mf, mg;
  AdamMoments<MatrixXd> mk;

  std::mt19937_64 rng(cfg.seed ^ 0x53485546464c45ULL);
  std::vector<std::size_t> order(cycles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<GaitCycle> batch;
  batch.reserve(cfg.batch_size);

  result.trace.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    TraceEntry entry;
    for (std::size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      batch.clear();
      for (std::size_t j = pos; j < std::min(order.size(), pos + cfg.batch_size); ++j)
        batch.push_back(cycles[order[j]]);

      CoderGradients grads = coder_backward(coder, batch, k, cfg.loss_weights);
      entry.loss0 += grads.loss0;
      entry.loss1 += grads.loss1;
      entry.loss2 += grads.loss2;
      entry.total += grads.total;

      if (cfg.grad_clip > 0.0) {
        const double norm = std::sqrt(grads.squared_norm());
        if (norm > cfg.grad_clip) {
          const double s = cfg.grad_clip / norm;
          grads.f.scale(s);
          grads.g.scale(s);
          grads.k *= s;
        }
      }
      adam.begin_step();
      adam_block(adam, coder.f(), grads.f, mf);
      adam_block(adam, coder.g(), grads.g, mg);
      adam.update(k, grads.k, mk);
      update_running_stats(coder, grads);
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.trace.push_back(entry);
  }
  coder.set_training(false);
  return result;
}

std::vector<MatrixXd> fit_all_matrices(const CouplingCoder& coder, const MatrixXd& prototype,
                                       std::span<const GaitCycle> cycles, const MatrixTrainConfig& cfg) {
  std::vector<MatrixXd> out(cycles.size());
  if (cycles.empty()) return out;
  if (coder.training()) throw Error(ErrorCode::BadConfig, "coder must be frozen (eval mode) for matrix training");

  auto fit_one = [&](std::size_t i) {
    if (cfg.method == FitMethod::Analytic)
      out[i] = fit_closed_form(coder, cycles[i]);
    else
      out[i] = fit_gradient_descent(coder, cycles[i], prototype, cfg.lr, cfg.epochs).k;
  };

  const std::size_t threads = std::clamp<std::size_t>(cfg.threads < 1 ? 1 : cfg.threads, 1, cycles.size());
  if (threads == 1) {
    for (std::size_t i = 0; i < cycles.size(); ++i) fit_one(i);
    return out;
  }
  // Static interleaved partition; each slot is written by exactly one worker.
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t tid = 0; tid < threads; ++tid)
    pool.emplace_back([&, tid] {
      try {
        for (std::size_t i = tid; i < cycles.size(); i += threads) fit_one(i);
      } catch (...) {
        errors[tid] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

void write_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "epoch,loss0,loss1,loss2,total,seconds\n" << std::setprecision(10);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace[i];
    out << i << ',' << e.loss0 << ',' << e.loss1 << ',' << e.loss2 << ',' << e.total << ',' << e.seconds << '\n';
  }
}

}  // namespace koopgait
