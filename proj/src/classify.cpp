#include "koopgait/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "koopgait/error.hpp"
#include "koopgait/image.hpp"
#include "koopgait/tensor.hpp"

namespace koopgait {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd flatten(const MatrixXd& m) {
  VectorXd v(m.size());
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) v(r * m.cols() + c) = m(r, c);
  return v;
}

MatrixXd reshape(const VectorXd& v, Index w) {
  if (v.size() != w * w) throw Error(ErrorCode::DimMismatch, "vector length is not w*w");
  MatrixXd m(w, w);
  for (Index r = 0; r < w; ++r)
    for (Index c = 0; c < w; ++c) m(r, c) = v(r * w + c);
  return m;
}

namespace {

double log_sum_exp(const VectorXd& s) {
  const double mx = s.maxCoeff();
  return mx + std::log((s.array() - mx).exp().sum());
}

// log(1 + exp(s)) without overflow.
double softplus(double s) { return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

struct Problem {
  MatrixXd x;                // n x d
  std::vector<Index> y;      // class index per sample
  Index classes = 0;
  double penalty = 0.0;      // 1 / reg_weight
  LogregMode mode = LogregMode::Multinomial;

  double objective(const MatrixXd& w, const VectorXd& b) const {
    const MatrixXd s = (x * w.transpose()).rowwise() + b.transpose();
    const double n = static_cast<double>(x.rows());
    double data = 0.0;
    for (Index i = 0; i < x.rows(); ++i) {
      if (mode == LogregMode::Multinomial) {
        data += log_sum_exp(s.row(i).transpose()) - s(i, y[i]);
      } else {
        for (Index c = 0; c < classes; ++c) data += softplus(s(i, c)) - (c == y[i] ? s(i, c) : 0.0);
      }
    }
    return data / n + 0.5 * penalty * w.squaredNorm();
  }

  void gradient(const MatrixXd& w, const VectorXd& b, MatrixXd& gw, VectorXd& gb) const {
    const MatrixXd s = (x * w.transpose()).rowwise() + b.transpose();
    MatrixXd resid(x.rows(), classes);  // d(loss_i)/d(score)
    for (Index i = 0; i < x.rows(); ++i) {
      if (mode == LogregMode::Multinomial) {
        const VectorXd row = s.row(i).transpose();
        const double lse = log_sum_exp(row);
        resid.row(i) = (row.array() - lse).exp().matrix().transpose();
      } else {
        for (Index c = 0; c < classes; ++c) resid(i, c) = sigmoid(s(i, c));
      }
      resid(i, y[i]) -= 1.0;
    }
    const double n = static_cast<double>(x.rows());
    gw = resid.transpose() * x / n + penalty * w;
    gb = resid.colwise().sum().transpose() / n;
  }
};

}  // namespace

ClassifierModel fit_logreg(std::span<const LabeledOperator> samples, double reg_weight, int max_iter, LogregMode mode) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no training samples");
  if (!(reg_weight > 0.0)) throw Error(ErrorCode::BadConfig, "reg_weight must be > 0");
  const Index w = samples.front().k.rows();
  std::set<int> labels;
  for (const auto& s : samples) {
    if (s.k.rows() != w || s.k.cols() != w) throw Error(ErrorCode::DimMismatch, "operators differ in shape");
    labels.insert(s.label);
  }
  if (labels.size() < 2) throw Error(ErrorCode::SingleClass, "need at least two distinct labels");

  ClassifierModel model;
  model.classes.assign(labels.begin(), labels.end());
  model.w = w;
  model.reg_weight = reg_weight;
  model.max_iter = max_iter;
  model.mode = mode;

  Problem p;
  p.classes = static_cast<Index>(model.classes.size());
  p.penalty = 1.0 / reg_weight;
  p.mode = mode;
  p.x.resize(static_cast<Index>(samples.size()), w * w);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    p.x.row(static_cast<Index>(i)) = flatten(samples[i].k).transpose();
    const auto it = std::lower_bound(model.classes.begin(), model.classes.end(), samples[i].label);
    p.y.push_back(static_cast<Index>(it - model.classes.begin()));
  }

  MatrixXd wt = MatrixXd::Zero(p.classes, w * w);
  VectorXd b = VectorXd::Zero(p.classes);
  MatrixXd gw;
  VectorXd gb;
  double f = p.objective(wt, b);
  model.loss_history.push_back(f);
  double step = 1.0;
  constexpr double armijo = 1e-4;

  for (int it = 0; it < max_iter; ++it) {
    p.gradient(wt, b, gw, gb);
    const double g2 = gw.squaredNorm() + gb.squaredNorm();
    if (std::sqrt(g2) <= 1e-6) break;
    step *= 2.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 60; ++halvings) {
      MatrixXd wn = wt - step * gw;
      VectorXd bn = b - step * gb;
      const double fn = p.objective(wn, bn);
      if (fn <= f - armijo * step * g2) {
        wt = std::move(wn);
        b = std::move(bn);
        f = fn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    model.loss_history.push_back(f);
    model.iterations = it + 1;
  }
  model.weights = std::move(wt);
  model.biases = std::move(b);
  return model;
}

Prediction predict(const ClassifierModel& model, const MatrixXd& k) {
  if (!model.fitted()) throw Error(ErrorCode::UnfittedModel, "classifier has not been fitted");
  if (k.rows() != model.w || k.cols() != model.w) throw Error(ErrorCode::DimMismatch, "operator shape mismatch");
  Prediction out;
  out.scores = model.weights * flatten(k) + model.biases;
  Index best = 0;
  for (Index c = 1; c < out.scores.size(); ++c)
    if (out.scores(c) > out.scores(best)) best = c;
  out.label = model.classes[static_cast<std::size_t>(best)];
  if (model.mode == LogregMode::Multinomial) {
    out.probabilities = (out.scores.array() - log_sum_exp(out.scores)).exp().matrix();
  } else {
    out.probabilities = out.scores.unaryExpr([](double s) { return sigmoid(s); });
    out.probabilities /= out.probabilities.sum();
  }
  return out;
}

double rank1_accuracy(const ClassifierModel& model, std::span<const LabeledOperator> samples) {
  if (samples.empty()) throw Error(ErrorCode::EmptyInput, "no evaluation samples");
  std::size_t hits = 0;
  for (const auto& s : samples)
    if (predict(model, s.k).label == s.label) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<MatrixXd> export_weight_maps(const ClassifierModel& model) {
  if (!model.fitted()) throw Error(ErrorCode::UnfittedModel, "classifier has not been fitted");
  std::vector<MatrixXd> maps;
  for (Index c = 0; c < model.weights.rows(); ++c)
    maps.push_back(reshape(model.weights.row(c).transpose().cwiseAbs(), model.w));
  return maps;
}

void write_weight_maps(const ClassifierModel& model, const std::filesystem::path& dir) {
  const auto maps = export_weight_maps(model);
  std::filesystem::create_directories(dir);
  char name[48];
  for (std::size_t c = 0; c < maps.size(); ++c) {
    std::snprintf(name, sizeof name, "class_%03d", model.classes[c]);
    write_heatmap_pgm(maps[c], dir / (std::string(name) + ".pgm"));
    save_tensor(to_tensor(maps[c]), dir / (std::string(name) + ".ika"));
  }
}

}  // namespace koopgait
