#pragma once

// Logistic-regression identification on flattened Koopman operators.
// Flattening F(K) is row-major everywhere: weight vectors, weight maps and
// operators all use index r * w + c.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace koopgait {

struct LabeledOperator {
  Eigen::MatrixXd k;
  int label = 0;
};

enum class LogregMode { Multinomial, OneVsRest };

struct ClassifierModel {
  std::vector<int> classes;  // ascending
  Eigen::MatrixXd weights;   // classes x w^2
  Eigen::VectorXd biases;    // one per class
  Eigen::Index w = 0;
  double reg_weight = 200.0;
  int max_iter = 2000;
  LogregMode mode = LogregMode::Multinomial;
  int iterations = 0;
  std::vector<double> loss_history;  // objective at every accepted iterate

  bool fitted() const { return !classes.empty() && weights.rows() == static_cast<Eigen::Index>(classes.size()); }
};

struct Prediction {
  int label = 0;
  Eigen::VectorXd scores;         // raw class scores w_c . F(K) + b_c
  Eigen::VectorXd probabilities;  // normalised over classes
};

Eigen::VectorXd flatten(const Eigen::MatrixXd& m);
Eigen::MatrixXd reshape(const Eigen::VectorXd& v, Eigen::Index w);

// Mean cross-entropy plus an L2 penalty of strength 1/reg_weight on the
// weights (biases unpenalised); full-batch gradient descent with
// backtracking line search from zero, stopping at gradient norm <= 1e-6 or
// max_iter iterations.
ClassifierModel fit_logreg(std::span<const LabeledOperator> samples, double reg_weight = 200.0, int max_iter = 2000,
                           LogregMode mode = LogregMode::Multinomial);

Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& k);

double rank1_accuracy(const ClassifierModel& model, std::span<const LabeledOperator> samples);

// Per-class |weights| reshaped to w x w.
std::vector<Eigen::MatrixXd> export_weight_maps(const ClassifierModel& model);

// Writes class_<label>.pgm (heatmap) and class_<label>.ika for every class.
void write_weight_maps(const ClassifierModel& model, const std::filesystem::path& dir);

// Extension point for alternative operator classifiers.
class OperatorClassifier {
 public:
  virtual ~OperatorClassifier() = default;
  virtual void fit(std::span<const LabeledOperator> samples) = 0;
  virtual Prediction predict(const Eigen::MatrixXd& k) const = 0;
};

class LogisticClassifier final : public OperatorClassifier {
 public:
  LogisticClassifier(double reg_weight, int max_iter, LogregMode mode = LogregMode::Multinomial)
      : reg_weight_(reg_weight), max_iter_(max_iter), mode_(mode) {}

  void fit(std::span<const LabeledOperator> samples) override {
    model_ = fit_logreg(samples, reg_weight_, max_iter_, mode_);
  }
  Prediction predict(const Eigen::MatrixXd& k) const override { return koopgait::predict(model_, k); }
  const ClassifierModel& model() const { return model_; }

 private:
  double reg_weight_;
  int max_iter_;
  LogregMode mode_;
  ClassifierModel model_;
};

}  // namespace koopgait
