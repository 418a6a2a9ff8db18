#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "eggs/feature_matrix.hpp"

namespace eggs {

struct LogisticOptions {
  double l2 = 0.01;
  int max_iter = 500;
  double tol = 1e-6;     // on the full gradient norm (weights and bias)
  std::uint64_t seed = 0;
  bool standardize = true;
  /// Minibatch SGD instead of full-batch descent; `max_iter` counts epochs.
  bool stochastic = false;
  std::size_t batch_size = 256;
  double learning_rate = 0.5;
};

/// L2-regularized logistic regression on a fixed column dictionary.
/// Dense columns are standardized with training statistics (`mean`, `scale`);
/// binary columns keep mean 0 and scale 1.
struct LinearModel {
  std::vector<Column> columns;
  std::uint64_t fingerprint = 0;
  std::vector<double> weights;
  double bias = 0;
  std::vector<double> mean;
  std::vector<double> scale;
  double l2 = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loss_trace;  // objective after each accepted step
};

/// Mean logistic loss plus (l2/2)·||w||² in standardized coordinates.
double logistic_objective(const LinearModel& model, const FeatureMatrix& X,
                          std::span<const double> y);

/// `y` holds 0/1 targets aligned with the rows of `X`.
/// Single-class data yields a constant model (zero weights) and a warning.
LinearModel train_logistic(const FeatureMatrix& X, std::span<const double> y,
                           const LogisticOptions& opts = {});

/// sigmoid(w·x + b) per row. Throws DataError on a column mismatch.
std::vector<double> predict_proba(const LinearModel& model, const FeatureMatrix& X);

/// Raw scores w·x + b, same column contract as predict_proba.
std::vector<double> decision_function(const LinearModel& model, const FeatureMatrix& X);

double sigmoid(double z);

void write_linear_model(std::ostream& out, const LinearModel& m);
LinearModel read_linear_model(std::istream& in);

}  // namespace eggs
