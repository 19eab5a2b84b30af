#pragma once

#include "cpt/types.hpp"

namespace cpt {

/// Fitted logistic regression. weights(0) is the intercept, the rest align
/// with the feature columns.
struct LogisticModel
{
  Vector weights;
  double ridge = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct IrlsOptions
{
  int max_iterations = 50;
  /// Converged once max |step| falls below this.
  double tolerance = 1e-8;
};

/// Penalized log-likelihood  l(w) - ridge * |beta|^2  with the intercept
/// unpenalized. x excludes the intercept column; y holds 0/1 values.
double logistic_objective(const Matrix& x, const Vector& y, const Vector& w, double ridge);

/// Gradient of logistic_objective with respect to w (intercept first).
Vector logistic_gradient(const Matrix& x, const Vector& y, const Vector& w, double ridge);

/// Unpenalized Bernoulli log-likelihood.
double logistic_loglik(const Matrix& x, const Vector& y, const Vector& w);

/// Linear predictor w0 + x * beta for every row.
Vector linear_predictor(const Matrix& x, const Vector& w);

/// Newton-Raphson (IRLS) with step halving on the penalized objective.
/// Throws NumericalError carrying the iteration count if weights go non-finite.
LogisticModel fit_logistic(const Matrix& x, const Vector& y, double ridge,
                           const IrlsOptions& options = {});

} // namespace cpt
