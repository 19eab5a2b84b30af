#include "cpt/logistic.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace cpt {

namespace {

// log(1 + exp(eta)) without overflow.
double softplus(double eta) { return std::max(eta, 0.0) + std::log1p(std::exp(-std::abs(eta))); }

double sigmoid(double eta)
{
  if (eta >= 0.0)
    return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

Matrix with_intercept(const Matrix& x)
{
  Matrix a(x.rows(), x.cols() + 1);
  a.col(0).setOnes();
  a.rightCols(x.cols()) = x;
  return a;
}

double penalty(const Vector& w, double ridge)
{
  return ridge * w.tail(w.size() - 1).squaredNorm();
}

double loglik_from_eta(const Vector& eta, const Vector& y)
{
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    ll += y(i) * eta(i) - softplus(eta(i));
  return ll;
}

} // namespace

Vector linear_predictor(const Matrix& x, const Vector& w)
{
  Vector eta = Vector::Constant(x.rows(), w(0));
  if (x.cols() > 0)
    eta.noalias() += x * w.tail(x.cols());
  return eta;
}

double logistic_loglik(const Matrix& x, const Vector& y, const Vector& w)
{
  return loglik_from_eta(linear_predictor(x, w), y);
}

double logistic_objective(const Matrix& x, const Vector& y, const Vector& w, double ridge)
{
  return logistic_loglik(x, y, w) - penalty(w, ridge);
}

Vector logistic_gradient(const Matrix& x, const Vector& y, const Vector& w, double ridge)
{
  const Vector eta = linear_predictor(x, w);
  const Vector resid = y - eta.unaryExpr(&sigmoid);
  Vector g(w.size());
  g(0) = resid.sum();
  if (x.cols() > 0)
    g.tail(x.cols()).noalias() = x.transpose() * resid - 2.0 * ridge * w.tail(x.cols());
  return g;
}

LogisticModel fit_logistic(const Matrix& x, const Vector& y, double ridge,
                           const IrlsOptions& options)
{
  if (x.rows() != y.size())
    throw InvalidArgument("logistic: " + std::to_string(x.rows()) + " rows but " +
                          std::to_string(y.size()) + " labels");
  if (ridge < 0.0)
    throw InvalidArgument("logistic: ridge must be nonnegative");

  const Matrix a = with_intercept(x);
  const Eigen::Index q = a.cols();
  Vector penalty_diag = Vector::Constant(q, 2.0 * ridge);
  penalty_diag(0) = 0.0;

  LogisticModel model;
  model.ridge = ridge;
  model.weights = Vector::Zero(q);
  Vector& w = model.weights;
  Vector eta = Vector::Zero(a.rows());
  double objective = loglik_from_eta(eta, y);

  Eigen::LDLT<Matrix> ldlt;
  Matrix hessian(q, q);
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    model.iterations = iter;
    const Vector mu = eta.unaryExpr(&sigmoid);
    const Vector weight = mu.cwiseProduct(Vector::Ones(mu.size()) - mu);
    Vector grad = a.transpose() * (y - mu);
    grad -= penalty_diag.cwiseProduct(w);

    hessian.setZero();
    hessian.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose() * weight.cwiseSqrt().asDiagonal());
    hessian.diagonal() += penalty_diag;
    ldlt.compute(hessian.selfadjointView<Eigen::Lower>());
    Vector step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      // Singular curvature (fully saturated fit without ridge): nudge it.
      hessian.diagonal().array() += 1e-8 * (1.0 + hessian.diagonal().cwiseAbs().maxCoeff());
      ldlt.compute(hessian.selfadjointView<Eigen::Lower>());
      step = ldlt.solve(grad);
    }
    if (!step.allFinite())
      throw NumericalError("IRLS diverged at iteration " + std::to_string(iter));

    // Halve until the penalized objective does not decrease.
    double scale = 1.0;
    Vector candidate = w + step;
    Vector candidate_eta = a * candidate;
    double candidate_obj = loglik_from_eta(candidate_eta, y) - penalty(candidate, ridge);
    for (int h = 0; h < 40 && !(candidate_obj >= objective - 1e-12 * std::abs(objective)); ++h) {
      scale *= 0.5;
      candidate = w + scale * step;
      candidate_eta = a * candidate;
      candidate_obj = loglik_from_eta(candidate_eta, y) - penalty(candidate, ridge);
    }
    if (!candidate.allFinite() || !std::isfinite(candidate_obj))
      throw NumericalError("IRLS diverged at iteration " + std::to_string(iter));

    const double change = (scale * step).cwiseAbs().maxCoeff();
    w = std::move(candidate);
    eta = std::move(candidate_eta);
    objective = candidate_obj;
    if (change < options.tolerance) {
      model.converged = true;
      break;
    }
  }
  return model;
}

} // namespace cpt
