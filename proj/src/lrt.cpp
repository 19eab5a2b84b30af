#include "cpt/baselines.hpp"
#include "cpt/logistic.hpp"
#include "cpt/special.hpp"

#include <Eigen/QR>

#include <algorithm>

namespace cpt {

std::vector<Eigen::Index> independent_columns(const Matrix& x)
{
  if (x.cols() == 0)
    return {};
  const Matrix centred = x.rowwise() - x.colwise().mean();
  Eigen::ColPivHouseholderQR<Matrix> qr(centred);
  const double scale = std::max(1.0, centred.cwiseAbs().maxCoeff());
  qr.setThreshold(1e-9 * scale);
  const Eigen::Index rank = qr.rank();
  std::vector<Eigen::Index> kept(static_cast<std::size_t>(rank));
  for (Eigen::Index k = 0; k < rank; ++k)
    kept[static_cast<std::size_t>(k)] = qr.colsPermutation().indices()(k);
  std::sort(kept.begin(), kept.end());
  return kept;
}

LrtResult lrt_logistic(const Dataset& d, DesignKind design)
{
  const Matrix full = expand_design(d.covariates, design);
  const auto kept = independent_columns(full);
  const Matrix x = full(Eigen::all, kept);
  const Vector y = d.treatment.cast<double>();

  IrlsOptions options;
  options.max_iterations = 100;
  const LogisticModel null_fit = fit_logistic(Matrix(d.n(), 0), y, kLrtRidgeFloor, options);
  const LogisticModel full_fit = fit_logistic(x, y, kLrtRidgeFloor, options);

  LrtResult r;
  r.df = static_cast<int>(kept.size());
  r.dropped_columns = static_cast<int>(full.cols()) - r.df;
  r.loglik_null = logistic_loglik(Matrix(d.n(), 0), y, null_fit.weights);
  r.loglik_full = logistic_loglik(x, y, full_fit.weights);
  r.statistic = std::max(0.0, 2.0 * (r.loglik_full - r.loglik_null));
  r.p_value = r.df == 0 ? 1.0 : chi_square_sf(r.statistic, r.df);
  r.converged = null_fit.converged && full_fit.converged;
  return r;
}

} // namespace cpt
