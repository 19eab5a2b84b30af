#include "cpt/sim.hpp"
#include "cpt/parallel.hpp"
#include "cpt/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace cpt {

Matrix equicorrelation(Eigen::Index p, double rho)
{
  Matrix s = Matrix::Constant(p, p, rho);
  s.diagonal().setOnes();
  return s;
}

namespace {

void check_rho(Eigen::Index p, double rho)
{
  const bool ok = rho < 1.0 && (p < 2 || rho > -1.0 / static_cast<double>(p - 1));
  if (!ok || !std::isfinite(rho))
    throw InvalidArgument("rho = " + std::to_string(rho) +
                          " does not give a positive definite covariance for p = " +
                          std::to_string(p));
}

} // namespace

Dataset gen_mvn_dataset(double rho, Eigen::Index n_treated, Eigen::Index n_control,
                        std::uint64_t seed, Eigen::Index p)
{
  check_rho(p, rho);
  if (n_treated < 1 || n_control < 1)
    throw InvalidArgument("both groups need at least one unit");
  Eigen::LLT<Matrix> llt(equicorrelation(p, rho));
  if (llt.info() != Eigen::Success)
    throw InvalidArgument("covariance is not positive definite");
  const Matrix lower = llt.matrixL();

  Stream rng(seed);
  const Eigen::Index n = n_treated + n_control;
  Matrix z(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      z(i, j) = rng.normal();
  z.topRows(n_treated) = z.topRows(n_treated) * lower.transpose();

  Labels t = Labels::Zero(n);
  t.head(n_treated).setOnes();
  return make_dataset(std::move(z), std::move(t));
}

SimulationConfig SimulationConfig::full_preset()
{
  SimulationConfig cfg;
  for (int k = 0; k <= 15; ++k)
    cfg.rho_grid.push_back(0.05 * k);
  return cfg;
}

SimulationConfig SimulationConfig::desk_preset()
{
  SimulationConfig cfg;
  cfg.replications = 200;
  cfg.B = 199;
  for (int k = 0; k <= 5; ++k)
    cfg.rho_grid.push_back(0.15 * k);
  return cfg;
}

void validate(const SimulationConfig& cfg)
{
  if (cfg.replications < 1)
    throw InvalidArgument("replications must be >= 1");
  if (cfg.tests.empty())
    throw InvalidArgument("no tests configured");
  if (cfg.rho_grid.empty())
    throw InvalidArgument("rho grid is empty");
  for (double rho : cfg.rho_grid)
    check_rho(cfg.p, rho);
  for (double a : cfg.alpha_levels)
    if (!(a > 0.0 && a < 1.0))
      throw InvalidArgument("alpha levels must lie in (0, 1)");
}

std::vector<double> PowerStudy::cell(const std::string& test, double rho) const
{
  std::vector<double> out;
  for (const auto& rec : p_values)
    if (rec.test == test && rec.rho == rho)
      out.push_back(rec.p_value);
  return out;
}

PowerStudy run_power_study(const SimulationConfig& cfg,
                           const std::function<void(const std::string&)>& progress)
{
  validate(cfg);
  PowerStudy study;
  const auto reps = static_cast<std::size_t>(cfg.replications);
  const auto n_tests = cfg.tests.size();

  for (double rho : cfg.rho_grid) {
    const auto rho_key = std::bit_cast<std::uint64_t>(rho);
    std::vector<double> p(reps * n_tests);
    parallel_for(reps, [&](std::size_t r) {
      try {
        const Dataset d = gen_mvn_dataset(rho, cfg.n_treated, cfg.n_control,
                                          derive_seed(cfg.seed, {tag(StreamTag::data), rho_key, r}),
                                          cfg.p);
        for (std::size_t k = 0; k < n_tests; ++k) {
          const TestSpec& test = cfg.tests[k];
          PermutationPlan plan;
          plan.B = cfg.B;
          plan.tie_break = cfg.tie_break;
          plan.master_seed = derive_seed(
              cfg.seed, {tag(StreamTag::test), rho_key, r, stable_hash(test.name)});
          p[r * n_tests + k] = run_test(test, d, plan);
        }
      } catch (const Error& e) {
        std::ostringstream where;
        where << "rho " << rho << ", replication " << r << ": " << e.what();
        throw Error(where.str());
      }
    });

    for (std::size_t k = 0; k < n_tests; ++k) {
      std::vector<double> cell(reps);
      for (std::size_t r = 0; r < reps; ++r) {
        cell[r] = p[r * n_tests + k];
        study.p_values.push_back({cfg.tests[k].name, rho, static_cast<int>(r), cell[r]});
      }
      for (const auto& row : rejection_rates(cell, cfg.alpha_levels))
        study.rows.push_back({cfg.tests[k].name, rho, row.alpha, row.rejection_rate, row.se});
    }
    if (progress) {
      std::ostringstream msg;
      msg << "rho " << rho << " done";
      progress(msg.str());
    }
  }
  return study;
}

std::vector<RocPoint> roc_points(const std::vector<double>& null_pvalues,
                                 const std::vector<double>& alt_pvalues)
{
  if (null_pvalues.empty() || alt_pvalues.empty())
    throw InvalidArgument("ROC needs nonempty null and alternative p-values");
  std::vector<double> null_sorted = null_pvalues;
  std::vector<double> alt_sorted = alt_pvalues;
  std::sort(null_sorted.begin(), null_sorted.end());
  std::sort(alt_sorted.begin(), alt_sorted.end());
  std::vector<double> thresholds = null_sorted;
  thresholds.insert(thresholds.end(), alt_sorted.begin(), alt_sorted.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  auto fraction_at_most = [](const std::vector<double>& sorted, double t) {
    return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) /
           static_cast<double>(sorted.size());
  };
  std::vector<RocPoint> out{{0.0, 0.0}};
  for (double t : thresholds)
    out.push_back({fraction_at_most(null_sorted, t), fraction_at_most(alt_sorted, t)});
  return out;
}

} // namespace cpt
