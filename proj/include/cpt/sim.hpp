#pragma once

#include "cpt/baselines.hpp"
#include "cpt/dataset.hpp"

#include <functional>
#include <string>
#include <vector>

namespace cpt {

/// p x p matrix with unit diagonal and rho elsewhere. Positive definite iff
/// -1/(p-1) < rho < 1.
Matrix equicorrelation(Eigen::Index p, double rho);

/// Treated rows ~ N(0, Sigma_rho), control rows ~ N(0, I), treated first.
/// Normals come from the Box-Muller transform of a counter-based stream and
/// are mapped through the Cholesky factor of Sigma_rho.
Dataset gen_mvn_dataset(double rho, Eigen::Index n_treated, Eigen::Index n_control,
                        std::uint64_t seed, Eigen::Index p = 3);

struct SimulationConfig
{
  Eigen::Index n_treated = 100;
  Eigen::Index n_control = 100;
  Eigen::Index p = 3;
  std::vector<double> rho_grid;
  int replications = 1000;
  std::vector<double> alpha_levels{0.05, 0.01};
  int B = 500;
  std::vector<TestSpec> tests;
  std::uint64_t seed = 0;
  TieBreak tie_break = TieBreak::conservative;

  /// 1000 replications, B = 500, rho = 0, 0.05, ..., 0.75.
  static SimulationConfig full_preset();
  /// 200 replications, B = 199, rho = 0, 0.15, ..., 0.75.
  static SimulationConfig desk_preset();
};

void validate(const SimulationConfig& cfg);

struct PowerRow
{
  std::string test;
  double rho = 0.0;
  double alpha = 0.0;
  double power = 0.0;
  double se = 0.0;
};

struct PValueRecord
{
  std::string test;
  double rho = 0.0;
  int replication = 0;
  double p_value = 1.0;
};

struct PowerStudy
{
  std::vector<PowerRow> rows;
  std::vector<PValueRecord> p_values;

  /// p-values of one (test, rho) cell in replication order.
  std::vector<double> cell(const std::string& test, double rho) const;
};

/// Runs every test on every generated dataset. The data stream depends on
/// (seed, rho, replication) and each test's stream additionally on its name,
/// so results do not depend on grid order, test order or worker count.
PowerStudy run_power_study(const SimulationConfig& cfg,
                           const std::function<void(const std::string&)>& progress = {});

struct RocPoint
{
  double false_rate = 0.0;
  double true_rate = 0.0;
};

/// Empirical ROC: for each threshold t in the sorted union of p-values,
/// (fraction of null p <= t, fraction of alternative p <= t); starts at
/// (0, 0) and ends at (1, 1).
std::vector<RocPoint> roc_points(const std::vector<double>& null_pvalues,
                                 const std::vector<double>& alt_pvalues);

} // namespace cpt
