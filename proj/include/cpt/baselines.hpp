#pragma once

#include "cpt/dataset.hpp"
#include "cpt/design.hpp"
#include "cpt/perm.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace cpt {

// ---------------------------------------------------------------- energy

/// Euclidean distance matrix between the rows of x.
template <class Derived>
Matrix pairwise_distances(const Eigen::MatrixBase<Derived>& x)
{
  const Eigen::Index n = x.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i)
      d(i, j) = d(j, i) = (x.row(i) - x.row(j)).norm();
  return d;
}

/// Two-sample energy statistic
///   (lm/n) [ 2/(lm) sum|X_i - Y_j| - 1/l^2 sum|X_i - X_j| - 1/m^2 sum|Y_i - Y_j| ]
/// from a precomputed distance matrix; labels pick X (1) and Y (0).
double energy_statistic(const Matrix& distances, const Labels& labels);

/// Same statistic from the two samples directly.
double energy_statistic(const Matrix& x, const Matrix& y);

/// Energy test calibrated by the permutation engine (conservative ties
/// unless the plan says otherwise).
TestResult energy_test(const Dataset& d, const PermutationPlan& plan);
TestResult energy_test(const Dataset& d, int B, std::uint64_t seed);

// ------------------------------------------------------------------- LRT

inline constexpr double kLrtRidgeFloor = 1e-10;

struct LrtResult
{
  double statistic = 0.0;
  double p_value = 1.0;
  int df = 0;
  int dropped_columns = 0;
  double loglik_full = 0.0;
  double loglik_null = 0.0;
  bool converged = true;
};

/// Columns of x kept after removing those collinear with the intercept or
/// with each other (QR with column pivoting on the centred matrix), in
/// ascending order.
std::vector<Eigen::Index> independent_columns(const Matrix& x);

/// Asymptotic chi-square likelihood-ratio test of the full logistic model
/// against the intercept-only model.
LrtResult lrt_logistic(const Dataset& d, DesignKind design);

// ----------------------------------------------------------- test specs

/// A named balance test, used by the type-I and power studies. Grammar:
/// `cpt-<classifier>`, `exact-<classifier>`, `energy`, `lrt`, `lrt2`.
struct TestSpec
{
  enum class Kind { cpt, exact_cpt, energy, lrt };
  Kind kind = Kind::cpt;
  std::string name;
  ClassifierSpec classifier;
  StatSpec stat;
  DesignKind design = DesignKind::main_effects;
};

TestSpec parse_test(std::string_view text, const StatSpec& stat = {});
std::vector<TestSpec> parse_tests(std::string_view comma_list, const StatSpec& stat = {});

/// p-value of one test on one dataset. Permutation tests take B, mode and
/// tie rule from `plan`, with plan.master_seed as their seed.
double run_test(const TestSpec& test, const Dataset& d, const PermutationPlan& plan);

/// Stable 64-bit FNV-1a hash, used to key per-test random streams.
std::uint64_t stable_hash(std::string_view text);

// -------------------------------------------------------- type-I study

/// Null data: either fresh N(0, I) covariates with a random assignment of
/// `treated` units, or an existing dataset with its treatment permuted
/// (within blocks when `mode` is within_block).
struct NullGenerator
{
  Eigen::Index n = 100;
  Eigen::Index p = 3;
  Eigen::Index treated = 50;
  std::optional<Dataset> source;
  PermuteMode mode = PermuteMode::across;
};

Dataset generate_null(const NullGenerator& gen, std::uint64_t seed);

struct Type1StudyConfig
{
  NullGenerator generator;
  TestSpec test;
  int replications = 300;
  std::vector<double> alpha_grid{0.01, 0.05, 0.1};
  /// B and tie rule for permutation tests.
  int B = 199;
  TieBreak tie_break = TieBreak::conservative;
  std::uint64_t seed = 0;
};

struct RejectionRow
{
  double alpha = 0.0;
  double rejection_rate = 0.0;
  double se = 0.0;
  int replications = 0;
};

struct Type1Study
{
  std::vector<RejectionRow> rows;
  std::vector<double> p_values;
};

/// Rejection rates of a test on null data. `progress`, when set, is called
/// with the number of completed replications (from worker threads).
Type1Study run_type1_study(const Type1StudyConfig& cfg,
                           const std::function<void(int)>& progress = {});

std::vector<RejectionRow> rejection_rates(const std::vector<double>& p_values,
                                          const std::vector<double>& alphas);

/// Counts of p-values in `bins` equal-width bins over [0, 1].
std::vector<HistogramBin> pvalue_histogram(const std::vector<double>& p_values, int bins = 20);

} // namespace cpt
