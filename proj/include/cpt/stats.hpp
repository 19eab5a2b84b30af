#pragma once

#include "cpt/classifier.hpp"
#include "cpt/dataset.hpp"

#include <cstdint>
#include <span>

namespace cpt {

enum class StatKind { in_sample, out_of_sample };

/// Which accuracy statistic to compute. For out-of-sample, kappa treated and
/// kappa control rows are held out per partition; either `partitions` random
/// partitions are averaged, or (exact) every distinct held-out pair of subsets.
struct StatSpec
{
  StatKind kind = StatKind::in_sample;
  /// Unset: floor(min(l, m) / 5) clamped to [1, min(l, m) - 1].
  std::optional<int> kappa;
  int partitions = 30;
  bool exact = false;
};

/// Upper bound on C(l, kappa) * C(m, kappa) for exact out-of-sample mode.
inline constexpr double kMaxExactPartitions = 50'000;

int default_kappa(Eigen::Index treated, Eigen::Index control);
/// kappa in effect for the given group sizes; throws InvalidArgument when
/// it is outside [1, min(l, m) - 1].
int resolve_kappa(const StatSpec& spec, Eigen::Index treated, Eigen::Index control);
void validate(const StatSpec& spec);

/// Fraction of rows classified correctly by a model trained on all rows.
/// `features` must already be prepared for the classifier.
double stat_in_sample(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                      std::uint64_t seed);

/// Accuracy on one explicit held-out set: trains on every other row (kept
/// in original order) and scores the held-out treated and control rows.
double holdout_accuracy(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                        std::span<const Eigen::Index> held_out_treated,
                        std::span<const Eigen::Index> held_out_control, std::uint64_t seed);

/// Out-of-sample accuracy averaged over partitions.
double stat_out_sample(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                       const StatSpec& stat, std::uint64_t seed);

/// Dispatches on stat.kind.
double statistic(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                 const StatSpec& stat, std::uint64_t seed);

// Dataset conveniences; these prepare features first.
double stat_in_sample(const ClassifierSpec& spec, const Dataset& d, std::uint64_t seed);
double stat_out_sample(const ClassifierSpec& spec, const Dataset& d, const StatSpec& stat,
                       std::uint64_t seed);

/// Binomial coefficient as a double (exact below 2^53).
double choose(Eigen::Index n, Eigen::Index k);

/// Calls visit(subset) for every k-subset of {0..n-1} in lexicographic order.
template <class Visit>
void for_each_combination(Eigen::Index n, Eigen::Index k, Visit&& visit)
{
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i)
    idx[static_cast<std::size_t>(i)] = i;
  for (;;) {
    visit(std::as_const(idx));
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i)
      --i;
    if (i < 0)
      return;
    ++idx[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i + 1; j < k; ++j)
      idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

} // namespace cpt
