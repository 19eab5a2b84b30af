#include "cpt/stats.hpp"
#include "cpt/parallel.hpp"
#include "cpt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpt {

namespace {

struct Groups
{
  std::vector<Eigen::Index> treated;
  std::vector<Eigen::Index> control;
};

Groups split_groups(const Labels& labels)
{
  Groups g;
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    (labels(i) == 1 ? g.treated : g.control).push_back(i);
  return g;
}

// First k entries of a uniformly shuffled copy of `pool`.
std::vector<Eigen::Index> sample_subset(std::vector<Eigen::Index> pool, int k, Stream& rng)
{
  for (int i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   rng.below(static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

} // namespace

double choose(Eigen::Index n, Eigen::Index k)
{
  if (k < 0 || k > n)
    return 0.0;
  k = std::min(k, n - k);
  double c = 1.0;
  for (Eigen::Index i = 1; i <= k; ++i)
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

int default_kappa(Eigen::Index treated, Eigen::Index control)
{
  const auto smaller = static_cast<int>(std::min(treated, control));
  return std::clamp(smaller / 5, 1, std::max(1, smaller - 1));
}

int resolve_kappa(const StatSpec& spec, Eigen::Index treated, Eigen::Index control)
{
  const int kappa = spec.kappa.value_or(default_kappa(treated, control));
  const auto smaller = std::min(treated, control);
  if (kappa < 1 || kappa >= smaller)
    throw InvalidArgument("kappa = " + std::to_string(kappa) + " must satisfy 1 <= kappa < min(l, m) = " +
                          std::to_string(smaller));
  return kappa;
}

void validate(const StatSpec& spec)
{
  if (spec.kind == StatKind::out_of_sample) {
    if (spec.kappa && *spec.kappa < 1)
      throw InvalidArgument("kappa must be >= 1");
    if (!spec.exact && spec.partitions < 1)
      throw InvalidArgument("partitions must be >= 1");
  }
}

double stat_in_sample(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                      std::uint64_t seed)
{
  const TrainedModel model = train(spec, features, labels, seed);
  const Labels predicted = classify_rows(model, features);
  const auto correct = (predicted.array() == labels.array()).count();
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double holdout_accuracy(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                        std::span<const Eigen::Index> held_out_treated,
                        std::span<const Eigen::Index> held_out_control, std::uint64_t seed)
{
  const Eigen::Index n = labels.size();
  std::vector<char> held(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i : held_out_treated)
    held[static_cast<std::size_t>(i)] = 1;
  for (Eigen::Index i : held_out_control)
    held[static_cast<std::size_t>(i)] = 1;

  std::vector<Eigen::Index> train_rows;
  train_rows.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    if (!held[static_cast<std::size_t>(i)])
      train_rows.push_back(i);

  const Matrix train_x = features(train_rows, Eigen::all);
  const Labels train_y = labels(train_rows);
  const TrainedModel model = train(spec, train_x, train_y, seed);

  int correct = 0;
  for (Eigen::Index i : held_out_treated)
    correct += classify(model, features.row(i));
  for (Eigen::Index i : held_out_control)
    correct += 1 - classify(model, features.row(i));
  const auto size = held_out_treated.size() + held_out_control.size();
  return static_cast<double>(correct) / static_cast<double>(size);
}

double stat_out_sample(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                       const StatSpec& stat, std::uint64_t seed)
{
  validate(stat);
  const Groups g = split_groups(labels);
  const auto l = static_cast<Eigen::Index>(g.treated.size());
  const auto m = static_cast<Eigen::Index>(g.control.size());
  const int kappa = resolve_kappa(stat, l, m);

  std::vector<double> accuracy;
  if (stat.exact) {
    // Only the identity of the held-out rows matters, and every pair of
    // subsets occurs equally often among the within-group orderings.
    const double total = choose(l, kappa) * choose(m, kappa);
    if (total > kMaxExactPartitions)
      throw InvalidArgument("exact out-of-sample statistic needs " + std::to_string(total) +
                            " partitions (limit 50000); use Monte Carlo partitions");
    std::vector<std::vector<Eigen::Index>> treated_sets;
    std::vector<std::vector<Eigen::Index>> control_sets;
    for_each_combination(l, kappa, [&](const std::vector<Eigen::Index>& c) {
      auto& s = treated_sets.emplace_back();
      for (auto i : c)
        s.push_back(g.treated[static_cast<std::size_t>(i)]);
    });
    for_each_combination(m, kappa, [&](const std::vector<Eigen::Index>& c) {
      auto& s = control_sets.emplace_back();
      for (auto i : c)
        s.push_back(g.control[static_cast<std::size_t>(i)]);
    });
    accuracy.resize(treated_sets.size() * control_sets.size());
    parallel_for(accuracy.size(), [&](std::size_t k) {
      const auto& ts = treated_sets[k / control_sets.size()];
      const auto& cs = control_sets[k % control_sets.size()];
      accuracy[k] = holdout_accuracy(spec, features, labels, ts, cs,
                                     derive_seed(seed, {tag(StreamTag::classifier), k}));
    });
  } else {
    accuracy.resize(static_cast<std::size_t>(stat.partitions));
    parallel_for(accuracy.size(), [&](std::size_t r) {
      Stream rng(derive_seed(seed, {tag(StreamTag::partition), r}));
      const auto ts = sample_subset(g.treated, kappa, rng);
      const auto cs = sample_subset(g.control, kappa, rng);
      accuracy[r] = holdout_accuracy(spec, features, labels, ts, cs,
                                     derive_seed(seed, {tag(StreamTag::classifier), r}));
    });
  }
  return std::accumulate(accuracy.begin(), accuracy.end(), 0.0) /
         static_cast<double>(accuracy.size());
}

double statistic(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                 const StatSpec& stat, std::uint64_t seed)
{
  if (stat.kind == StatKind::in_sample)
    return stat_in_sample(spec, features, labels, seed);
  return stat_out_sample(spec, features, labels, stat, seed);
}

double stat_in_sample(const ClassifierSpec& spec, const Dataset& d, std::uint64_t seed)
{
  return stat_in_sample(spec, prepare_features(spec, d.covariates), d.treatment, seed);
}

double stat_out_sample(const ClassifierSpec& spec, const Dataset& d, const StatSpec& stat,
                       std::uint64_t seed)
{
  return stat_out_sample(spec, prepare_features(spec, d.covariates), d.treatment, stat, seed);
}

} // namespace cpt
