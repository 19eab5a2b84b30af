#include "cpt/baselines.hpp"

namespace cpt {

double energy_statistic(const Matrix& distances, const Labels& labels)
{
  const Eigen::Index n = labels.size();
  if (distances.rows() != n || distances.cols() != n)
    throw InvalidArgument("energy: distance matrix does not match labels");
  double within_x = 0.0;
  double within_y = 0.0;
  double between = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dij = distances(i, j);
      if (labels(i) != labels(j))
        between += dij;
      else if (labels(i) == 1)
        within_x += dij;
      else
        within_y += dij;
    }
  const double l = static_cast<double>(labels.sum());
  const double m = static_cast<double>(n) - l;
  if (l == 0.0 || m == 0.0)
    throw InvalidArgument("energy: both groups must be nonempty");
  // Unordered pair sums; the within-group double sums count each pair twice.
  return (l * m / static_cast<double>(n)) *
         (2.0 * between / (l * m) - 2.0 * within_x / (l * l) - 2.0 * within_y / (m * m));
}

double energy_statistic(const Matrix& x, const Matrix& y)
{
  if (x.cols() != y.cols())
    throw InvalidArgument("energy: samples differ in dimension");
  Matrix pooled(x.rows() + y.rows(), x.cols());
  pooled << x, y;
  Labels labels = Labels::Zero(pooled.rows());
  labels.head(x.rows()).setOnes();
  return energy_statistic(pairwise_distances(pooled), labels);
}

TestResult energy_test(const Dataset& d, const PermutationPlan& plan)
{
  if (d.n() < 4)
    throw InvalidArgument("energy test needs at least 4 units");
  const Matrix distances = pairwise_distances(d.covariates);
  TestResult r = permutation_test(d.treatment, d.blocks, plan,
                                  [&](const Labels& labels, std::uint64_t) {
                                    return energy_statistic(distances, labels);
                                  });
  r.spec_echo["test"] = "energy";
  r.spec_echo["n"] = d.n();
  r.spec_echo["n_treated"] = d.n_treated();
  return r;
}

TestResult energy_test(const Dataset& d, int B, std::uint64_t seed)
{
  PermutationPlan plan;
  plan.B = B;
  plan.master_seed = seed;
  return energy_test(d, plan);
}

} // namespace cpt
