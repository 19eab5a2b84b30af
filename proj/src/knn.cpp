#include "cpt/classifier.hpp"

#include <algorithm>
#include <numeric>

namespace cpt {

int classify_knn(const KnnModel& model, const Eigen::Ref<const RowVector>& x)
{
  const Eigen::Index n = model.points.rows();
  const Vector dist = (model.points.rowwise() - x).rowwise().squaredNorm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto k = static_cast<std::ptrdiff_t>(std::min<Eigen::Index>(model.k, n));
  // Equal distances resolve to the lower row index.
  std::partial_sort(order.begin(), order.begin() + k, order.end(),
                    [&](Eigen::Index a, Eigen::Index b) {
                      return dist(a) < dist(b) || (dist(a) == dist(b) && a < b);
                    });
  int ones = 0;
  for (std::ptrdiff_t i = 0; i < k; ++i)
    ones += model.labels(order[static_cast<std::size_t>(i)]);
  return 2 * ones > k ? 1 : 0;
}

} // namespace cpt
