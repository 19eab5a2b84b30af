#include "cpt/classifier.hpp"
#include "cpt/parallel.hpp"
#include "cpt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpt {

int DecisionTree::classify(const Eigen::Ref<const RowVector>& x) const
{
  int at = 0;
  while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = x(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(at)].label;
}

namespace {

struct Split
{
  int feature = -1;
  double threshold = 0.0;
  // Sum over children of (n0^2 + n1^2) / n_child; larger is purer.
  double score = -1.0;
};

double purity(double zeros, double ones) { return (zeros * zeros + ones * ones) / (zeros + ones); }

} // namespace

DecisionTree grow_tree(const Matrix& x, const Labels& y, std::vector<Eigen::Index> rows,
                       int features_per_split, std::optional<int> max_depth, int min_leaf,
                       std::uint64_t seed)
{
  Stream rng(seed);
  const auto q = static_cast<int>(x.cols());
  std::vector<int> features(static_cast<std::size_t>(q));
  std::iota(features.begin(), features.end(), 0);

  struct Task
  {
    int node;
    std::vector<Eigen::Index> rows;
    int depth;
  };

  DecisionTree tree;
  tree.nodes.emplace_back();
  std::vector<Task> stack;
  stack.push_back({0, std::move(rows), 0});
  std::vector<std::pair<double, int>> column;

  while (!stack.empty()) {
    Task task = std::move(stack.back());
    stack.pop_back();
    const auto size = static_cast<Eigen::Index>(task.rows.size());
    Eigen::Index ones = 0;
    for (Eigen::Index r : task.rows)
      ones += y(r);
    tree.nodes[static_cast<std::size_t>(task.node)].label = 2 * ones > size ? 1 : 0;
    if (ones == 0 || ones == size || size < 2 * min_leaf || (max_depth && task.depth >= *max_depth))
      continue;

    // Visit features in random order until features_per_split non-constant
    // ones have been examined.
    Split best;
    int examined = 0;
    for (int f = 0; f < q && examined < features_per_split; ++f) {
      const auto pick = f + static_cast<int>(rng.below(static_cast<std::uint64_t>(q - f)));
      std::swap(features[static_cast<std::size_t>(f)], features[static_cast<std::size_t>(pick)]);
      const int feature = features[static_cast<std::size_t>(f)];

      column.clear();
      for (Eigen::Index r : task.rows)
        column.emplace_back(x(r, feature), y(r));
      std::sort(column.begin(), column.end());
      if (column.front().first == column.back().first)
        continue;
      ++examined;

      double left_ones = 0.0;
      for (Eigen::Index i = 1; i < size; ++i) {
        left_ones += column[static_cast<std::size_t>(i - 1)].second;
        if (column[static_cast<std::size_t>(i - 1)].first == column[static_cast<std::size_t>(i)].first)
          continue;
        if (i < min_leaf || size - i < min_leaf)
          continue;
        const double left_n = static_cast<double>(i);
        const double right_n = static_cast<double>(size - i);
        const double right_ones = static_cast<double>(ones) - left_ones;
        const double score = purity(left_n - left_ones, left_ones) +
                             purity(right_n - right_ones, right_ones);
        if (score > best.score) {
          const double lo = column[static_cast<std::size_t>(i - 1)].first;
          const double hi = column[static_cast<std::size_t>(i)].first;
          double threshold = lo + 0.5 * (hi - lo);
          if (!(threshold < hi))
            threshold = lo;
          best = {feature, threshold, score};
        }
      }
    }
    if (best.feature < 0)
      continue;

    std::vector<Eigen::Index> left_rows;
    std::vector<Eigen::Index> right_rows;
    for (Eigen::Index r : task.rows)
      (x(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    stack.push_back({right, std::move(right_rows), task.depth + 1});
    stack.push_back({left, std::move(left_rows), task.depth + 1});
  }
  return tree;
}

ForestModel train_forest(const ForestParams& params, const Matrix& x, const Labels& y,
                         std::uint64_t seed)
{
  const Eigen::Index n = x.rows();
  const int mtry = params.features_per_split.value_or(
      static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.cols())))));

  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(params.trees));
  parallel_for(forest.trees.size(), [&](std::size_t t) {
    Stream bootstrap(derive_seed(seed, {params.seed_stream, t, 0}));
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    for (auto& r : rows)
      r = static_cast<Eigen::Index>(bootstrap.below(static_cast<std::uint64_t>(n)));
    forest.trees[t] = grow_tree(x, y, std::move(rows), std::max(1, mtry), params.max_depth,
                                params.min_leaf, derive_seed(seed, {params.seed_stream, t, 1}));
  });
  return forest;
}

} // namespace cpt
