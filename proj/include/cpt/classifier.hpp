#pragma once

#include "cpt/design.hpp"
#include "cpt/logistic.hpp"
#include "cpt/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cpt {

struct LogisticParams
{
  DesignKind design = DesignKind::main_effects;
  /// Ridge strength; unset means 1e-4 * (training rows).
  std::optional<double> ridge;
};

struct ForestParams
{
  int trees = 200;
  /// Candidate features per split; unset means ceil(sqrt(q)).
  std::optional<int> features_per_split;
  /// Unset means unlimited depth.
  std::optional<int> max_depth;
  int min_leaf = 1;
  std::uint64_t seed_stream = 0;
};

struct KnnParams
{
  int k = 1;
};

enum class Family { logistic, forest, knn };

/// Declarative classifier choice. Written on the command line as
/// `logistic`, `logistic2`, `logistic2sq`, `forest:trees=200,mtry=3`, `knn:k=1`.
struct ClassifierSpec
{
  std::variant<LogisticParams, ForestParams, KnnParams> params = LogisticParams{};

  Family family() const { return static_cast<Family>(params.index()); }
  /// True when training consumes randomness (bootstrap, feature sampling).
  bool randomized() const { return family() == Family::forest; }
};

ClassifierSpec parse_classifier(std::string_view text);
/// Canonical string form; parse_classifier(to_string(s)) reproduces s.
std::string to_string(const ClassifierSpec& spec);
/// Throws InvalidArgument on out-of-range fields.
void validate(const ClassifierSpec& spec);

struct TreeNode
{
  /// -1 marks a leaf.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int label = 0;
};

struct DecisionTree
{
  std::vector<TreeNode> nodes;

  int classify(const Eigen::Ref<const RowVector>& x) const;
};

struct ForestModel
{
  std::vector<DecisionTree> trees;
};

struct KnnModel
{
  Matrix points;
  Labels labels;
  int k = 1;
};

/// A fitted classifier. Operates on prepared feature rows (see
/// prepare_features); classify is a pure function of the state.
struct TrainedModel
{
  ClassifierSpec spec;
  std::variant<LogisticModel, ForestModel, KnnModel> state;
  Eigen::Index training_size = 0;
  Eigen::Index arity = 0;
};

/// Maps raw covariates into the feature space the classifier trains on.
/// Expands interactions for logistic designs; identity otherwise.
Matrix prepare_features(const ClassifierSpec& spec, const Matrix& covariates);

/// Deterministic in (spec, features, labels, seed). A single-class training
/// set yields a model predicting that class everywhere.
TrainedModel train(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                   std::uint64_t seed);

int classify(const TrainedModel& model, const Eigen::Ref<const RowVector>& x);
Labels classify_rows(const TrainedModel& model, const Matrix& rows);

/// Unpenalized Bernoulli log-likelihood of a logistic model on (features, labels).
double loglik(const TrainedModel& model, const Matrix& features, const Labels& labels);

// Family-specific trainers.
ForestModel train_forest(const ForestParams& params, const Matrix& x, const Labels& y,
                         std::uint64_t seed);
DecisionTree grow_tree(const Matrix& x, const Labels& y, std::vector<Eigen::Index> rows,
                       int features_per_split, std::optional<int> max_depth, int min_leaf,
                       std::uint64_t seed);
int classify_knn(const KnnModel& model, const Eigen::Ref<const RowVector>& x);

} // namespace cpt
