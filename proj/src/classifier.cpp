#include "cpt/classifier.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

namespace cpt {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
  using Ts::operator()...;
};

std::map<std::string, std::string> parse_options(std::string_view text, std::string_view owner)
{
  std::map<std::string, std::string> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = text.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos || eq == 0)
      throw InvalidArgument("classifier '" + std::string(owner) + "': expected key=value, got '" +
                            std::string(item) + "'");
    out.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  return out;
}

int to_int(const std::string& key, const std::string& value)
{
  int v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw InvalidArgument("classifier option '" + key + "' expects an integer, got '" + value + "'");
  return v;
}

double to_real(const std::string& key, const std::string& value)
{
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    throw InvalidArgument("classifier option '" + key + "' expects a number, got '" + value + "'");
  return v;
}

std::string format_real(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void check_labels(const Matrix& features, const Labels& labels)
{
  if (features.rows() != labels.size())
    throw InvalidArgument("train: " + std::to_string(features.rows()) + " feature rows but " +
                          std::to_string(labels.size()) + " labels");
  if (features.rows() < 2)
    throw InvalidArgument("train: need at least 2 rows");
  if (((labels.array() != 0) && (labels.array() != 1)).any())
    throw InvalidArgument("train: labels must be 0/1");
}

} // namespace

ClassifierSpec parse_classifier(std::string_view text)
{
  const auto colon = text.find(':');
  const std::string name(text.substr(0, colon));
  auto options = colon == std::string_view::npos ? std::map<std::string, std::string>{}
                                                 : parse_options(text.substr(colon + 1), name);
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = options.find(key);
    if (it == options.end())
      return std::nullopt;
    std::string v = it->second;
    options.erase(it);
    return v;
  };

  ClassifierSpec spec;
  if (name == "logistic" || name == "logistic2" || name == "logistic2sq") {
    LogisticParams p;
    p.design = name == "logistic"    ? DesignKind::main_effects
               : name == "logistic2" ? DesignKind::two_way
                                     : DesignKind::two_way_squares;
    if (auto v = take("ridge"))
      p.ridge = to_real("ridge", *v);
    spec.params = p;
  } else if (name == "forest") {
    ForestParams p;
    if (auto v = take("trees"))
      p.trees = to_int("trees", *v);
    if (auto v = take("mtry"); v && *v != "sqrt")
      p.features_per_split = to_int("mtry", *v);
    if (auto v = take("depth"); v && *v != "inf")
      p.max_depth = to_int("depth", *v);
    if (auto v = take("min_leaf"))
      p.min_leaf = to_int("min_leaf", *v);
    if (auto v = take("seed_stream"))
      p.seed_stream = static_cast<std::uint64_t>(std::stoull(*v));
    spec.params = p;
  } else if (name == "knn") {
    KnnParams p;
    if (auto v = take("k"))
      p.k = to_int("k", *v);
    spec.params = p;
  } else {
    throw InvalidArgument("unknown classifier '" + name +
                          "' (expected logistic, logistic2, logistic2sq, forest or knn)");
  }
  if (!options.empty())
    throw InvalidArgument("classifier '" + name + "': unknown option '" + options.begin()->first +
                          "'");
  validate(spec);
  return spec;
}

std::string to_string(const ClassifierSpec& spec)
{
  return std::visit(
      overloaded{
          [](const LogisticParams& p) {
            std::string s = p.design == DesignKind::main_effects ? "logistic"
                            : p.design == DesignKind::two_way    ? "logistic2"
                                                                 : "logistic2sq";
            if (p.ridge)
              s += ":ridge=" + format_real(*p.ridge);
            return s;
          },
          [](const ForestParams& p) {
            std::ostringstream s;
            s << "forest:trees=" << p.trees << ",mtry="
              << (p.features_per_split ? std::to_string(*p.features_per_split) : "sqrt")
              << ",depth=" << (p.max_depth ? std::to_string(*p.max_depth) : "inf")
              << ",min_leaf=" << p.min_leaf << ",seed_stream=" << p.seed_stream;
            return s.str();
          },
          [](const KnnParams& p) { return "knn:k=" + std::to_string(p.k); },
      },
      spec.params);
}

void validate(const ClassifierSpec& spec)
{
  std::visit(overloaded{
                 [](const LogisticParams& p) {
                   if (p.ridge && !(*p.ridge >= 0.0 && std::isfinite(*p.ridge)))
                     throw InvalidArgument("logistic: ridge must be a finite value >= 0");
                 },
                 [](const ForestParams& p) {
                   if (p.trees < 1)
                     throw InvalidArgument("forest: trees must be >= 1");
                   if (p.features_per_split && *p.features_per_split < 1)
                     throw InvalidArgument("forest: mtry must be >= 1");
                   if (p.max_depth && *p.max_depth < 1)
                     throw InvalidArgument("forest: depth must be >= 1");
                   if (p.min_leaf < 1)
                     throw InvalidArgument("forest: min_leaf must be >= 1");
                 },
                 [](const KnnParams& p) {
                   if (p.k < 1)
                     throw InvalidArgument("knn: k must be >= 1");
                 },
             },
             spec.params);
}

Matrix prepare_features(const ClassifierSpec& spec, const Matrix& covariates)
{
  if (const auto* p = std::get_if<LogisticParams>(&spec.params))
    return expand_design(covariates, p->design);
  return covariates;
}

TrainedModel train(const ClassifierSpec& spec, const Matrix& features, const Labels& labels,
                   std::uint64_t seed)
{
  check_labels(features, labels);
  TrainedModel model;
  model.spec = spec;
  model.training_size = features.rows();
  model.arity = features.cols();
  std::visit(overloaded{
                 [&](const LogisticParams& p) {
                   const double ridge = p.ridge.value_or(1e-4 * static_cast<double>(features.rows()));
                   model.state = fit_logistic(features, labels.cast<double>(), ridge);
                 },
                 [&](const ForestParams& p) { model.state = train_forest(p, features, labels, seed); },
                 [&](const KnnParams& p) { model.state = KnnModel{features, labels, p.k}; },
             },
             spec.params);
  return model;
}

int classify(const TrainedModel& model, const Eigen::Ref<const RowVector>& x)
{
  if (x.size() != model.arity)
    throw InvalidArgument("classify: row has " + std::to_string(x.size()) +
                          " features, model expects " + std::to_string(model.arity));
  return std::visit(overloaded{
                        [&](const LogisticModel& m) {
                          const double eta = m.weights(0) + x.dot(m.weights.tail(x.size()));
                          // Probability exactly 0.5 goes to class 0.
                          return eta > 0.0 ? 1 : 0;
                        },
                        [&](const ForestModel& m) {
                          std::size_t votes = 0;
                          for (const auto& tree : m.trees)
                            votes += static_cast<std::size_t>(tree.classify(x));
                          return 2 * votes > m.trees.size() ? 1 : 0;
                        },
                        [&](const KnnModel& m) { return classify_knn(m, x); },
                    },
                    model.state);
}

Labels classify_rows(const TrainedModel& model, const Matrix& rows)
{
  if (rows.cols() != model.arity)
    throw InvalidArgument("classify: rows have " + std::to_string(rows.cols()) +
                          " features, model expects " + std::to_string(model.arity));
  if (const auto* m = std::get_if<LogisticModel>(&model.state))
    return (linear_predictor(rows, m->weights).array() > 0.0).cast<int>();
  Labels out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    out(i) = classify(model, rows.row(i));
  return out;
}

double loglik(const TrainedModel& model, const Matrix& features, const Labels& labels)
{
  const auto* m = std::get_if<LogisticModel>(&model.state);
  if (!m)
    throw InvalidArgument("loglik requires a logistic model");
  if (features.cols() != model.arity || features.rows() != labels.size())
    throw InvalidArgument("loglik: dimension mismatch");
  return logistic_loglik(features, labels.cast<double>(), m->weights);
}

} // namespace cpt
