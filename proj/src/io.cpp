#include "cpt/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace cpt {

using nlohmann::json;

std::string format_real(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json to_json(const ClassifierSpec& spec)
{
  json j;
  if (const auto* p = std::get_if<LogisticParams>(&spec.params)) {
    j["family"] = "logistic";
    j["design"] = std::string(to_string(p->design));
    if (p->ridge)
      j["ridge"] = *p->ridge;
  } else if (const auto* p = std::get_if<ForestParams>(&spec.params)) {
    j["family"] = "forest";
    j["trees"] = p->trees;
    j["mtry"] = p->features_per_split ? json(*p->features_per_split) : json("sqrt");
    j["depth"] = p->max_depth ? json(*p->max_depth) : json("inf");
    j["min_leaf"] = p->min_leaf;
    j["seed_stream"] = p->seed_stream;
  } else if (const auto* p = std::get_if<KnnParams>(&spec.params)) {
    j["family"] = "knn";
    j["k"] = p->k;
  }
  return j;
}

ClassifierSpec classifier_from_json(const json& j)
{
  if (j.is_string())
    return parse_classifier(j.get<std::string>());
  if (!j.is_object() || !j.contains("family"))
    throw InvalidArgument("classifier JSON needs a \"family\" field");
  const auto family = j.at("family").get<std::string>();
  ClassifierSpec spec;
  if (family == "logistic") {
    LogisticParams p;
    const auto design = j.value("design", std::string("main"));
    if (design == "main")
      p.design = DesignKind::main_effects;
    else if (design == "two-way")
      p.design = DesignKind::two_way;
    else if (design == "two-way+squares")
      p.design = DesignKind::two_way_squares;
    else
      throw InvalidArgument("unknown logistic design '" + design + "'");
    if (j.contains("ridge"))
      p.ridge = j.at("ridge").get<double>();
    spec.params = p;
  } else if (family == "forest") {
    ForestParams p;
    p.trees = j.value("trees", p.trees);
    if (j.contains("mtry") && j.at("mtry").is_number_integer())
      p.features_per_split = j.at("mtry").get<int>();
    if (j.contains("depth") && j.at("depth").is_number_integer())
      p.max_depth = j.at("depth").get<int>();
    p.min_leaf = j.value("min_leaf", p.min_leaf);
    p.seed_stream = j.value("seed_stream", p.seed_stream);
    spec.params = p;
  } else if (family == "knn") {
    spec.params = KnnParams{j.value("k", 1)};
  } else {
    throw InvalidArgument("unknown classifier family '" + family + "'");
  }
  validate(spec);
  return spec;
}

json to_json(const StatSpec& spec, Eigen::Index treated, Eigen::Index control)
{
  json j;
  if (spec.kind == StatKind::in_sample) {
    j["kind"] = "in";
    return j;
  }
  j["kind"] = "out";
  if (spec.kappa)
    j["kappa"] = *spec.kappa;
  else if (treated > 0 && control > 0)
    j["kappa"] = default_kappa(treated, control);
  if (spec.exact)
    j["partitions"] = "exact";
  else
    j["partitions"] = spec.partitions;
  return j;
}

StatSpec stat_from_json(const json& j)
{
  StatSpec s;
  const auto kind = j.value("kind", std::string("in"));
  if (kind == "in")
    s.kind = StatKind::in_sample;
  else if (kind == "out")
    s.kind = StatKind::out_of_sample;
  else
    throw InvalidArgument("stat kind must be 'in' or 'out'");
  if (j.contains("kappa"))
    s.kappa = j.at("kappa").get<int>();
  if (j.contains("partitions")) {
    if (j.at("partitions").is_string() && j.at("partitions") == "exact")
      s.exact = true;
    else
      s.partitions = j.at("partitions").get<int>();
  }
  validate(s);
  return s;
}

json to_json(const PermutationPlan& plan)
{
  return {
      {"mode", plan.mode == PermuteMode::across ? "across" : "within"},
      {"B", plan.B},
      {"seed", plan.master_seed},
      {"tie_break", plan.tie_break == TieBreak::conservative ? "conservative" : "randomized"},
  };
}

json to_json(const TestResult& r, bool include_elapsed)
{
  json j;
  j["observed"] = r.observed;
  j["null_draws"] = r.null_draws;
  j["p_value"] = r.p_value;
  j["spec_echo"] = r.spec_echo;
  j["seed"] = r.seed;
  if (include_elapsed)
    j["elapsed"] = r.elapsed_seconds;
  return j;
}

json to_json(const ExactResult& r)
{
  return {
      {"p_value", r.p_value},
      {"observed", r.observed},
      {"assignments", r.assignments},
      {"at_least_observed", r.at_least_observed},
  };
}

json to_json(const LrtResult& r)
{
  return {
      {"statistic", r.statistic},   {"p_value", r.p_value},         {"df", r.df},
      {"dropped_columns", r.dropped_columns}, {"loglik_full", r.loglik_full},
      {"loglik_null", r.loglik_null}, {"converged", r.converged},
  };
}

std::string histogram_csv(const std::vector<HistogramBin>& bins, bool with_observed)
{
  std::string out = with_observed ? "bin_low,bin_high,count,observed\n" : "bin_low,bin_high,count\n";
  for (const auto& b : bins) {
    out += format_real(b.low) + "," + format_real(b.high) + "," + std::to_string(b.count);
    if (with_observed)
      out += b.contains_observed ? ",1" : ",0";
    out += "\n";
  }
  return out;
}

std::string power_table_csv(const std::vector<PowerRow>& rows)
{
  std::string out = "test,rho,alpha,power,se\n";
  for (const auto& r : rows)
    out += r.test + "," + format_real(r.rho) + "," + format_real(r.alpha) + "," +
           format_real(r.power) + "," + format_real(r.se) + "\n";
  return out;
}

std::string pvalues_csv(const std::vector<PValueRecord>& records)
{
  std::string out = "test,rho,replication,p_value\n";
  for (const auto& r : records)
    out += r.test + "," + format_real(r.rho) + "," + std::to_string(r.replication) + "," +
           format_real(r.p_value) + "\n";
  return out;
}

std::string roc_csv(const std::string& test, double rho, const std::vector<RocPoint>& points)
{
  std::string out = "test,rho,fpr,tpr\n";
  for (const auto& p : points)
    out += test + "," + format_real(rho) + "," + format_real(p.false_rate) + "," +
           format_real(p.true_rate) + "\n";
  return out;
}

std::string rejection_csv(const std::vector<RejectionRow>& rows)
{
  std::string out = "alpha,rejection_rate,se,replications\n";
  for (const auto& r : rows)
    out += format_real(r.alpha) + "," + format_real(r.rejection_rate) + "," + format_real(r.se) +
           "," + std::to_string(r.replications) + "\n";
  return out;
}

std::vector<double> read_pvalues(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw DataError("cannot open '" + path.string() + "'");
  std::vector<double> out;
  std::string line;
  std::optional<std::size_t> column;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos)
      continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');)
      cells.push_back(cell);
    if (first) {
      first = false;
      for (std::size_t k = 0; k < cells.size(); ++k)
        if (cells[k] == "p_value" || cells[k] == "p")
          column = k;
      if (column)
        continue;
      if (cells.size() != 1)
        throw DataError(path.string() + ": CSV needs a 'p_value' or 'p' column");
    }
    const std::string& cell = cells.at(column.value_or(0));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size() || !(v >= 0.0 && v <= 1.0))
      throw DataError(path.string() + ", line " + std::to_string(line_no) + ": invalid p-value '" +
                      cell + "'");
    out.push_back(v);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

} // namespace cpt
