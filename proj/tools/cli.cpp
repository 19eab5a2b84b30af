#include "cli.hpp"

#include "cpt/baselines.hpp"
#include "cpt/dataset.hpp"
#include "cpt/io.hpp"
#include "cpt/parallel.hpp"
#include "cpt/perm.hpp"
#include "cpt/sim.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>

namespace cpt::cli {

namespace {

using nlohmann::json;

const std::vector<std::string> kSubcommands{"test", "exact", "simulate", "type1", "roc"};

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

struct DataOptions
{
  std::string path;
  std::string treatment = "treatment";
  std::string block;
  std::vector<std::string> one_hot;
  bool standardize = false;

  void add_to(CLI::App& app, bool required)
  {
    auto* d = app.add_option("--data", path, "Input CSV (header row, comma separated)");
    if (required)
      d->required();
    app.add_option("--treatment", treatment, "Name of the 0/1 treatment column");
    app.add_option("--block", block, "Name of the block column (enables --permute within)");
    app.add_option("--one-hot", one_hot, "Categorical columns to expand into k-1 indicators")
        ->delimiter(',');
    app.add_flag("--standardize", standardize, "z-score every covariate column");
  }

  Dataset load() const
  {
    CsvOptions o;
    o.treatment_column = treatment;
    if (!block.empty())
      o.block_column = block;
    o.one_hot = one_hot;
    o.standardize = standardize;
    return load_csv(path, o);
  }
};

struct StatOptions
{
  std::string kind = "in";
  int kappa = 0;
  std::string partitions = "30";

  void add_to(CLI::App& app)
  {
    app.add_option("--stat", kind, "Accuracy statistic: in (in-sample) or out (held-out)")
        ->check(CLI::IsMember({"in", "out"}));
    app.add_option("--kappa", kappa,
                   "Held-out rows per group for --stat out (0 = floor(min(l,m)/5))");
    app.add_option("--partitions", partitions,
                   "Random partitions averaged for --stat out, or 'exact'");
  }

  StatSpec spec() const
  {
    StatSpec s;
    s.kind = kind == "out" ? StatKind::out_of_sample : StatKind::in_sample;
    if (kappa > 0)
      s.kappa = kappa;
    if (partitions == "exact") {
      s.exact = true;
    } else {
      try {
        s.partitions = std::stoi(partitions);
      } catch (const std::exception&) {
        throw UsageError("--partitions expects a positive integer or 'exact'");
      }
    }
    validate(s);
    return s;
  }
};

struct SeedOption
{
  std::uint64_t seed = 0;
  CLI::Option* option = nullptr;

  void add_to(CLI::App& app)
  {
    option = app.add_option("--seed", seed, "Master seed (falls back to $CPT_SEED, then 0)");
  }

  std::uint64_t value() const
  {
    if (option->count() > 0)
      return seed;
    if (const char* env = std::getenv("CPT_SEED")) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw UsageError("CPT_SEED must be a nonnegative integer");
      }
    }
    return seed;
  }
};

std::vector<double> parse_reals(const std::string& list, const std::string& flag)
{
  std::vector<double> out;
  std::stringstream ss(list);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size())
        throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  return out;
}

TieBreak parse_ties(const std::string& s)
{
  return s == "randomized" ? TieBreak::randomized : TieBreak::conservative;
}

class Output
{
public:
  Output(const std::string& path, std::ostream& fallback) : path_(path), fallback_(fallback) {}

  void write(const std::string& text) const
  {
    if (path_.empty())
      fallback_ << text;
    else
      write_text(path_, text);
  }

private:
  const std::string& path_;
  std::ostream& fallback_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Turns a --config JSON file into flag tokens placed right after the
// subcommand name, so flags given on the command line take precedence.
std::vector<std::string> expand_config(std::vector<std::string> args)
{
  std::optional<std::string> config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size())
        throw UsageError("--config requires a file argument");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + 2));
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    }
  }
  if (!config_path)
    return args;

  std::ifstream in(*config_path);
  if (!in)
    throw UsageError("--config: cannot open '" + *config_path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw UsageError("--config: " + std::string(e.what()));
  }
  if (!cfg.is_object())
    throw UsageError("--config: expected a JSON object");

  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    if (key == "classifier") {
      tokens.push_back("--classifier");
      tokens.push_back(to_string(classifier_from_json(value)));
    } else if (key == "stat" && value.is_object()) {
      const StatSpec s = stat_from_json(value);
      tokens.push_back("--stat");
      tokens.push_back(s.kind == StatKind::in_sample ? "in" : "out");
      if (s.kappa) {
        tokens.push_back("--kappa");
        tokens.push_back(std::to_string(*s.kappa));
      }
      if (s.kind == StatKind::out_of_sample) {
        tokens.push_back("--partitions");
        tokens.push_back(s.exact ? "exact" : std::to_string(s.partitions));
      }
    } else if (value.is_boolean()) {
      if (value.get<bool>())
        tokens.push_back("--" + key);
    } else if (value.is_array()) {
      std::string joined;
      for (const auto& v : value) {
        if (!joined.empty())
          joined += ",";
        joined += v.is_string() ? v.get<std::string>() : v.dump();
      }
      tokens.push_back("--" + key);
      tokens.push_back(joined);
    } else {
      tokens.push_back("--" + key);
      tokens.push_back(value.is_string() ? value.get<std::string>() : value.dump());
    }
  }

  auto sub = std::find_first_of(args.begin(), args.end(), kSubcommands.begin(), kSubcommands.end());
  if (sub == args.end())
    throw UsageError("--config needs a subcommand");
  args.insert(sub + 1, tokens.begin(), tokens.end());
  return args;
}

} // namespace

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err)
{
  try {
    args = expand_config(std::move(args));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  CLI::App app{"Covariate balance testing with the classification permutation test"};
  app.name("cpt");
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);

  std::size_t workers = 0;
  bool quiet = false;
  app.add_option("--workers", workers, "Worker threads (0 = all hardware threads)");
  app.add_flag("--quiet", quiet, "Suppress progress messages on stderr");
  app.add_option("--config", "JSON file with flag values (command-line flags win)");

  std::string out_path;

  // ---- test
  auto* test = app.add_subcommand("test", "Run a permutation balance test on a CSV dataset");
  DataOptions test_data;
  StatOptions test_stat;
  SeedOption test_seed;
  std::string test_method = "cpt";
  std::string test_classifier = "logistic2";
  int test_B = 999;
  std::string test_permute = "across";
  std::string test_ties = "conservative";
  std::string test_format = "json";
  std::string test_null_csv;
  int test_bins = 20;
  bool test_timing = false;
  test_data.add_to(*test, true);
  test->add_option("--method", test_method, "cpt, energy, lrt or lrt2")
      ->check(CLI::IsMember({"cpt", "energy", "lrt", "lrt2"}));
  test->add_option("--classifier", test_classifier,
                   "logistic | logistic2 | logistic2sq | forest[:trees=,mtry=,depth=,min_leaf=] | knn[:k=]");
  test_stat.add_to(*test);
  test->add_option("--B", test_B, "Number of permutations (>= 19)");
  test_seed.add_to(*test);
  test->add_option("--permute", test_permute, "across (full shuffle) or within (inside blocks)")
      ->check(CLI::IsMember({"across", "within"}));
  test->add_option("--ties", test_ties, "conservative or randomized tie-breaking")
      ->check(CLI::IsMember({"conservative", "randomized"}));
  test->add_option("--format", test_format, "json (TestResult) or csv (null histogram)")
      ->check(CLI::IsMember({"json", "csv"}));
  test->add_option("--null-csv", test_null_csv, "Also write the null histogram CSV here");
  test->add_option("--bins", test_bins, "Histogram bins");
  test->add_flag("--timing", test_timing, "Include elapsed seconds in the JSON output");
  test->add_option("--out", out_path, "Output file (default stdout)");

  // ---- exact
  auto* exact = app.add_subcommand("exact", "Exact CPT p-value by enumerating all assignments");
  DataOptions exact_data;
  StatOptions exact_stat;
  std::string exact_classifier = "logistic";
  exact_data.add_to(*exact, true);
  exact->add_option("--classifier", exact_classifier, "Deterministic classifier (not forest)");
  exact_stat.add_to(*exact);
  exact->add_option("--out", out_path, "Output file (default stdout)");

  // ---- simulate
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo power study on correlated normals");
  std::string sim_preset = "desk";
  std::string sim_tests = "cpt-logistic2,cpt-logistic,energy";
  std::string sim_rho;
  int sim_reps = 0;
  int sim_B = 0;
  Eigen::Index sim_nt = 100;
  Eigen::Index sim_nc = 100;
  Eigen::Index sim_p = 3;
  std::string sim_alphas = "0.05,0.01";
  std::string sim_ties = "conservative";
  std::string sim_pvalues_out;
  std::string sim_roc_out;
  double sim_roc_rho = 0.5;
  StatOptions sim_stat;
  SeedOption sim_seed;
  simulate->add_option("--preset", sim_preset, "desk (200 reps, B=199, rho step 0.15) or full (1000 reps, B=500, rho step 0.05)")
      ->check(CLI::IsMember({"desk", "full"}));
  simulate->add_option("--tests", sim_tests, "Comma-separated tests: cpt-<classifier>, exact-<classifier>, energy, lrt, lrt2");
  simulate->add_option("--rho", sim_rho, "Comma-separated rho grid (overrides the preset)");
  simulate->add_option("--replications", sim_reps, "Datasets per rho (0 = preset)");
  simulate->add_option("--B", sim_B, "Permutations per test (0 = preset)");
  simulate->add_option("--n-treated", sim_nt, "Treated units per dataset");
  simulate->add_option("--n-control", sim_nc, "Control units per dataset");
  simulate->add_option("--p", sim_p, "Covariates");
  simulate->add_option("--alphas", sim_alphas, "Comma-separated significance levels");
  simulate->add_option("--ties", sim_ties, "conservative or randomized tie-breaking")
      ->check(CLI::IsMember({"conservative", "randomized"}));
  sim_stat.add_to(*simulate);
  sim_seed.add_to(*simulate);
  simulate->add_option("--pvalues-out", sim_pvalues_out, "Also write every p-value (test,rho,replication,p_value)");
  simulate->add_option("--roc-out", sim_roc_out, "Also write ROC curves (rho = 0 against --roc-rho)");
  simulate->add_option("--roc-rho", sim_roc_rho, "Alternative rho for --roc-out");
  simulate->add_option("--out", out_path, "Power table CSV (default stdout)");

  // ---- type1
  auto* type1 = app.add_subcommand("type1", "Type-I error study on null data");
  DataOptions t1_data;
  StatOptions t1_stat;
  SeedOption t1_seed;
  std::string t1_test = "lrt";
  Eigen::Index t1_n = 300;
  Eigen::Index t1_p = 3;
  Eigen::Index t1_treated = 0;
  int t1_reps = 300;
  std::string t1_alphas = "0.01,0.05,0.1";
  int t1_B = 199;
  std::string t1_permute = "across";
  std::string t1_ties = "conservative";
  std::string t1_hist_out;
  t1_data.add_to(*type1, false);
  type1->add_option("--test", t1_test, "cpt-<classifier>, exact-<classifier>, energy, lrt or lrt2");
  type1->add_option("--n", t1_n, "Units per generated null dataset (without --data)");
  type1->add_option("--p", t1_p, "Covariates per generated null dataset (without --data)");
  type1->add_option("--treated", t1_treated, "Treated units per generated dataset (0 = n/2)");
  type1->add_option("--replications", t1_reps, "Null replications");
  type1->add_option("--alphas", t1_alphas, "Comma-separated significance levels");
  type1->add_option("--B", t1_B, "Permutations for permutation tests");
  type1->add_option("--permute", t1_permute, "How --data treatment is re-randomized: across or within")
      ->check(CLI::IsMember({"across", "within"}));
  type1->add_option("--ties", t1_ties, "conservative or randomized tie-breaking")
      ->check(CLI::IsMember({"conservative", "randomized"}));
  t1_stat.add_to(*type1);
  t1_seed.add_to(*type1);
  type1->add_option("--hist-out", t1_hist_out, "Also write the p-value histogram CSV");
  type1->add_option("--out", out_path, "Rejection-rate CSV (default stdout)");

  // ---- roc
  auto* roc = app.add_subcommand("roc", "ROC points from null and alternative p-value files");
  std::string roc_null;
  std::string roc_alt;
  std::string roc_name = "test";
  double roc_rho = 0.0;
  roc->add_option("--null", roc_null, "p-values under the null")->required();
  roc->add_option("--alt", roc_alt, "p-values under the alternative")->required();
  roc->add_option("--test-name", roc_name, "Value for the test column");
  roc->add_option("--rho", roc_rho, "Value for the rho column");
  roc->add_option("--out", out_path, "ROC CSV (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands())
        out << sub->help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  set_worker_count(workers);
  std::mutex progress_mutex;
  auto progress = [&](const std::string& msg) {
    if (quiet)
      return;
    std::lock_guard lock(progress_mutex);
    err << msg << "\n";
  };
  const Output output(out_path, out);

  try {
    if (test->parsed()) {
      if (test_permute == "within" && test_data.block.empty())
        throw UsageError("--permute within requires --block <column>");
      if (test_B < kMinPermutations)
        throw UsageError("--B must be >= " + std::to_string(kMinPermutations));
      const StatSpec stat = test_stat.spec();
      const ClassifierSpec cspec = parse_classifier(test_classifier);
      PermutationPlan plan;
      plan.B = test_B;
      plan.master_seed = test_seed.value();
      plan.mode = test_permute == "within" ? PermuteMode::within_block : PermuteMode::across;
      plan.tie_break = parse_ties(test_ties);
      const Dataset d = test_data.load();
      progress("loaded " + std::to_string(d.n()) + " rows, " + std::to_string(d.p()) + " covariates");

      if (test_method == "lrt" || test_method == "lrt2") {
        const auto r = lrt_logistic(d, test_method == "lrt" ? DesignKind::main_effects : DesignKind::two_way);
        output.write(dump(to_json(r)));
        return kExitOk;
      }
      TestResult r = test_method == "energy" ? energy_test(d, plan) : run_cpt(d, cspec, stat, plan);
      const auto bins = null_distribution_report(r, test_bins);
      if (!test_null_csv.empty())
        write_text(test_null_csv, histogram_csv(bins, true));
      output.write(test_format == "csv" ? histogram_csv(bins, true) : dump(to_json(r, test_timing)));
      progress("p = " + format_real(r.p_value));
      return kExitOk;
    }

    if (exact->parsed()) {
      const StatSpec stat = exact_stat.spec();
      const ClassifierSpec cspec = parse_classifier(exact_classifier);
      const Dataset d = exact_data.load();
      const ExactResult r = exact_cpt(d, cspec, stat);
      json j = to_json(r);
      j["spec_echo"] = {{"test", "exact-cpt"},
                        {"classifier", to_string(cspec)},
                        {"stat", to_json(stat, d.n_treated(), d.n_control())},
                        {"n", d.n()},
                        {"n_treated", d.n_treated()}};
      output.write(dump(j));
      return kExitOk;
    }

    if (simulate->parsed()) {
      SimulationConfig cfg =
          sim_preset == "full" ? SimulationConfig::full_preset() : SimulationConfig::desk_preset();
      if (!sim_rho.empty())
        cfg.rho_grid = parse_reals(sim_rho, "--rho");
      if (sim_reps > 0)
        cfg.replications = sim_reps;
      if (sim_B > 0)
        cfg.B = sim_B;
      if (cfg.B < kMinPermutations)
        throw UsageError("--B must be >= " + std::to_string(kMinPermutations));
      cfg.n_treated = sim_nt;
      cfg.n_control = sim_nc;
      cfg.p = sim_p;
      cfg.alpha_levels = parse_reals(sim_alphas, "--alphas");
      cfg.tie_break = parse_ties(sim_ties);
      cfg.seed = sim_seed.value();
      cfg.tests = parse_tests(sim_tests, sim_stat.spec());
      if (!sim_roc_out.empty()) {
        auto has = [&](double v) {
          return std::find(cfg.rho_grid.begin(), cfg.rho_grid.end(), v) != cfg.rho_grid.end();
        };
        if (!has(0.0) || !has(sim_roc_rho))
          throw UsageError("--roc-out needs rho = 0 and --roc-rho in the grid");
      }
      const PowerStudy study = run_power_study(cfg, progress);
      output.write(power_table_csv(study.rows));
      if (!sim_pvalues_out.empty())
        write_text(sim_pvalues_out, pvalues_csv(study.p_values));
      if (!sim_roc_out.empty()) {
        std::string csv = "test,rho,fpr,tpr\n";
        for (const auto& t : cfg.tests) {
          const auto text = roc_csv(t.name, sim_roc_rho,
                                    roc_points(study.cell(t.name, 0.0), study.cell(t.name, sim_roc_rho)));
          csv += text.substr(text.find('\n') + 1);
        }
        write_text(sim_roc_out, csv);
      }
      return kExitOk;
    }

    if (type1->parsed()) {
      Type1StudyConfig cfg;
      cfg.test = parse_test(t1_test, t1_stat.spec());
      cfg.replications = t1_reps;
      cfg.alpha_grid = parse_reals(t1_alphas, "--alphas");
      cfg.B = t1_B;
      if (cfg.B < kMinPermutations)
        throw UsageError("--B must be >= " + std::to_string(kMinPermutations));
      cfg.tie_break = parse_ties(t1_ties);
      cfg.seed = t1_seed.value();
      cfg.generator.mode = t1_permute == "within" ? PermuteMode::within_block : PermuteMode::across;
      if (t1_permute == "within" && t1_data.block.empty())
        throw UsageError("--permute within requires --block <column>");
      if (!t1_data.path.empty()) {
        cfg.generator.source = t1_data.load();
      } else {
        cfg.generator.n = t1_n;
        cfg.generator.p = t1_p;
        cfg.generator.treated = t1_treated > 0 ? t1_treated : t1_n / 2;
      }
      const int every = std::max(1, cfg.replications / 10);
      const Type1Study study = run_type1_study(cfg, [&](int done) {
        if (done % every == 0)
          progress(std::to_string(done) + "/" + std::to_string(cfg.replications) + " replications");
      });
      output.write(rejection_csv(study.rows));
      if (!t1_hist_out.empty())
        write_text(t1_hist_out, histogram_csv(pvalue_histogram(study.p_values), false));
      return kExitOk;
    }

    if (roc->parsed()) {
      const auto points = roc_points(read_pvalues(roc_null), read_pvalues(roc_alt));
      output.write(roc_csv(roc_name, roc_rho, points));
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

} // namespace cpt::cli
