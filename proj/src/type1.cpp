#include "cpt/baselines.hpp"
#include "cpt/parallel.hpp"
#include "cpt/rng.hpp"

#include <atomic>
#include <cmath>

namespace cpt {

std::uint64_t stable_hash(std::string_view text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TestSpec parse_test(std::string_view text, const StatSpec& stat)
{
  TestSpec t;
  t.name = std::string(text);
  t.stat = stat;
  auto starts_with = [&](std::string_view prefix) { return text.substr(0, prefix.size()) == prefix; };
  if (text == "energy") {
    t.kind = TestSpec::Kind::energy;
  } else if (text == "lrt" || text == "lrt-main") {
    t.kind = TestSpec::Kind::lrt;
    t.design = DesignKind::main_effects;
  } else if (text == "lrt2" || text == "lrt-two-way") {
    t.kind = TestSpec::Kind::lrt;
    t.design = DesignKind::two_way;
  } else if (starts_with("cpt-")) {
    t.kind = TestSpec::Kind::cpt;
    t.classifier = parse_classifier(text.substr(4));
  } else if (starts_with("exact-")) {
    t.kind = TestSpec::Kind::exact_cpt;
    t.classifier = parse_classifier(text.substr(6));
    if (t.classifier.randomized())
      throw InvalidArgument("test '" + t.name + "': exact tests need a deterministic classifier");
  } else {
    throw InvalidArgument("unknown test '" + t.name +
                          "' (expected cpt-<classifier>, exact-<classifier>, energy, lrt, lrt2)");
  }
  return t;
}

std::vector<TestSpec> parse_tests(std::string_view list, const StatSpec& stat)
{
  // Classifier options also use commas, so split only before a known test prefix.
  std::vector<TestSpec> out;
  auto is_start = [&](std::size_t pos) {
    const auto rest = list.substr(pos);
    for (std::string_view p : {"cpt-", "exact-", "energy", "lrt"})
      if (rest.substr(0, p.size()) == p)
        return true;
    return false;
  };
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= list.size(); ++i) {
    if (i == list.size() || (list[i] == ',' && is_start(i + 1))) {
      if (i > begin)
        out.push_back(parse_test(list.substr(begin, i - begin), stat));
      begin = i + 1;
    }
  }
  if (out.empty())
    throw InvalidArgument("no tests given");
  return out;
}

double run_test(const TestSpec& test, const Dataset& d, const PermutationPlan& plan)
{
  switch (test.kind) {
  case TestSpec::Kind::cpt:
    return run_cpt(d, test.classifier, test.stat, plan).p_value;
  case TestSpec::Kind::exact_cpt:
    return exact_cpt(d, test.classifier, test.stat).p_value;
  case TestSpec::Kind::energy:
    return energy_test(d, plan).p_value;
  case TestSpec::Kind::lrt:
    return lrt_logistic(d, test.design).p_value;
  }
  return 1.0;
}

Dataset generate_null(const NullGenerator& gen, std::uint64_t seed)
{
  Stream rng(seed);
  if (gen.source) {
    Dataset d = *gen.source;
    d.treatment = shuffle_labels(d.treatment, d.blocks, gen.mode, rng);
    return d;
  }
  if (gen.treated < 1 || gen.treated >= gen.n)
    throw InvalidArgument("null generator: need 1 <= treated < n");
  Matrix x(gen.n, gen.p);
  for (Eigen::Index i = 0; i < gen.n; ++i)
    for (Eigen::Index j = 0; j < gen.p; ++j)
      x(i, j) = rng.normal();
  Labels t = Labels::Zero(gen.n);
  t.head(gen.treated).setOnes();
  shuffle(t, rng);
  return make_dataset(std::move(x), std::move(t));
}

std::vector<RejectionRow> rejection_rates(const std::vector<double>& p_values,
                                          const std::vector<double>& alphas)
{
  std::vector<RejectionRow> rows;
  const auto reps = static_cast<int>(p_values.size());
  for (double alpha : alphas) {
    int rejected = 0;
    for (double p : p_values)
      rejected += p <= alpha ? 1 : 0;
    const double rate = reps ? static_cast<double>(rejected) / reps : 0.0;
    rows.push_back({alpha, rate, reps ? std::sqrt(rate * (1.0 - rate) / reps) : 0.0, reps});
  }
  return rows;
}

std::vector<HistogramBin> pvalue_histogram(const std::vector<double>& p_values, int bins)
{
  if (bins < 1)
    throw InvalidArgument("histogram needs at least one bin");
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    out[static_cast<std::size_t>(k)].low = static_cast<double>(k) / bins;
    out[static_cast<std::size_t>(k)].high = static_cast<double>(k + 1) / bins;
  }
  for (double p : p_values) {
    const auto k = std::min(bins - 1, static_cast<int>(std::floor(p * bins)));
    ++out[static_cast<std::size_t>(std::max(0, k))].count;
  }
  return out;
}

Type1Study run_type1_study(const Type1StudyConfig& cfg, const std::function<void(int)>& progress)
{
  if (cfg.replications < 1)
    throw InvalidArgument("replications must be >= 1");
  for (double a : cfg.alpha_grid)
    if (!(a > 0.0 && a < 1.0))
      throw InvalidArgument("alpha levels must lie in (0, 1)");

  Type1Study study;
  study.p_values.resize(static_cast<std::size_t>(cfg.replications));
  std::atomic<int> done{0};
  parallel_for(study.p_values.size(), [&](std::size_t r) {
    try {
      const Dataset d = generate_null(cfg.generator, derive_seed(cfg.seed, {tag(StreamTag::data), r}));
      PermutationPlan plan;
      plan.B = cfg.B;
      plan.tie_break = cfg.tie_break;
      plan.mode = cfg.generator.mode;
      plan.master_seed = derive_seed(cfg.seed, {tag(StreamTag::test), r, stable_hash(cfg.test.name)});
      study.p_values[r] = run_test(cfg.test, d, plan);
    } catch (const Error& e) {
      throw Error("replication " + std::to_string(r) + ": " + e.what());
    }
    if (progress)
      progress(++done);
  });
  study.rows = rejection_rates(study.p_values, cfg.alpha_grid);
  return study;
}

} // namespace cpt
