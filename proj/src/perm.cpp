#include "cpt/perm.hpp"
#include "cpt/io.hpp"
#include "cpt/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace cpt {

namespace {

// Rethrows the active library error with a location prefix, keeping its type.
[[noreturn]] void rethrow_with_context(const std::string& where)
{
  try {
    throw;
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(where + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

} // namespace

void validate(const PermutationPlan& plan)
{
  if (plan.B < kMinPermutations)
    throw InvalidArgument("B = " + std::to_string(plan.B) + " is below the minimum of " +
                          std::to_string(kMinPermutations));
}

bool at_least(double draw, double observed)
{
  return draw >= observed - kTieTolerance * std::max(1.0, std::abs(observed));
}

namespace {

bool tied(double a, double b)
{
  return std::abs(a - b) <= kTieTolerance * std::max(1.0, std::abs(b));
}

} // namespace

Labels shuffle_labels(const Labels& t, const std::optional<Blocks>& blocks, PermuteMode mode,
                      Stream& rng)
{
  Labels out = t;
  if (mode == PermuteMode::across) {
    shuffle(out, rng);
    return out;
  }
  if (!blocks)
    throw InvalidArgument("within-block permutation requires block labels");
  if (static_cast<Eigen::Index>(blocks->codes.size()) != t.size())
    throw InvalidArgument("block labels do not match the treatment vector");
  std::vector<std::vector<Eigen::Index>> members(blocks->count());
  for (std::size_t i = 0; i < blocks->codes.size(); ++i)
    members[static_cast<std::size_t>(blocks->codes[i])].push_back(static_cast<Eigen::Index>(i));
  for (const auto& rows : members) {
    std::vector<int> values;
    values.reserve(rows.size());
    for (auto r : rows)
      values.push_back(t(r));
    shuffle(values, rng);
    for (std::size_t k = 0; k < rows.size(); ++k)
      out(rows[k]) = values[k];
  }
  return out;
}

double conservative_p_value(double observed, const std::vector<double>& draws)
{
  const auto hits = std::count_if(draws.begin(), draws.end(),
                                  [&](double s) { return at_least(s, observed); });
  return static_cast<double>(1 + hits) / static_cast<double>(draws.size() + 1);
}

double randomized_p_value(double observed, const std::vector<double>& draws,
                          const std::vector<double>& uniforms)
{
  if (uniforms.size() != draws.size() + 1)
    throw InvalidArgument("randomized tie-breaking needs one uniform per statistic");
  std::size_t hits = 0;
  for (std::size_t b = 0; b < draws.size(); ++b) {
    const bool above = tied(draws[b], observed) ? uniforms[b + 1] > uniforms[0] : draws[b] > observed;
    hits += above ? 1 : 0;
  }
  return static_cast<double>(1 + hits) / static_cast<double>(draws.size() + 1);
}

TestResult permutation_test(const Labels& t, const std::optional<Blocks>& blocks,
                            const PermutationPlan& plan, const LabelStatistic& stat)
{
  validate(plan);
  if (plan.mode == PermuteMode::within_block && !blocks)
    throw InvalidArgument("within-block permutation requires block labels");
  const auto start = std::chrono::steady_clock::now();

  const auto B = static_cast<std::size_t>(plan.B);
  std::vector<double> values(B + 1);
  parallel_for(B + 1, [&](std::size_t b) {
    try {
      const std::uint64_t stat_seed = derive_seed(plan.master_seed, {tag(StreamTag::classifier), b});
      if (b == 0) {
        values[0] = stat(t, stat_seed);
        return;
      }
      Stream rng(derive_seed(plan.master_seed, {tag(StreamTag::shuffle), b}));
      values[b] = stat(shuffle_labels(t, blocks, plan.mode, rng), stat_seed);
    } catch (const Error&) {
      rethrow_with_context(b == 0 ? "observed statistic" : "permutation " + std::to_string(b));
    }
  });

  TestResult result;
  result.observed = values[0];
  result.null_draws.assign(values.begin() + 1, values.end());
  result.seed = plan.master_seed;
  if (plan.tie_break == TieBreak::conservative) {
    result.p_value = conservative_p_value(result.observed, result.null_draws);
  } else {
    std::vector<double> uniforms(B + 1);
    for (std::size_t b = 0; b <= B; ++b)
      uniforms[b] = Stream(derive_seed(plan.master_seed, {tag(StreamTag::tie_break), b})).uniform();
    result.p_value = randomized_p_value(result.observed, result.null_draws, uniforms);
  }
  result.spec_echo["plan"] = to_json(plan);
  result.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

TestResult run_cpt(const Dataset& d, const ClassifierSpec& cspec, const StatSpec& sspec,
                   const PermutationPlan& plan)
{
  validate(cspec);
  validate(sspec);
  if (sspec.kind == StatKind::out_of_sample)
    resolve_kappa(sspec, d.n_treated(), d.n_control());
  const Matrix features = prepare_features(cspec, d.covariates);
  TestResult r = permutation_test(d.treatment, d.blocks, plan,
                                  [&](const Labels& labels, std::uint64_t seed) {
                                    return statistic(cspec, features, labels, sspec, seed);
                                  });
  r.spec_echo["test"] = "cpt";
  r.spec_echo["classifier"] = to_string(cspec);
  r.spec_echo["stat"] = to_json(sspec, d.n_treated(), d.n_control());
  r.spec_echo["n"] = d.n();
  r.spec_echo["n_treated"] = d.n_treated();
  return r;
}

ExactResult exact_permutation_test(const Labels& t, const LabelStatistic& stat)
{
  const Eigen::Index n = t.size();
  const Eigen::Index l = t.sum();
  const double total = choose(n, l);
  if (total > kMaxExactAssignments)
    throw InvalidArgument("exact test needs C(" + std::to_string(n) + ", " + std::to_string(l) +
                          ") = " + std::to_string(static_cast<long long>(total)) +
                          " assignments (limit 50000)");

  std::vector<Labels> assignments;
  assignments.reserve(static_cast<std::size_t>(total));
  for_each_combination(n, l, [&](const std::vector<Eigen::Index>& treated) {
    Labels a = Labels::Zero(n);
    for (auto i : treated)
      a(i) = 1;
    assignments.push_back(std::move(a));
  });

  ExactResult result;
  try {
    result.observed = stat(t, 0);
  } catch (const Error&) {
    rethrow_with_context("observed statistic");
  }
  std::vector<double> values(assignments.size());
  parallel_for(assignments.size(), [&](std::size_t k) {
    try {
      values[k] = stat(assignments[k], 0);
    } catch (const Error&) {
      rethrow_with_context("assignment " + std::to_string(k));
    }
  });
  result.assignments = assignments.size();
  result.at_least_observed = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double s) { return at_least(s, result.observed); }));
  result.p_value = static_cast<double>(result.at_least_observed) /
                   static_cast<double>(result.assignments);
  return result;
}

ExactResult exact_cpt(const Dataset& d, const ClassifierSpec& cspec, const StatSpec& sspec)
{
  validate(cspec);
  validate(sspec);
  if (cspec.randomized())
    throw InvalidArgument("exact CPT requires a deterministic classifier (not forest)");
  const Matrix features = prepare_features(cspec, d.covariates);
  return exact_permutation_test(d.treatment, [&](const Labels& labels, std::uint64_t seed) {
    return statistic(cspec, features, labels, sspec, seed);
  });
}

std::vector<HistogramBin> null_distribution_report(const TestResult& r, int bins)
{
  if (bins < 1)
    throw InvalidArgument("histogram needs at least one bin");
  double lo = r.observed;
  double hi = r.observed;
  for (double s : r.null_draws) {
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  if (!(hi > lo)) {
    return {HistogramBin{lo, hi, r.null_draws.size(), true}};
  }
  const double width = (hi - lo) / bins;
  std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
  for (int k = 0; k < bins; ++k) {
    out[static_cast<std::size_t>(k)].low = lo + k * width;
    out[static_cast<std::size_t>(k)].high = k + 1 == bins ? hi : lo + (k + 1) * width;
  }
  auto bin_of = [&](double s) {
    const auto k = static_cast<int>(std::floor((s - lo) / width));
    return static_cast<std::size_t>(std::clamp(k, 0, bins - 1));
  };
  for (double s : r.null_draws)
    ++out[bin_of(s)].count;
  out[bin_of(r.observed)].contains_observed = true;
  return out;
}

} // namespace cpt
