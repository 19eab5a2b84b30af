#pragma once

#include "cpt/classifier.hpp"
#include "cpt/dataset.hpp"
#include "cpt/rng.hpp"
#include "cpt/stats.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace cpt {

enum class PermuteMode { across, within_block };
enum class TieBreak { conservative, randomized };

struct PermutationPlan
{
  PermuteMode mode = PermuteMode::across;
  int B = 999;
  std::uint64_t master_seed = 0;
  TieBreak tie_break = TieBreak::conservative;
};

inline constexpr int kMinPermutations = 19;

void validate(const PermutationPlan& plan);

struct TestResult
{
  double observed = 0.0;
  std::vector<double> null_draws;
  double p_value = 1.0;
  nlohmann::json spec_echo;
  double elapsed_seconds = 0.0;
  std::uint64_t seed = 0;
};

/// Statistics closer than this (relative, floor 1) count as ties.
inline constexpr double kTieTolerance = 1e-12;

bool at_least(double draw, double observed);

/// Statistic of a relabelled sample. `seed` feeds any randomness the
/// statistic consumes; the engine derives it per permutation.
using LabelStatistic = std::function<double(const Labels& labels, std::uint64_t seed)>;

/// Uniform random relabelling: a full shuffle (across) or an independent
/// shuffle inside each block (within_block). Treated counts are preserved
/// globally and per block.
Labels shuffle_labels(const Labels& t, const std::optional<Blocks>& blocks, PermuteMode mode,
                      Stream& rng);

/// (1 + #{b : draw_b >= observed}) / (B + 1).
double conservative_p_value(double observed, const std::vector<double>& draws);

/// (1 + #{b : (draw_b, u_b) > (observed, u_0)}) / (B + 1), comparing
/// lexicographically; uniforms[0] belongs to the observed statistic.
double randomized_p_value(double observed, const std::vector<double>& draws,
                          const std::vector<double>& uniforms);

/// Generic Monte Carlo permutation test. Index 0 is the identity; index b
/// uses streams derived from (master_seed, b) for the shuffle, the
/// statistic and the tie-breaking uniform. Output is independent of the
/// worker count.
TestResult permutation_test(const Labels& t, const std::optional<Blocks>& blocks,
                            const PermutationPlan& plan, const LabelStatistic& stat);

/// Classification permutation test: statistic = classifier accuracy,
/// retrained from scratch for every relabelling.
TestResult run_cpt(const Dataset& d, const ClassifierSpec& cspec, const StatSpec& sspec,
                   const PermutationPlan& plan);

struct ExactResult
{
  double p_value = 1.0;
  double observed = 0.0;
  std::size_t assignments = 0;
  std::size_t at_least_observed = 0;
};

inline constexpr double kMaxExactAssignments = 50'000;

/// Enumerates every assignment of l treated labels among n units and
/// returns #{S_assignment >= S_observed} / C(n, l).
ExactResult exact_permutation_test(const Labels& t, const LabelStatistic& stat);

/// Exact CPT; deterministic classifiers only.
ExactResult exact_cpt(const Dataset& d, const ClassifierSpec& cspec, const StatSpec& sspec);

struct HistogramBin
{
  double low = 0.0;
  double high = 0.0;
  std::size_t count = 0;
  bool contains_observed = false;
};

/// Fixed-width bins spanning the null draws and the observed statistic.
/// Collapses to one bin when every value is identical.
std::vector<HistogramBin> null_distribution_report(const TestResult& r, int bins = 20);

} // namespace cpt
