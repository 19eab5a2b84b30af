#pragma once

#include "cpt/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cpt {

/// Block membership: codes[i] indexes into names.
struct Blocks
{
  std::vector<int> codes;
  std::vector<std::string> names;

  std::size_t count() const { return names.size(); }
};

/// Covariates, treatment and optional blocks for n units. Immutable once
/// validated; share freely across threads.
struct Dataset
{
  Matrix covariates;
  Labels treatment;
  std::optional<Blocks> blocks;
  std::vector<std::string> column_names;

  Eigen::Index n() const { return covariates.rows(); }
  Eigen::Index p() const { return covariates.cols(); }
  Eigen::Index n_treated() const { return treatment.sum(); }
  Eigen::Index n_control() const { return n() - n_treated(); }
};

/// Throws DataError unless n >= 2, p >= 1, both groups are present, all
/// covariates are finite and every block has at least two units.
void validate(const Dataset& d);

/// Builds and validates a dataset; column names default to x1..xp.
Dataset make_dataset(Matrix covariates, Labels treatment,
                     std::optional<Blocks> blocks = std::nullopt,
                     std::vector<std::string> column_names = {});

/// Groups block labels into codes, numbered by first appearance.
Blocks make_blocks(const std::vector<std::string>& labels);

struct CsvOptions
{
  std::string treatment_column = "treatment";
  std::optional<std::string> block_column;
  /// Categorical columns expanded into k-1 indicators (first level dropped).
  std::vector<std::string> one_hot;
  /// z-score every covariate column over the full sample.
  bool standardize = false;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset parse_csv(const std::string& text, const CsvOptions& options = {});

/// Writes covariates, then treatment, then the block column if present.
/// Values use the shortest round-trip decimal form.
std::string to_csv(const Dataset& d, const std::string& treatment_column = "treatment",
                   const std::string& block_column = "block");
void write_csv(const Dataset& d, const std::filesystem::path& path,
               const std::string& treatment_column = "treatment",
               const std::string& block_column = "block");

/// Column-wise z-scores using the population standard deviation; constant
/// columns are centred only.
Matrix standardize(const Matrix& x);

} // namespace cpt
