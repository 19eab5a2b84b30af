#pragma once

#include "cpt/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace cpt {

enum class DesignKind {
  main_effects,
  /// Main effects plus every product x_j * x_k with j < k.
  two_way,
  /// two_way plus the squares x_j^2.
  two_way_squares,
};

std::string_view to_string(DesignKind kind);

/// Number of expanded columns for p covariates (no intercept column; the
/// logistic model adds its own).
constexpr Eigen::Index design_width(Eigen::Index p, DesignKind kind)
{
  switch (kind) {
  case DesignKind::main_effects:
    return p;
  case DesignKind::two_way:
    return p + p * (p - 1) / 2;
  case DesignKind::two_way_squares:
    return p + p * (p - 1) / 2 + p;
  }
  return p;
}

/// Expands covariates into a design matrix. Column order: the original
/// columns, then pair products in lexicographic (j, k) order, then squares.
template <class Derived>
Matrix expand_design(const Eigen::MatrixBase<Derived>& x, DesignKind kind)
{
  const Eigen::Index p = x.cols();
  Matrix out(x.rows(), design_width(p, kind));
  out.leftCols(p) = x;
  if (kind == DesignKind::main_effects)
    return out;
  Eigen::Index c = p;
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = j + 1; k < p; ++k)
      out.col(c++) = x.col(j).cwiseProduct(x.col(k));
  if (kind == DesignKind::two_way_squares)
    for (Eigen::Index j = 0; j < p; ++j)
      out.col(c++) = x.col(j).cwiseAbs2();
  return out;
}

std::vector<std::string> design_feature_names(const std::vector<std::string>& names,
                                              DesignKind kind);

} // namespace cpt

#include "cpt/dataset.hpp"

namespace cpt {

struct DesignMatrix
{
  Matrix values;
  std::vector<std::string> feature_names;
  DesignKind kind = DesignKind::main_effects;
};

DesignMatrix expand_design(const Dataset& d, DesignKind kind);

} // namespace cpt
