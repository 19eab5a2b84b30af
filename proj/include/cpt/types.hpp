#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace cpt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
/// Binary treatment labels, 1 = treated, 0 = control.
using Labels = Eigen::VectorXi;

/// Base for all errors raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied argument or configuration is invalid.
class InvalidArgument : public Error
{
public:
  using Error::Error;
};

/// Input data could not be read or violates a dataset invariant.
class DataError : public Error
{
public:
  using Error::Error;
};

/// A numerical procedure failed (divergence, non-finite values).
class NumericalError : public Error
{
public:
  using Error::Error;
};

inline Eigen::Index count_treated(const Labels& t) { return t.sum(); }

} // namespace cpt
