#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gpdyn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Binary matrix (indicator S, observation masks).
using MaskMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// A covariance could not be factorised even after jitter escalation.
class NumericalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix handed in as SPD turned out not to be.
class NotPositiveDefinite : public NumericalDegeneracy {
 public:
  using NumericalDegeneracy::NumericalDegeneracy;
};

/// Input data violates a structural invariant (parse error, bad timestamps).
class InvalidData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Score undefined, e.g. ground truth without any positive (or negative).
class UndefinedScore : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gpdyn
