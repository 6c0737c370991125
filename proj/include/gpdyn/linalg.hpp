#pragma once

#include <gpdyn/types.hpp>

#include <cmath>
#include <numbers>

namespace gpdyn {

template <typename Scalar>
struct JitteredCholesky {
  Eigen::LLT<Matrix<Scalar>> llt;
  Scalar jitter{0};
};

/// Cholesky of A + jitter*I. Starts at `base_jitter` and multiplies by ten
/// on failure until `max_jitter` is exceeded.
template <typename Scalar, typename Derived>
JitteredCholesky<Scalar> cholesky_with_jitter(const Eigen::MatrixBase<Derived>& A,
                                              Scalar base_jitter, Scalar max_jitter) {
  using std::isfinite;
  JitteredCholesky<Scalar> out;
  Scalar jitter = base_jitter;
  for (;;) {
    Matrix<Scalar> work = A;
    if (jitter > Scalar(0)) work.diagonal().array() += jitter;
    out.llt.compute(work);
    if (out.llt.info() == Eigen::Success &&
        out.llt.matrixLLT().diagonal().array().isFinite().all() &&
        (out.llt.matrixLLT().diagonal().array() > Scalar(0)).all()) {
      out.jitter = jitter;
      return out;
    }
    if (!(jitter < max_jitter)) {
      throw NumericalDegeneracy("Cholesky failed after jitter escalation to " +
                                std::to_string(static_cast<double>(jitter)));
    }
    jitter = jitter > Scalar(0) ? std::min(jitter * Scalar(10), max_jitter)
                                : max_jitter * Scalar(1e-2);
  }
}

template <typename Scalar>
Scalar log_det(const Eigen::LLT<Matrix<Scalar>>& llt) {
  using std::log;
  return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

/// log of the integral over R^N of exp(-<x,Ax> - <b,x> - c) for SPD A:
///   (N/2) log(pi) - 1/2 log|A| - c + 1/4 <b, A^{-1} b>.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar gaussian_quadratic_log_integral(const Eigen::MatrixBase<DerivedA>& A,
                                       const Eigen::MatrixBase<DerivedB>& b, Scalar c) {
  using std::log;
  const Index n = A.rows();
  if (A.cols() != n || b.size() != n) {
    throw std::invalid_argument("gaussian_quadratic_log_integral: dimension mismatch");
  }
  Eigen::LLT<Matrix<Scalar>> llt(A);
  if (llt.info() != Eigen::Success ||
      !(llt.matrixLLT().diagonal().array() > Scalar(0)).all()) {
    throw NotPositiveDefinite("gaussian_quadratic_log_integral: A is not positive definite");
  }
  const Vector<Scalar> half = llt.matrixL().solve(Vector<Scalar>(b));
  return Scalar(0.5) * Scalar(n) * log(std::numbers::pi_v<Scalar>) -
         Scalar(0.5) * log_det(llt) - c + Scalar(0.25) * half.squaredNorm();
}

}  // namespace gpdyn
