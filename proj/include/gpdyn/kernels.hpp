#pragma once

#include <gpdyn/linalg.hpp>
#include <gpdyn/types.hpp>

#include <algorithm>
#include <cmath>

namespace gpdyn {

/// Hyperparameters of one drift component f_i: squared-exponential ARD
/// covariance plus the linear mean m_i(x) = b_i - a_i x_i.
///
/// `beta` holds the effective inverse squared length scales, i.e. the
/// elementwise product of the indicator row S_i and magnitude row H_i.
template <typename Scalar>
struct KernelHyperparams {
  Scalar gamma{1};
  Vector<Scalar> beta;
  Scalar a{0};
  Scalar b{0};

  Index dim() const { return beta.size(); }
};

/// Locations summarising the GP through pseudo-data. `jitter` is relative:
/// jitter * gamma_i is added to the diagonal of K_i(P).
template <typename Scalar>
struct PseudoInputSet {
  Matrix<Scalar> points;  // p x d, one location per row
  Scalar jitter{1e-6};

  Index size() const { return points.rows(); }
};

namespace detail {

template <typename Derived>
void check_dim(const Eigen::MatrixBase<Derived>& v, Index d, const char* what) {
  if (v.size() != d) {
    throw std::invalid_argument(std::string(what) + ": expected dimension " +
                                std::to_string(d) + ", got " +
                                std::to_string(v.size()));
  }
}

}  // namespace detail

template <typename Scalar, typename DerivedX, typename DerivedZ>
Scalar se_kernel_eval(const KernelHyperparams<Scalar>& params,
                      const Eigen::MatrixBase<DerivedX>& x,
                      const Eigen::MatrixBase<DerivedZ>& z) {
  using std::exp;
  const Index d = params.dim();
  detail::check_dim(x, d, "se_kernel_eval(x)");
  detail::check_dim(z, d, "se_kernel_eval(z)");
  Scalar r2{0};
  for (Index j = 0; j < d; ++j) {
    if (params.beta(j) == Scalar(0)) continue;
    const Scalar diff = x(j) - z(j);
    r2 += params.beta(j) * diff * diff;
  }
  return params.gamma * exp(-r2);
}

template <typename Scalar, typename Derived>
Scalar mean_function(const KernelHyperparams<Scalar>& params,
                     const Eigen::MatrixBase<Derived>& x, Index i) {
  if (i < 0 || i >= x.size()) {
    throw std::invalid_argument("mean_function: gene index out of range");
  }
  return params.b - params.a * x(i);
}

/// K(A, B) with rows of A and B as state points. Coordinates whose beta is
/// zero are skipped entirely, so switched-off regulators cannot leak in.
template <typename Scalar, typename DerivedA, typename DerivedB>
Matrix<Scalar> gram_matrix(const KernelHyperparams<Scalar>& params,
                           const Eigen::MatrixBase<DerivedA>& A,
                           const Eigen::MatrixBase<DerivedB>& B) {
  const Index d = params.dim();
  if (A.cols() != d || B.cols() != d) {
    throw std::invalid_argument("gram_matrix: column count must equal kernel dimension");
  }
  Matrix<Scalar> r2 = Matrix<Scalar>::Zero(A.rows(), B.rows());
  for (Index j = 0; j < d; ++j) {
    const Scalar beta = params.beta(j);
    if (beta == Scalar(0)) continue;
    for (Index k = 0; k < B.rows(); ++k) {
      const Scalar zk = B(k, j);
      r2.col(k).array() += beta * (A.col(j).array() - zk).square();
    }
  }
  return params.gamma * (-r2.array()).exp().matrix();
}

/// gamma * max_j beta_j; |k(x,x) - k(x,z)| <= L |x - z|^2.
template <typename Scalar>
Scalar lipschitz_bound(const KernelHyperparams<Scalar>& params) {
  if (params.dim() == 0) return Scalar(0);
  return params.gamma * std::max(Scalar(0), params.beta.maxCoeff());
}

template <typename Scalar>
struct PseudoGramFactors {
  Matrix<Scalar> K_XP;              // M x p
  Matrix<Scalar> K_P;               // p x p, jitter included
  Eigen::LLT<Matrix<Scalar>> K_P_llt;
  Scalar jitter_used{0};
};

/// Cross and pseudo-input Gram matrices for the low-rank approximation
/// K(X) ~ K_XP K_P^{-1} K_XP^T. The M x M product is never formed.
template <typename Scalar, typename Derived>
PseudoGramFactors<Scalar> pseudo_gram_factors(const KernelHyperparams<Scalar>& params,
                                              const Eigen::MatrixBase<Derived>& states,
                                              const PseudoInputSet<Scalar>& pseudo) {
  if (pseudo.size() < 1) {
    throw std::invalid_argument("pseudo_gram_factors: need at least one pseudo-input");
  }
  PseudoGramFactors<Scalar> out;
  out.K_XP = gram_matrix(params, states, pseudo.points);
  const Matrix<Scalar> kp = gram_matrix(params, pseudo.points, pseudo.points);
  const Scalar base = pseudo.jitter * params.gamma;
  auto fact = cholesky_with_jitter(kp, base, Scalar(1e-4) * params.gamma);
  out.K_P = kp;
  out.K_P.diagonal().array() += fact.jitter;
  out.K_P_llt = std::move(fact.llt);
  out.jitter_used = fact.jitter;
  return out;
}

}  // namespace gpdyn
