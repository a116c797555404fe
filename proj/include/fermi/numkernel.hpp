#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "fermi/types.hpp"

namespace fermi::numkernel {

inline constexpr double kSkewTol = 1e-12;
inline constexpr double kHermTol = 1e-12;
inline constexpr double kPivotTol = 1e-13;

template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& A) {
  return A.size() == 0 ? 0.0 : static_cast<double>(A.cwiseAbs().maxCoeff());
}

template <typename Derived>
bool is_skew(const Eigen::MatrixBase<Derived>& M, double rel = kSkewTol) {
  if (M.rows() != M.cols()) return false;
  return max_abs(M + M.transpose()) <= rel * max_abs(M);
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& A, double rel = kHermTol) {
  if (A.rows() != A.cols()) return false;
  return max_abs(A - A.adjoint()) <= rel * max_abs(A);
}

// Parlett-Reid reduction to tridiagonal form with partial pivoting (LTL^T).
template <typename Derived>
typename Derived::Scalar pfaffian(const Eigen::MatrixBase<Derived>& M) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(M.rows() == M.cols(), Errc::ShapeMismatch, "pfaffian needs a square matrix");
  const Eigen::Index n = M.rows();
  require(n % 2 == 0, Errc::OddOrder, "pfaffian of odd order " + std::to_string(n));
  require(is_skew(M), Errc::NotSkewSymmetric, "pfaffian input is not skew-symmetric");
  if (n == 0) return Scalar(1);

  Dense A = M;
  Scalar pf(1);
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index kp;
    A.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      A.row(k + 1).swap(A.row(kp));
      A.col(k + 1).swap(A.col(kp));
      pf = -pf;
    }
    if (A(k + 1, k) == Scalar(0)) return Scalar(0);
    pf *= A(k, k + 1);
    if (k + 2 < n) {
      const Eigen::Index r = n - k - 2;
      Dense tau = A.row(k).tail(r) / A(k, k + 1);
      Dense v = A.col(k + 1).tail(r);
      A.bottomRightCorner(r, r) += tau.transpose() * v.transpose() - v * tau;
    }
  }
  return pf;
}

template <typename Scalar>
struct HermitianEig {
  Eigen::Matrix<typename Eigen::NumTraits<Scalar>::Real, Eigen::Dynamic, 1> values;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;
};

template <typename Derived>
HermitianEig<typename Derived::Scalar> hermitian_eig(const Eigen::MatrixBase<Derived>& A) {
  using Scalar = typename Derived::Scalar;
  using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(A.rows() == A.cols(), Errc::ShapeMismatch, "hermitian_eig needs a square matrix");
  require(is_hermitian(A), Errc::NotHermitian, "hermitian_eig input is not Hermitian");
  Dense S = (A + A.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Dense> es(S);
  // SelfAdjointEigenSolver already sorts ascending; keep a stable sort as a guard
  const Eigen::Index n = S.rows();
  std::vector<Eigen::Index> idx(n);
  for (Eigen::Index i = 0; i < n; ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
    return es.eigenvalues()(a) < es.eigenvalues()(b);
  });
  HermitianEig<Scalar> out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = es.eigenvalues()(idx[i]);
    out.vectors.col(i) = es.eigenvectors().col(idx[i]);
  }
  return out;
}

// f applied through the spectral theorem
template <typename Derived, typename F>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> hermitian_apply(
    const Eigen::MatrixBase<Derived>& A, F&& f) {
  auto eig = hermitian_eig(A);
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d(eig.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = Scalar(f(eig.values(i)));
  return eig.vectors * d.asDiagonal() * eig.vectors.adjoint();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_exp(
    const Eigen::MatrixBase<Derived>& A) {
  require(A.rows() == A.cols(), Errc::ShapeMismatch, "matrix_exp needs a square matrix");
  using Dense = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (A.rows() == 0) return Dense();
  Dense X = A;
  return X.exp();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_inverse(
    const Eigen::MatrixBase<Derived>& A) {
  using Dense = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(A.rows() == A.cols(), Errc::ShapeMismatch, "matrix_inverse needs a square matrix");
  const Eigen::Index n = A.rows();
  if (n == 0) return Dense();
  Eigen::PartialPivLU<Dense> lu(A);
  const double floor = kPivotTol * max_abs(A);
  for (Eigen::Index i = 0; i < n; ++i)
    require(std::abs(lu.matrixLU()(i, i)) > floor, Errc::Singular,
            "pivot " + std::to_string(i) + " below threshold");
  return lu.inverse();
}

template <typename Derived>
typename Derived::Scalar determinant(const Eigen::MatrixBase<Derived>& A) {
  using Dense = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  require(A.rows() == A.cols(), Errc::ShapeMismatch, "determinant needs a square matrix");
  if (A.rows() == 0) return typename Derived::Scalar(1);
  return Eigen::PartialPivLU<Dense>(A).determinant();
}

// Operator (spectral) norm.
template <typename Derived>
double op_norm(const Eigen::MatrixBase<Derived>& A) {
  if (A.size() == 0) return 0.0;
  using Dense = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::JacobiSVD<Dense> svd(A);
  return static_cast<double>(svd.singularValues()(0));
}

}  // namespace fermi::numkernel
