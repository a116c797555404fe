#pragma once

// Independent reference computations used by the unit and acceptance tests. Nothing here
// calls into the library beyond the basic matrix typedefs.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fermi/types.hpp"

namespace oracle {

using fermi::cplx;
using fermi::Mat;

inline double factorial(int n) {
  double f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline int permutation_sign(const std::vector<int>& p) {
  int inv = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (p[i] > p[j]) ++inv;
  return inv % 2 ? -1 : 1;
}

// Pf(M) = 1 / (2^n n!) sum_{pi in S_2n} sgn(pi) prod_k M_{pi(2k-1) pi(2k)}
inline cplx pfaffian_permutation_sum(const Mat& M) {
  const int N = static_cast<int>(M.rows());
  if (N == 0) return 1.0;
  if (N % 2) return 0.0;
  std::vector<int> p(N);
  std::iota(p.begin(), p.end(), 0);
  cplx acc = 0;
  do {
    cplx t = double(permutation_sign(p));
    for (int k = 0; k < N; k += 2) t *= M(p[k], p[k + 1]);
    acc += t;
  } while (std::next_permutation(p.begin(), p.end()));
  return acc / (std::ldexp(1.0, N / 2) * factorial(N / 2));
}

// sum over perfect matchings, expanding along the first row
inline cplx pfaffian_matchings(const Mat& M) {
  const Eigen::Index N = M.rows();
  if (N == 0) return 1.0;
  if (N % 2) return 0.0;
  cplx acc = 0;
  for (Eigen::Index j = 1; j < N; ++j) {
    if (M(0, j) == cplx(0)) continue;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 1; i < N; ++i)
      if (i != j) keep.push_back(i);
    Mat sub(N - 2, N - 2);
    for (Eigen::Index a = 0; a < N - 2; ++a)
      for (Eigen::Index b = 0; b < N - 2; ++b) sub(a, b) = M(keep[a], keep[b]);
    acc += ((j % 2) ? 1.0 : -1.0) * M(0, j) * pfaffian_matchings(sub);
  }
  return acc;
}

// Jordan-Wigner annihilators built from Kronecker products, mode 0 leftmost.
inline std::vector<Mat> jordan_wigner(int m) {
  Mat Z = Mat::Zero(2, 2), S = Mat::Zero(2, 2), I = Mat::Identity(2, 2);
  Z(0, 0) = 1;
  Z(1, 1) = -1;
  S(0, 1) = 1;
  std::vector<Mat> out;
  for (int j = 0; j < m; ++j) {
    Mat acc = Mat::Identity(1, 1);
    for (int k = 0; k < m; ++k) {
      const Mat& f = k < j ? Z : (k == j ? S : I);
      Mat next(acc.rows() * 2, acc.cols() * 2);
      for (Eigen::Index r = 0; r < acc.rows(); ++r)
        for (Eigen::Index c = 0; c < acc.cols(); ++c) next.block(2 * r, 2 * c, 2, 2) = acc(r, c) * f;
      acc = next;
    }
    out.push_back(acc);
  }
  return out;
}

// normalized trace on the Fock space
inline cplx fock_trace(const Mat& A) { return A.trace() / static_cast<double>(A.rows()); }

// exp of a Hermitian matrix via its eigendecomposition
inline Mat hermitian_exp(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (A + A.adjoint())));
  const Eigen::VectorXd e = es.eigenvalues().array().exp();
  return es.eigenvectors() * e.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

// eigenvalues of the n-site path graph adjacency: 2 cos(k pi / (n + 1))
inline std::vector<double> path_graph_spectrum(int n) {
  std::vector<double> v;
  for (int k = 1; k <= n; ++k) v.push_back(2 * std::cos(k * M_PI / (n + 1)));
  std::sort(v.begin(), v.end());
  return v;
}

// ln tr(e^{-beta dGamma(h) + s N}) - ln tr(e^{-beta dGamma(h)}) from the one-particle spectrum
inline double free_log_ratio(const Eigen::VectorXd& eps, double beta, double s) {
  double acc = 0;
  for (Eigen::Index i = 0; i < eps.size(); ++i)
    acc += std::log1p(std::exp(-beta * eps(i) + s)) - std::log1p(std::exp(-beta * eps(i)));
  return acc;
}

}  // namespace oracle
