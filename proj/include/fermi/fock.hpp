#pragma once

#include <limits>
#include <vector>

#include <Eigen/Sparse>

#include "fermi/selfdual.hpp"

namespace fermi {

using SpMat = Eigen::SparseMatrix<cplx>;

inline constexpr int kMaxFockModes = 10;

// Jordan-Wigner: a_j = Z x ... x Z x s- x 1 x ... x 1, s- = [[0,1],[0,0]],
// mode 0 is the most significant tensor factor; modes follow the range basis of P.
class FockRep {
public:
  explicit FockRep(BasisProjection P);

  int modes() const { return m_; }
  Eigen::Index fock_dim() const { return Eigen::Index(1) << m_; }
  const BasisProjection& projection() const { return P_; }
  const SpMat& a(int i) const { return a_[i]; }
  SpMat adag(int i) const { return SpMat(a_[i].adjoint()); }
  // B(f_j) for the frame vector f_j: a_j for j < m, a*_{j-m} otherwise
  SpMat field(int j) const { return j < m_ ? a_[j] : adag(j - m_); }
  // B(phi) = a(P phi) + a*(A P^perp phi), antilinear in phi
  Mat generator(const Vec& phi) const;
  const RVec& parity_diagonal() const { return parity_; }
  Mat parity() const { return parity_.cast<cplx>().asDiagonal(); }
  Mat identity() const { return Mat::Identity(fock_dim(), fock_dim()); }

private:
  BasisProjection P_;
  int m_;
  std::vector<SpMat> a_;
  RVec parity_;
};

// <B, H B> = sum_ij <f_i, H f_j> B(f_j) B(f_i)^*
Mat bilinear_element(const FockRep& rep, const Mat& H);

cplx tracial_state(const FockRep& rep, const Mat& A);

// exp(beta/2 <B,HB>) / tr(...) as a density matrix (trace-one)
Mat gibbs_density(const FockRep& rep, const SelfDualOperator& H, double beta);
cplx gibbs_expectation(const FockRep& rep, const SelfDualOperator& H, double beta, const Mat& A);

// Fock (vacuum) state of the defining projection, as a density matrix
Mat fock_state_density(const FockRep& rep);

// S with <phi1, S phi2> = rho(B(phi1) B(A phi2)), rho(X) = Tr(density X)
Mat quasifree_symbol(const FockRep& rep, const Mat& density);

inline constexpr double kEvenTol = 1e-12;
bool is_even(const FockRep& rep, const Mat& A);

inline constexpr double kSchattenInf = std::numeric_limits<double>::infinity();
double schatten_norm(const FockRep& rep, const Mat& A, double s);

// ln[ tr(e^{beta(<B,HB>/2 - W)} e^{sK}) / tr(e^{beta <B,HB>/2}) ]
double generating_function_exact(const FockRep& rep, const SelfDualOperator& H, const Mat& W,
                                 const Mat& K, double beta, double s);

// the ratio inside the logarithm above, complex as computed
cplx trace_ratio_exact(const FockRep& rep, const SelfDualOperator& H, const Mat& W, const Mat& K,
                       double beta, double s);

// checks W even and self-adjoint, throws ParityViolation / NotSelfAdjoint
void require_even_selfadjoint(const FockRep& rep, const Mat& W, const char* name);

Mat hermitian_exp(const Mat& A);

}  // namespace fermi
