#include "fermi/fock.hpp"

#include <cmath>

#include "fermi/numkernel.hpp"

namespace fermi {

using numkernel::max_abs;

FockRep::FockRep(BasisProjection P) : P_(std::move(P)), m_(P_.half()) {
  require(m_ <= kMaxFockModes, Errc::CapacityExceeded,
          "Fock representation limited to " + std::to_string(kMaxFockModes) + " modes, got " +
              std::to_string(m_));
  const Eigen::Index N = fock_dim();
  parity_.resize(N);
  for (Eigen::Index s = 0; s < N; ++s)
    parity_(s) = (__builtin_popcountll(static_cast<unsigned long long>(s)) % 2) ? -1.0 : 1.0;
  a_.reserve(m_);
  for (int j = 0; j < m_; ++j) {
    std::vector<Eigen::Triplet<cplx>> trip;
    const Eigen::Index bit = Eigen::Index(1) << (m_ - 1 - j);
    const Eigen::Index higher = ~((bit << 1) - 1);  // bits of modes k < j
    for (Eigen::Index s = 0; s < N; ++s) {
      if (!(s & bit)) continue;
      const int before = __builtin_popcountll(static_cast<unsigned long long>(s & higher));
      trip.emplace_back(s ^ bit, s, (before % 2) ? -1.0 : 1.0);
    }
    SpMat aj(N, N);
    aj.setFromTriplets(trip.begin(), trip.end());
    a_.push_back(std::move(aj));
  }
}

Mat FockRep::generator(const Vec& phi) const {
  const Mat F = P_.frame();
  const Vec c = F.adjoint() * phi;
  Mat B = Mat::Zero(fock_dim(), fock_dim());
  for (int i = 0; i < m_; ++i) {
    if (c(i) != cplx(0)) B += std::conj(c(i)) * Mat(a_[i]);
    if (c(m_ + i) != cplx(0)) B += std::conj(c(m_ + i)) * Mat(a_[i].adjoint());
  }
  return B;
}

Mat bilinear_element(const FockRep& rep, const Mat& H) {
  const int n = 2 * rep.modes();
  require(H.rows() == n && H.cols() == n, Errc::ShapeMismatch, "bilinear_element: H shape");
  const Mat F = rep.projection().frame();
  const Mat Hf = F.adjoint() * H * F;
  std::vector<SpMat> b(n), bd(n);
  for (int j = 0; j < n; ++j) {
    b[j] = rep.field(j);
    bd[j] = SpMat(b[j].adjoint());
  }
  SpMat acc(rep.fock_dim(), rep.fock_dim());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (Hf(i, j) != cplx(0)) acc += SpMat(Hf(i, j) * (b[j] * bd[i]));
  return Mat(acc);
}

cplx tracial_state(const FockRep& rep, const Mat& A) {
  require(A.rows() == rep.fock_dim() && A.cols() == rep.fock_dim(), Errc::ShapeMismatch,
          "tracial_state: operator shape");
  return A.trace() / static_cast<double>(rep.fock_dim());
}

Mat hermitian_exp(const Mat& A) {
  const Mat S = 0.5 * (A + A.adjoint());
  return numkernel::hermitian_apply(S, [](double x) { return std::exp(x); });
}

Mat gibbs_density(const FockRep& rep, const SelfDualOperator& H, double beta) {
  require(H.hamiltonian(), Errc::NotHermitian, "Gibbs state needs a self-dual Hamiltonian");
  const Mat E = hermitian_exp(0.5 * beta * bilinear_element(rep, H.H()));
  return E / E.trace();
}

cplx gibbs_expectation(const FockRep& rep, const SelfDualOperator& H, double beta, const Mat& A) {
  return (gibbs_density(rep, H, beta) * A).trace();
}

Mat fock_state_density(const FockRep& rep) {
  Mat D = Mat::Zero(rep.fock_dim(), rep.fock_dim());
  D(0, 0) = 1.0;
  return D;
}

Mat quasifree_symbol(const FockRep& rep, const Mat& density) {
  const int n = 2 * rep.modes();
  Mat Sf(n, n);
  std::vector<SpMat> b(n);
  for (int j = 0; j < n; ++j) b[j] = rep.field(j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Sf(i, j) = (density * Mat(b[i] * SpMat(b[j].adjoint()))).trace();
  const Mat F = rep.projection().frame();
  const Mat S = F * Sf * F.adjoint();
  const Mat I = Mat::Identity(n, n);
  const SelfDualSpace& sp = rep.projection().space();
  require(max_abs(S + sp.flip(S) - I) <= 1e-10, Errc::SymbolViolation, "S + A S A != 1");
  require(max_abs(S - S.adjoint()) <= 1e-10, Errc::SymbolViolation, "S is not Hermitian");
  auto eig = numkernel::hermitian_eig(Mat(0.5 * (S + S.adjoint())));
  require(eig.values.minCoeff() >= -1e-10 && eig.values.maxCoeff() <= 1.0 + 1e-10,
          Errc::SymbolViolation, "spectrum of S not within [0,1]");
  return S;
}

bool is_even(const FockRep& rep, const Mat& A) {
  const RVec& p = rep.parity_diagonal();
  const Mat conj = p.cast<cplx>().asDiagonal() * A * p.cast<cplx>().asDiagonal();
  return max_abs(conj - A) <= kEvenTol;
}

double schatten_norm(const FockRep& rep, const Mat& A, double s) {
  require(s >= 1.0, Errc::InvalidInput, "Schatten index must be >= 1");
  Eigen::BDCSVD<Mat> svd(A);
  const RVec& sv = svd.singularValues();
  if (std::isinf(s)) return sv.size() ? sv.maxCoeff() : 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) acc += std::pow(sv(i), s);
  return std::pow(acc / static_cast<double>(rep.fock_dim()), 1.0 / s);
}

void require_even_selfadjoint(const FockRep& rep, const Mat& W, const char* name) {
  require(W.rows() == rep.fock_dim() && W.cols() == rep.fock_dim(), Errc::ShapeMismatch,
          std::string(name) + ": operator shape");
  require(is_even(rep, W), Errc::ParityViolation, std::string(name) + " is not even");
  require(max_abs(W - W.adjoint()) <= 1e-12 * std::max(1.0, max_abs(W)), Errc::NotSelfAdjoint,
          std::string(name) + " is not self-adjoint");
}

cplx trace_ratio_exact(const FockRep& rep, const SelfDualOperator& H, const Mat& W, const Mat& K,
                       double beta, double s) {
  require(H.hamiltonian(), Errc::NotHermitian, "generating function needs a self-dual Hamiltonian");
  require_even_selfadjoint(rep, W, "W");
  require_even_selfadjoint(rep, K, "K");
  const Mat BH = bilinear_element(rep, H.H());
  const Mat num = hermitian_exp(beta * (0.5 * BH - W)) * hermitian_exp(s * K);
  const Mat den = hermitian_exp(0.5 * beta * BH);
  return num.trace() / den.trace();
}

double generating_function_exact(const FockRep& rep, const SelfDualOperator& H, const Mat& W,
                                 const Mat& K, double beta, double s) {
  const cplx r = trace_ratio_exact(rep, H, W, K, beta, s);
  require(std::abs(r.imag()) <= 1e-10 * std::max(1.0, std::abs(r)) && r.real() > 0,
          Errc::BranchAmbiguity, "trace ratio is not a positive real");
  return std::log(r.real());
}

}  // namespace fermi
