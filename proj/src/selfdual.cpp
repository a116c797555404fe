#include "fermi/selfdual.hpp"

#include <cmath>

#include "fermi/numkernel.hpp"

namespace fermi {

using numkernel::max_abs;

SelfDualSpace::SelfDualSpace(Mat J) : J_(std::move(J)) {
  require(J_.rows() == J_.cols(), Errc::ShapeMismatch, "involution matrix must be square");
  require(J_.rows() % 2 == 0, Errc::InvalidInput, "self-dual space must have even dimension");
  const Mat I = Mat::Identity(J_.rows(), J_.cols());
  require(max_abs(J_ * J_.adjoint() - I) <= 1e-12, Errc::InvalidInput, "J is not unitary");
  require(max_abs(J_ * J_.conjugate() - I) <= 1e-12, Errc::InvalidInput,
          "J conj(J) != 1, the map is not an involution");
}

SelfDualSpace SelfDualSpace::canonical(int m) {
  Mat J = Mat::Zero(2 * m, 2 * m);
  J.topRightCorner(m, m).setIdentity();
  J.bottomLeftCorner(m, m).setIdentity();
  return SelfDualSpace(J);
}

bool SelfDualSpace::same_as(const SelfDualSpace& o, double tol) const {
  return dim() == o.dim() && max_abs(J_ - o.J_) <= tol;
}

BasisProjection::BasisProjection(SelfDualSpace space, Mat range_basis)
    : space_(std::move(space)), psi_(std::move(range_basis)) {
  const int n = space_.dim();
  require(psi_.rows() == n && psi_.cols() == n / 2, Errc::ShapeMismatch,
          "range basis must be dim x dim/2");
  const Mat Im = Mat::Identity(n / 2, n / 2);
  require(max_abs(psi_.adjoint() * psi_ - Im) <= 1e-11, Errc::InvalidInput,
          "range basis is not orthonormal");
  P_ = psi_ * psi_.adjoint();
  const Mat I = Mat::Identity(n, n);
  require(max_abs(space_.flip(P_) - (I - P_)) <= 1e-11, Errc::InvalidInput,
          "A P A != 1 - P, not a basis projection");
}

BasisProjection BasisProjection::canonical(const SelfDualSpace& space) {
  const int m = space.half();
  Mat psi = Mat::Zero(2 * m, m);
  psi.topRows(m).setIdentity();
  return BasisProjection(space, psi);
}

Mat BasisProjection::frame() const {
  Mat F(psi_.rows(), 2 * psi_.cols());
  F << psi_, space_.involve_cols(psi_);
  return F;
}

SelfDualOperator::SelfDualOperator(SelfDualSpace space, Mat H)
    : space_(std::move(space)), H_(std::move(H)) {
  require(H_.rows() == space_.dim() && H_.cols() == space_.dim(), Errc::ShapeMismatch,
          "operator shape does not match the space");
  const double scale = std::max(1.0, max_abs(H_));
  require(max_abs(H_.adjoint() + space_.flip(H_)) <= 1e-11 * scale, Errc::InvalidInput,
          "H* != -A H A, operator is not self-dual");
  require(std::abs(H_.trace()) <= 1e-10 * scale, Errc::InvalidInput,
          "self-dual operator with nonzero trace");
  hamiltonian_ = max_abs(H_ - H_.adjoint()) <= 1e-11 * scale;
}

SelfDualOperator kmap(const SelfDualSpace& space, const Mat& H) {
  require(H.rows() == space.dim() && H.cols() == space.dim(), Errc::ShapeMismatch,
          "kmap: operator shape does not match the space");
  Mat K = 0.5 * (H - space.flip(Mat(H.adjoint())));
  return SelfDualOperator(space, K);
}

BasisProjection diagonalizing_projection(const SelfDualOperator& Hop) {
  require(Hop.hamiltonian(), Errc::NotHermitian, "diagonalizing_projection needs H = H*");
  const SelfDualSpace& sp = Hop.space();
  const int n = sp.dim();
  const int m = n / 2;
  auto eig = numkernel::hermitian_eig(Hop.H());

  std::vector<Vec> cols;
  std::vector<Vec> kernel;
  for (int i = 0; i < n; ++i) {
    const double lam = eig.values(i);
    if (lam > kKernelTol) cols.push_back(eig.vectors.col(i));
    else if (lam >= -kKernelTol) kernel.push_back(eig.vectors.col(i));
  }

  // A-real orthonormal basis of the kernel, then pair consecutive vectors
  std::vector<Vec> real;
  auto try_add = [&](Vec w) {
    for (const auto& r : real) w -= r * r.dot(w);
    const double nw = w.norm();
    if (nw < 1e-6) return;
    w /= nw;
    w = 0.5 * (w + sp.involve(w));  // reinforce A w = w against drift
    real.push_back(w / w.norm());
  };
  for (const auto& v : kernel) {
    try_add(v + sp.involve(v));
    try_add(cplx(0, 1) * (v - sp.involve(v)));
  }
  if (real.size() != kernel.size() || real.size() % 2 != 0)
    throw Error(Errc::KernelPairingFailure,
                "kernel of dimension " + std::to_string(kernel.size()) + " yields " +
                    std::to_string(real.size()) + " A-real directions");
  const double s = 1.0 / std::sqrt(2.0);
  for (size_t j = 0; j + 1 < real.size(); j += 2) {
    Vec w = s * (real[j] + cplx(0, 1) * real[j + 1]);
    const cplx overlap = sp.involve(w).dot(w);
    if (std::abs(overlap) > 1e-8)
      throw Error(Errc::KernelPairingFailure,
                  "paired kernel vector has overlap " + std::to_string(std::abs(overlap)));
    cols.push_back(w);
  }
  require(static_cast<int>(cols.size()) == m, Errc::KernelPairingFailure,
          "positive part plus kernel pairing does not give half the dimension");
  Mat psi(n, m);
  for (int j = 0; j < m; ++j) psi.col(j) = cols[j];
  BasisProjection P(sp, psi);
  const double res = diagonalization_residual(Hop.H(), P);
  require(res <= 1e-10 * std::max(1.0, max_abs(Hop.H())), Errc::KernelPairingFailure,
          "reconstruction residual " + std::to_string(res));
  return P;
}

double diagonalization_residual(const Mat& H, const BasisProjection& P) {
  const Mat& p = P.P();
  const Mat q = P.perp();
  const Mat HP = 2.0 * p * H * p;
  const Mat rec = 0.5 * (p * HP * p - q * P.space().flip(Mat(HP.adjoint())) * q);
  return max_abs(rec - H);
}

BasisProjection bogoliubov_transform(const BasisProjection& P, const Mat& U) {
  const SelfDualSpace& sp = P.space();
  const int n = sp.dim();
  require(U.rows() == n && U.cols() == n, Errc::ShapeMismatch, "Bogoliubov U shape");
  require(max_abs(U.adjoint() * U - Mat::Identity(n, n)) <= 1e-11, Errc::NotBogoliubov,
          "U is not unitary");
  require(max_abs(sp.flip(U) - U) <= 1e-11, Errc::NotBogoliubov, "U does not commute with A");
  const cplx det = numkernel::determinant(U);
  require(std::abs(std::abs(det.real()) - 1.0) <= 1e-8 && std::abs(det.imag()) <= 1e-8,
          Errc::NotBogoliubov, "det U is not +-1");
  return BasisProjection(sp, U * P.range_basis());
}

SelfDualOperator lift_one_particle(const Mat& h, const Mat& G) {
  const Eigen::Index m = h.rows();
  require(h.cols() == m && G.rows() == m && G.cols() == m, Errc::ShapeMismatch,
          "lift_one_particle: h and G must be m x m");
  const double scale = std::max(1.0, std::max(max_abs(h), max_abs(G)));
  require(max_abs(h - h.adjoint()) <= 1e-12 * scale, Errc::NotHermitian, "h is not Hermitian");
  require(max_abs(G + G.transpose()) <= 1e-12 * scale, Errc::NotAntisymmetric,
          "pairing block is not antisymmetric");
  Mat X(2 * m, 2 * m);
  X << h, G, -G.conjugate(), -h.conjugate();
  return SelfDualOperator(SelfDualSpace::canonical(static_cast<int>(m)), -0.5 * X);
}

int orientation_sign(const BasisProjection& P1, const BasisProjection& P2) {
  require(P1.space().same_as(P2.space()), Errc::SpaceMismatch,
          "orientation_sign: projections live on different spaces");
  const Mat U = P2.frame() * P1.frame().adjoint();
  const cplx det = numkernel::determinant(U);
  if (std::abs(det - 1.0) <= 1e-8) return 1;
  if (std::abs(det + 1.0) <= 1e-8) return -1;
  throw Error(Errc::DegenerateOverlap, "det U = " + std::to_string(det.real()) + " + " +
                                           std::to_string(det.imag()) + "i");
}

}  // namespace fermi

#include "fermi/random.hpp"

namespace fermi {

Mat random_selfdual_hamiltonian(Rng& rng, const SelfDualSpace& sp, double norm) {
  const Mat X = random_hermitian(rng, sp.dim());
  Mat H = 0.5 * (X - sp.flip(X));
  H = 0.5 * (H + H.adjoint()).eval();
  const double nrm = numkernel::op_norm(H);
  if (nrm > 0) H *= norm / nrm;
  return H;
}

Mat random_bogoliubov(Rng& rng, const SelfDualSpace& sp, double scale) {
  Mat X = random_matrix(rng, sp.dim(), sp.dim());
  X = 0.5 * (X - X.adjoint()).eval();
  Mat A = 0.5 * scale * (X + sp.flip(X));
  return numkernel::matrix_exp(A);
}

BasisProjection random_basis_projection(Rng& rng, const SelfDualSpace& sp) {
  const Mat H = random_selfdual_hamiltonian(rng, sp, 1.0);
  return diagonalizing_projection(SelfDualOperator(sp, H));
}

}  // namespace fermi
