#include "fermi/covariance.hpp"

#include <cmath>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "fermi/numkernel.hpp"
#include "fermi/random.hpp"

namespace fermi {

using numkernel::max_abs;

int strict_floor(double x) {
  require(x >= 0, Errc::InvalidInput, "strict_floor of a negative number");
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-12 * std::max(1.0, x)) return std::max(0, static_cast<int>(r) - 1);
  return static_cast<int>(std::floor(x));
}

TimeGrid TimeGrid::make(int n, double beta) {
  require(n >= 1, Errc::InvalidInput, "time grid needs n >= 1");
  require(beta > 0 && std::isfinite(beta), Errc::InvalidInput, "beta must be positive");
  return TimeGrid{n, beta, n + strict_floor(n / beta)};
}

void require_fine_grid(const SelfDualOperator& H, const TimeGrid& grid) {
  const double norm = numkernel::op_norm(H.H());
  require(grid.n > kGridMargin * grid.beta * norm, Errc::GridTooCoarse,
          "n = " + std::to_string(grid.n) + " must exceed 1.01 * beta * ||H|| = " +
              std::to_string(kGridMargin * grid.beta * norm));
}

namespace {

Mat extend(const Mat& X, int copies) {
  const Eigen::Index b = X.rows();
  Mat E = Mat::Zero(b * copies, b * copies);
  for (int k = 0; k < copies; ++k) E.block(k * b, k * b, b, b) = X;
  return E;
}

Mat flip_extended(const SelfDualSpace& sp, int copies, const Mat& X) {
  const Mat Jh = extend(sp.J(), copies);
  return Jh * X.conjugate() * Jh.conjugate();
}

}  // namespace

CovarianceOperator::CovarianceOperator(TimeGrid grid, SelfDualSpace space, Mat matrix, Source source)
    : grid_(grid), space_(std::move(space)), C_(std::move(matrix)), source_(source) {
  const Eigen::Index N = Eigen::Index(grid_.n_beta) * space_.dim();
  require(C_.rows() == N && C_.cols() == N, Errc::ShapeMismatch, "covariance shape");
}

Mat CovarianceOperator::block(int k1, int k2) const {
  require(k1 >= 0 && k1 < grid_.n_beta && k2 >= 0 && k2 < grid_.n_beta, Errc::InvalidInput,
          "covariance block index out of range");
  const int b = space_.dim();
  return C_.block(k1 * b, k2 * b, b, b);
}

double CovarianceOperator::selfduality_residual() const {
  return max_abs(Mat(C_.adjoint()) + flip_extended(space_, grid_.n_beta, C_));
}

Mat discrete_derivative(const TimeGrid& grid, int base_dim) {
  const int nb = grid.n_beta, b = base_dim;
  const Mat I = Mat::Identity(b, b);
  Mat d = Mat::Zero(nb * b, nb * b);
  for (int k = 0; k < nb; ++k) {
    d.block(k * b, k * b, b, b) += I;
    if (k == 0)
      d.block((nb - 1) * b, 0, b, b) += I;
    else
      d.block((k - 1) * b, k * b, b, b) -= I;
  }
  return d;
}

Mat selfdual_derivative(const TimeGrid& grid, const BasisProjection& P) {
  const SelfDualSpace& sp = P.space();
  const Mat d = discrete_derivative(grid, sp.dim());
  const Mat Ph = extend(P.P(), grid.n_beta);
  return Ph * d * Ph - flip_extended(sp, grid.n_beta, Mat(Ph * d.adjoint() * Ph));
}

Mat inverse_covariance(const SelfDualOperator& H, const BasisProjection& P, const TimeGrid& grid) {
  require(H.space().same_as(P.space()), Errc::SpaceMismatch, "H and P live on different spaces");
  const int b = H.space().dim();
  Mat B = selfdual_derivative(grid, P);
  const double w = grid.beta / grid.n;
  for (int k = 0; k < std::min(grid.n, grid.n_beta); ++k) B.block(k * b, k * b, b, b) += w * H.H();
  return B;
}

CovarianceOperator covariance_direct(const SelfDualOperator& H, const BasisProjection& P,
                                     const TimeGrid& grid) {
  require(H.hamiltonian(), Errc::NotHermitian, "covariance needs a self-dual Hamiltonian");
  require_fine_grid(H, grid);
  return CovarianceOperator(grid, H.space(), numkernel::matrix_inverse(inverse_covariance(H, P, grid)),
                            CovarianceOperator::Source::DirectInverse);
}

SelfDualOperator h_n_approximant(const SelfDualOperator& H, double beta, int n) {
  require(H.hamiltonian(), Errc::NotHermitian, "h_n_approximant needs a self-dual Hamiltonian");
  require(n > beta * numkernel::op_norm(H.H()), Errc::GridTooCoarse, "n <= beta ||H||");
  const double x = beta / n;
  Mat Hn = numkernel::hermitian_apply(H.H(), [&](double l) {
    return (0.5 / x) * std::log((1.0 + x * l) / (1.0 - x * l));
  });
  return SelfDualOperator(H.space(), 0.5 * (Hn + Hn.adjoint()));
}

SelfDualOperator h_n_adapted(const SelfDualOperator& H, const BasisProjection& P, double beta,
                             int n) {
  require(H.hamiltonian(), Errc::NotHermitian, "h_n_adapted needs a self-dual Hamiltonian");
  require(n > beta * numkernel::op_norm(H.H()), Errc::GridTooCoarse, "n <= beta ||H||");
  const double x = beta / n;
  const Mat L = numkernel::hermitian_apply(H.H(), [&](double l) { return std::log1p(x * l) / x; });
  const Mat PLP = P.P() * L * P.P();
  Mat Hn = PLP - P.space().flip(PLP);
  return SelfDualOperator(H.space(), 0.5 * (Hn + Hn.adjoint()));
}

double alpha_n(const TimeGrid& grid, int k, int q) {
  return grid.beta / grid.n * std::max(0, std::min(grid.n - k, q - k));
}

Mat covariance_closed_form(const SelfDualOperator& H, const BasisProjection& P,
                           const TimeGrid& grid, int k1, int k2) {
  require(k1 >= 0 && k1 < grid.n_beta && k2 >= 0 && k2 < grid.n_beta, Errc::InvalidInput,
          "covariance block index out of range");
  require_fine_grid(H, grid);
  const Mat Hn = h_n_adapted(H, P, grid.beta, grid.n).H();
  const double b = grid.beta;
  auto fn = [&](auto f) { return numkernel::hermitian_apply(Hn, f); };
  const Mat& Pm = P.P();
  const Mat Pp = P.perp();
  if (k1 < k2) {
    const double a1 = alpha_n(grid, k1, k2 + 1), a2 = alpha_n(grid, k1 + 1, k2);
    return Pm * fn([&](double e) { return std::exp(-a1 * e) / (1 + std::exp(-b * e)); }) * Pm +
           Pp * fn([&](double e) { return std::exp(-a2 * e) / (1 + std::exp(-b * e)); }) * Pp;
  }
  if (k1 > k2) {
    const double a1 = alpha_n(grid, k2 + 1, k1), a2 = alpha_n(grid, k2, k1 + 1);
    return -(Pm * fn([&](double e) { return std::exp(a1 * e) / (1 + std::exp(b * e)); }) * Pm) -
           Pp * fn([&](double e) { return std::exp(a2 * e) / (1 + std::exp(b * e)); }) * Pp;
  }
  const double a = alpha_n(grid, k1, k1 + 1);
  return Pm * fn([&](double e) { return std::exp(-a * e) / (1 + std::exp(-b * e)); }) * Pm -
         Pp * fn([&](double e) { return std::exp(a * e) / (1 + std::exp(b * e)); }) * Pp;
}

CovarianceOperator covariance_closed_form_full(const SelfDualOperator& H, const BasisProjection& P,
                                               const TimeGrid& grid) {
  const int b = H.space().dim(), nb = grid.n_beta;
  Mat C(nb * b, nb * b);
  for (int k1 = 0; k1 < nb; ++k1)
    for (int k2 = 0; k2 < nb; ++k2)
      C.block(k1 * b, k2 * b, b, b) = covariance_closed_form(H, P, grid, k1, k2);
  return CovarianceOperator(grid, H.space(), C, CovarianceOperator::Source::ClosedForm);
}

namespace {

void accumulate(BoundStats& st, double r) {
  st.samples += 1;
  st.max_ratio = std::max(st.max_ratio, r);
  st.mean_ratio += r;
  if (r > 1.0 + kBoundSlack) st.violations += 1;
}

void finalize(BoundStats& st) {
  if (st.samples) st.mean_ratio /= static_cast<double>(st.samples);
}

}  // namespace

BoundStats det_bound_ratio(const CovarianceOperator& C, const BasisProjection& P,
                           std::int64_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const int b = C.space().dim(), nb = C.grid().n_beta, m = P.half();
  std::uniform_int_distribution<int> pickN(1, 4), pickK(0, nb - 1);
  BoundStats st;
  for (std::int64_t s = 0; s < samples; ++s) {
    const int N = pickN(rng);
    std::vector<int> k(2 * N);
    std::vector<Vec> phi(2 * N);
    double norms = 1.0;
    for (int q = 0; q < 2 * N; ++q) {
      k[q] = pickK(rng);
      phi[q] = P.range_basis() * random_vector(rng, m);
      norms *= phi[q].norm();
    }
    Mat M(N, N);
    for (int q = 0; q < N; ++q)
      for (int l = 0; l < N; ++l)
        M(q, l) = phi[q].dot(C.matrix().block(k[q] * b, k[N + l] * b, b, b) * phi[N + l]);
    accumulate(st, std::abs(numkernel::determinant(M)) / norms);
  }
  finalize(st);
  return st;
}

RMat psd_factor(const RMat& M) {
  require(M.rows() == M.cols(), Errc::ShapeMismatch, "weight matrix must be square");
  require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()),
          Errc::NotPSD, "weight matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<RMat> es(0.5 * (M + M.transpose()));
  RVec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    require(ev(i) >= -1e-12, Errc::NotPSD, "weight matrix has a negative eigenvalue");
    ev(i) = std::max(0.0, ev(i));
  }
  return ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

BoundStats pfaffian_bound_ratio(const CovarianceOperator& C, const BasisProjection& P,
                                const PfaffianSweep& sweep) {
  Rng rng(sweep.seed);
  const SelfDualSpace& sp = C.space();
  const int b = sp.dim(), nb = C.grid().n_beta, m = P.half();
  const RMat R = sweep.weight ? psd_factor(*sweep.weight) : RMat::Identity(1, 1);
  const int r = static_cast<int>(R.rows());
  // tensor extension: H (x) M with the weight realised as R e_j in C^r
  const int bt = b * r;
  const Mat Ct = Eigen::kroneckerProduct(C.matrix(), Mat::Identity(r, r));
  const Mat Jt = Eigen::kroneckerProduct(sp.J(), Mat::Identity(r, r));
  const Mat Pt = Eigen::kroneckerProduct(P.P(), Mat::Identity(r, r));
  std::uniform_int_distribution<int> pickN(1, sweep.max_pairs), pickK(0, nb - 1),
      pickJ(0, static_cast<int>(R.cols()) - 1), coin(0, 1);
  BoundStats st;
  for (std::int64_t s = 0; s < sweep.samples; ++s) {
    const int N = pickN(rng);
    std::vector<int> k(2 * N);
    std::vector<Vec> v(2 * N);
    double bound = 1.0;
    for (int q = 0; q < 2 * N; ++q) {
      k[q] = pickK(rng);
      Vec phi;
      if (sweep.paired_subspaces) {
        phi = P.range_basis() * random_vector(rng, m);
        if (coin(rng)) phi = sp.involve(phi);
      } else {
        phi = random_vector(rng, b);
      }
      const Vec e = R.col(pickJ(rng)).cast<cplx>();
      v[q] = Eigen::kroneckerProduct(phi, e);
      bound *= (Pt * v[q]).norm() + (v[q] - Pt * v[q]).norm();
    }
    Mat M(2 * N, 2 * N);
    for (int q = 0; q < 2 * N; ++q) {
      const Vec av = Jt * v[q].conjugate();
      for (int l = 0; l < 2 * N; ++l)
        M(q, l) = av.dot(Ct.block(k[q] * bt, k[l] * bt, bt, bt) * v[l]);
    }
    if (bound == 0.0) continue;
    M = (0.5 * (M - M.transpose())).eval();
    accumulate(st, std::abs(numkernel::pfaffian(M)) / bound);
  }
  finalize(st);
  return st;
}

}  // namespace fermi
