#include "fermi/genfunc.hpp"
#include "fermi/numkernel.hpp"
#include "fermi/random.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fermi;
using numkernel::max_abs;

namespace {

Mat random_even(Rng& rng, const FockRep& rep) {
  Mat X = random_matrix(rng, rep.fock_dim(), rep.fock_dim());
  const RVec& p = rep.parity_diagonal();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (p(i) != p(j)) X(i, j) = 0;
  return X;
}

Mat number(const FockRep& rep, int i) { return Mat(rep.adag(i) * rep.a(i)); }

struct Toy {
  SelfDualOperator H;
  FockRep rep;
};

Toy toy(std::uint64_t seed, int m) {
  Rng rng(seed);
  const SelfDualSpace sp = SelfDualSpace::canonical(m);
  SelfDualOperator H(sp, random_selfdual_hamiltonian(rng, sp, 1.0));
  return {H, FockRep(diagonalizing_projection(H))};
}

LatticeModel free_chain(int L) {
  LatticeModel m;
  m.L = L;
  m.hopping = {{{1}, 0, 0, 1.0}, {{0}, 0, 0, 0.3}};
  m.observable.terms = {{1.0, {{{0}, 0}}}};
  return complete_model(m);
}

}  // namespace

TEST_CASE("trace formula against the Fock trace") {
  Rng rng(50);
  for (int m : {1, 2})
    for (int n : {1, 2, 3}) {
      const FockRep rep(random_basis_projection(rng, SelfDualSpace::canonical(m)));
      std::vector<Mat> ops;
      Mat prod = rep.identity();
      for (int k = 0; k < n; ++k) {
        ops.push_back(random_even(rng, rep));
        prod = (prod * ops.back()).eval();
      }
      CHECK(std::abs(trace_formula(rep, ops) - oracle::fock_trace(prod)) < 1e-10);
    }
  const FockRep rep(BasisProjection::canonical(SelfDualSpace::canonical(1)));
  CHECK(std::abs(trace_formula(rep, {rep.identity()}) - 1.0) < 1e-15);
  CHECK_ERRC(trace_formula(FockRep(BasisProjection::canonical(SelfDualSpace::canonical(3))),
                           std::vector<Mat>(5, Mat::Identity(8, 8))),
             Errc::CapacityExceeded);
}

TEST_CASE("trace formula exponent is half the bilinear form of the self-dual derivative") {
  Rng rng(51);
  const BasisProjection P = random_basis_projection(rng, SelfDualSpace::canonical(2));
  for (int n : {1, 2, 3}) {
    const GrassmannSpace sp(P, n);
    // a grid with n_beta = n copies: n = 1 copy count arises from TimeGrid{n, beta, n}
    const Mat dP = selfdual_derivative(TimeGrid{n, 1.0, n}, P);
    CHECK(max_abs_diff(bilinear_grassmann_extended(sp, dP) * cplx(0.5), trace_formula_exponent(sp)) < 1e-12);
  }
}

TEST_CASE("Feynman-Kac RHS: trivial insertions give one") {
  const Toy t = toy(52, 2);
  const Mat zero = Mat::Zero(4, 4);
  CHECK(std::abs(feynman_kac_rhs(t.H, t.rep, zero, zero, 1.0, 0.3, 2, FkPath::Literal) - 1.0) < 1e-10);
  for (int n : {4, 8, 16})
    CHECK(std::abs(feynman_kac_rhs(t.H, t.rep, zero, zero, 1.0, 0.3, n, FkPath::Ring) - 1.0) < 1e-10);
}

TEST_CASE("Feynman-Kac RHS: the three evaluation paths agree") {
  const Toy t = toy(53, 1);
  const Mat W = 0.7 * number(t.rep, 0), K = number(t.rep, 0);
  for (int n : {3, 6}) {
    const cplx lit = feynman_kac_rhs(t.H, t.rep, W, K, 1.0, 0.3, n, FkPath::Literal);
    const cplx wick = feynman_kac_rhs(t.H, t.rep, W, K, 1.0, 0.3, n, FkPath::Wick);
    const cplx ring = feynman_kac_rhs(t.H, t.rep, W, K, 1.0, 0.3, n, FkPath::Ring);
    CHECK(std::abs(lit - wick) < 1e-9);
    CHECK(std::abs(lit - ring) < 1e-9);
    CHECK(std::abs(lit.imag()) < 1e-10);
  }
  const Toy t2 = toy(54, 2);
  const Mat n0 = number(t2.rep, 0), n1 = number(t2.rep, 1);
  const Mat W2 = Mat(n0 * n1 + 0.3 * n0), K2 = Mat(n0 + n1);
  const cplx lit = feynman_kac_rhs(t2.H, t2.rep, W2, K2, 1.0, 0.3, 2, FkPath::Literal);
  const cplx wick = feynman_kac_rhs(t2.H, t2.rep, W2, K2, 1.0, 0.3, 2, FkPath::Wick);
  const cplx ring = feynman_kac_rhs(t2.H, t2.rep, W2, K2, 1.0, 0.3, 2, FkPath::Ring);
  CHECK(std::abs(lit - wick) < 1e-9);
  CHECK(std::abs(lit - ring) < 1e-9);
}

TEST_CASE("Feynman-Kac RHS preconditions") {
  const Toy t = toy(55, 1);
  const Mat zero = Mat::Zero(2, 2);
  CHECK_ERRC(feynman_kac_rhs(t.H, t.rep, t.rep.generator(Vec::Ones(2)), zero, 1.0, 0.0, 4), Errc::ParityViolation);
  CHECK_ERRC(feynman_kac_rhs(t.H, t.rep, zero, zero, 4.0, 0.0, 2), Errc::GridTooCoarse);
  CHECK_ERRC(feynman_kac_rhs(t.H, t.rep, zero, zero, 1.0, 0.0, 12, FkPath::Literal), Errc::CapacityExceeded);
  const FockRep other(BasisProjection::canonical(SelfDualSpace::canonical(1)));
  if (diagonalization_residual(t.H.H(), other.projection()) > 1e-6)
    CHECK_ERRC(feynman_kac_rhs(t.H, other, zero, zero, 1.0, 0.0, 4), Errc::NotDiagonalized);
}

TEST_CASE("Feynman-Kac LHS") {
  const Toy t = toy(56, 2);
  const Mat zero = Mat::Zero(4, 4), K = number(t.rep, 1), W = number(t.rep, 0);
  CHECK(std::abs(feynman_kac_lhs(t.rep, t.H, zero, zero, 1.0, 0.0) - 1.0) < 1e-13);
  CHECK(std::abs(feynman_kac_lhs(t.rep, t.H, W, K, 1e-6, 0.5) - oracle::fock_trace(oracle::hermitian_exp(0.5 * K))) < 1e-5);
  CHECK(std::abs(feynman_kac_lhs(t.rep, t.H, W, K, 1.0, 0.5).imag()) < 1e-12);
}

TEST_CASE("convergence study: first-order decay for a quadratic toy") {
  const Toy t = toy(57, 1);
  const Mat W = 0.5 * number(t.rep, 0), K = number(t.rep, 0);
  const ConvergenceReport r = convergence_study(t.H, t.rep, W, K, 1.0, 0.3, {8, 16, 32});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].lhs == r.rows[2].lhs);
  CHECK(std::isnan(r.rows[0].ratio));
  CHECK(r.rows[2].ratio > 0.4);
  CHECK(r.rows[2].ratio < 0.6);
  CHECK(r.monotone);
  CHECK(r.empirical_order > 0.8);
  CHECK_ERRC(convergence_study(t.H, t.rep, W, K, 1.0, 0.3, {8, 4}), Errc::InvalidInput);

  const Mat zero = Mat::Zero(2, 2);
  for (const auto& row : convergence_study(t.H, t.rep, zero, zero, 1.0, 0.3, {4, 8}).rows)
    CHECK(row.abs_err < 1e-10);
}

TEST_CASE("box observables") {
  const LatticeModel m = free_chain(1);
  const FockRep canon(canonical_lattice_projection(m));
  // number operator summed over the box is the total particle number
  Mat N = Mat::Zero(8, 8);
  for (int i = 0; i < 3; ++i) N += number(canon, i);
  CHECK(max_abs(Mat(box_observable(canon, m, m.observable, 1) - N)) < 1e-14);
  // nearest-neighbour products only count translates inside the box
  LocalObservable pair;
  pair.terms = {{1.0, {{{0}, 0}, {{1}, 0}}}};
  const Mat expect = Mat(number(canon, 0) * number(canon, 1) + number(canon, 1) * number(canon, 2));
  CHECK(max_abs(Mat(box_observable(canon, m, pair, 1) - expect)) < 1e-14);
  CHECK(max_abs(box_observable(canon, m, pair, 0)) == 0.0);
  // the same abstract element in a rotated representation has the same spectrum
  const SelfDualOperator H = build_hamiltonian(m);
  const FockRep rot(diagonalizing_projection(H));
  const Mat Nr = box_observable(rot, m, m.observable, 1);
  const RVec a = numkernel::hermitian_eig(N).values, b = numkernel::hermitian_eig(Nr).values;
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log-moment generating function") {
  const LatticeModel m = free_chain(1);
  const LocalObservable none;
  CHECK(std::abs(log_moment_generating(m, none, m.observable, 1.0, 0.0, 1, 1, 1)) < 1e-14);

  // free model, K = number operator: the single-particle formula
  const double beta = 0.7, s = 0.4;
  const RVec eps = numkernel::hermitian_eig(hopping_matrix(m)).values;
  const double expect = oracle::free_log_ratio(eps, beta, s) / 3;
  CHECK(log_moment_generating(m, none, m.observable, beta, s, 1, 1, 1) == doctest::Approx(expect).epsilon(1e-10));

  // convexity in s with an interaction present
  LocalObservable W;
  W.terms = {{0.8, {{{0}, 0}, {{1}, 0}}}};
  std::vector<double> J;
  for (int i = 0; i < 5; ++i) J.push_back(log_moment_generating(m, W, m.observable, 1.0, -0.4 + 0.2 * i, 2, 1, 1));
  for (int i = 1; i < 4; ++i) CHECK(J[i - 1] - 2 * J[i] + J[i + 1] >= -1e-10);
  CHECK_ERRC(log_moment_generating(m, W, m.observable, 1.0, 0.1, 1, 2, 1), Errc::InvalidInput);
  CHECK_ERRC(log_moment_generating(m, W, m.observable, 1.0, 0.1, 6, 1, 1), Errc::CapacityExceeded);
}
