#include "fermi/grassmann.hpp"
#include "fermi/numkernel.hpp"
#include "fermi/random.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fermi;
using numkernel::max_abs;

namespace {
Mat random_even_op(Rng& rng, const FockRep& rep) {
  Mat X = random_matrix(rng, rep.fock_dim(), rep.fock_dim());
  const RVec& p = rep.parity_diagonal();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      if (p(i) != p(j)) X(i, j) = 0;
  return X;
}
}  // namespace

TEST_CASE("wedge product is graded-commutative") {
  const GrassmannSpace sp(BasisProjection::canonical(SelfDualSpace::canonical(2)), 1);
  const auto g = [&](int s) { return GrassmannElement::generator(sp, s); };
  CHECK(wedge(g(0), g(0)).is_zero());
  CHECK(max_abs_diff(wedge(g(0), g(2)), -wedge(g(2), g(0))) == 0.0);
  const GrassmannElement e = wedge(g(1), g(3));
  CHECK(max_abs_diff(wedge(e, g(0)), wedge(g(0), e)) == 0.0);
  CHECK(wedge_sign(0b0100, 0b0011) == 1);
  CHECK(wedge_sign(0b0010, 0b0001) == -1);
}

TEST_CASE("capacity is enforced") {
  CHECK_ERRC(GrassmannSpace(BasisProjection::canonical(SelfDualSpace::canonical(5)), 3),
             Errc::CapacityExceeded);
}

TEST_CASE("grassmann exponential of an even nilpotent element") {
  Rng rng(30);
  const SelfDualSpace base = SelfDualSpace::canonical(2);
  const GrassmannSpace sp(random_basis_projection(rng, base), 2);
  const GrassmannElement q = bilinear_grassmann(sp, random_matrix(rng, 4, 4), 0, 1);
  const GrassmannElement one = wedge(grassmann_exp(q), grassmann_exp(-q));
  CHECK(max_abs_diff(one, GrassmannElement::scalar(sp, 1.0)) < 1e-12);
}

TEST_CASE("kappa is a linear bijection and the circle product realizes the operator product") {
  Rng rng(31);
  const FockRep rep(random_basis_projection(rng, SelfDualSpace::canonical(2)));
  const Mat A = random_matrix(rng, 4, 4), B = random_matrix(rng, 4, 4);
  CHECK(max_abs(Mat(kappa_inv(rep, kappa(rep, A)) - A)) < 1e-12);
  const GrassmannElement kA = kappa(rep, A), kB = kappa(rep, B);
  const GrassmannElement lit = circle_product_literal(rep.projection(), kA, kB);
  CHECK(max_abs(Mat(kappa_inv(rep, lit) - A * B)) < 1e-11);
  CHECK(max_abs_diff(lit, circle_product(rep.projection(), kA, kB)) < 1e-11);
  // kappa(1) = 1, and kappa(B(f)) is the degree-one element of A f
  CHECK(max_abs_diff(kappa(rep, rep.identity()), GrassmannElement::scalar(kA.space(), 1.0)) < 1e-14);
  const Vec f = random_vector(rng, 4);
  CHECK(max_abs_diff(kappa(rep, rep.generator(f)),
                     GrassmannElement::vector(kA.space(), 0, rep.projection().space().involve(f))) < 1e-13);
}

TEST_CASE("star involution matches the operator adjoint") {
  Rng rng(32);
  const FockRep rep(random_basis_projection(rng, SelfDualSpace::canonical(2)));
  const Mat A = random_even_op(rng, rep);
  CHECK(max_abs(Mat(kappa_inv(rep, star_involution(kappa(rep, A))) - A.adjoint())) < 1e-12);
}

TEST_CASE("antisymmetrized circle products expand into Pfaffian-weighted wedges") {
  Rng rng(33);
  const BasisProjection P = random_basis_projection(rng, SelfDualSpace::canonical(2));
  const GrassmannSpace sp(P, 1);
  for (int N : {2, 3, 4}) {
    std::vector<Vec> phis;
    for (int q = 0; q < N; ++q) phis.push_back(random_vector(rng, 4));
    CHECK(max_abs_diff(antisymmetrized_circle(P, sp, phis),
                       antisymmetrized_circle_expansion(P, sp, phis)) < 1e-11);
  }
}

TEST_CASE("Berezin integral and rebase") {
  Rng rng(34);
  const SelfDualSpace base = SelfDualSpace::canonical(2);
  const BasisProjection P = random_basis_projection(rng, base), Q = random_basis_projection(rng, base);
  const GrassmannSpace sp(P, 1), sq(Q, 1);
  CHECK(berezin_integral_all(P, GrassmannElement::scalar(sp, 1.0)) == cplx(0.0));
  const FockRep rep(P);
  const GrassmannElement x = kappa(rep, random_even_op(rng, rep));
  CHECK(max_abs_diff(rebase(rebase(x, sq), sp), x) < 1e-12);
  // the integral over all generators depends on P only through the orientation
  CHECK(std::abs(berezin_integral_all(P, x) -
                 double(orientation_sign(P, Q)) * berezin_integral_all(Q, rebase(x, sq))) < 1e-11);
}

TEST_CASE("top monomial sign convention") {
  for (int m = 1; m <= 5; ++m) {
    const GrassmannSpace sp(BasisProjection::canonical(SelfDualSpace::canonical(m)), 1);
    GrassmannElement top = GrassmannElement::scalar(sp, 1.0);
    for (int s = 0; s < 2 * m; ++s) top = wedge(top, GrassmannElement::generator(sp, s));
    CHECK(berezin_integral_all(sp.reference(), top) == cplx(berezin_top_sign(m)));
  }
  CHECK(berezin_top_sign(1) == -1);
  CHECK(berezin_top_sign(3) == 1);
}

TEST_CASE("Gaussian integrals: normalization, odd moments and the Wick path") {
  Rng rng(35);
  const SelfDualSpace base = SelfDualSpace::canonical(2);
  const BasisProjection P = random_basis_projection(rng, base);
  const int copies = 2;
  const Mat Ph = extend_blockwise(P.P(), copies);
  const Mat Z = Ph * random_matrix(rng, 8, 8) * Ph;
  const Mat C = Z - extended_flip(base, copies, Z).adjoint();
  const GrassmannSpace sp(P, copies);
  CHECK(std::abs(gaussian_integral(C, GrassmannElement::scalar(sp, 1.0)) - 1.0) < 1e-12);

  GrassmannElement odd = GrassmannElement::vector(sp, 0, random_vector(rng, 4));
  odd = wedge(odd, wedge(GrassmannElement::vector(sp, 1, random_vector(rng, 4)),
                         GrassmannElement::vector(sp, 1, random_vector(rng, 4))));
  CHECK(std::abs(gaussian_integral(C, odd)) < 1e-12);

  // an arbitrary even element: sum of random monomials of degree <= 4
  std::vector<Term> terms;
  for (int t = 0; t < 30; ++t) {
    Mask m = 0;
    for (int k = 0; k < 4; ++k) m |= Mask(1) << std::uniform_int_distribution<int>(0, 7)(rng);
    terms.push_back({m, gaussian_c(rng)});
  }
  const GrassmannElement xi(sp, terms);
  const cplx lit = gaussian_integral(C, xi), wick = gaussian_integral_wick(C, xi);
  CHECK(std::abs(lit - wick) <= 1e-10 * std::max(1.0, std::abs(lit)));
}

TEST_CASE("Chernoff products converge at first order") {
  Rng rng(36);
  const FockRep rep(random_basis_projection(rng, SelfDualSpace::canonical(2)));
  const Mat A = 0.5 * random_even_op(rng, rep);
  const Mat exact = numkernel::matrix_exp(A);
  const auto err = [&](int n) { return max_abs(Mat(chernoff_approx(rep, A, n) - exact)); };
  const double r = err(64) / err(32);
  CHECK(r > 0.4);
  CHECK(r < 0.6);
}
