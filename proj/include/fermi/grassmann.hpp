#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "fermi/fock.hpp"
#include "fermi/selfdual.hpp"

namespace fermi {

using Mask = std::uint32_t;

inline constexpr int kMaxGenerators = 24;
inline constexpr int kDenseGenerators = 20;
inline constexpr double kPruneTol = 1e-15;

// Generators are the frame vectors f_i^(k) of a reference projection, copy-major:
// slot = k * 2m + i, with f_i = psi_i for i < m and f_{m+i} = A psi_i.
class GrassmannSpace {
public:
  GrassmannSpace(BasisProjection reference, int copies);

  const BasisProjection& reference() const { return data_->ref; }
  const Mat& frame() const { return data_->frame; }
  int copies() const { return data_->copies; }
  int half() const { return data_->ref.half(); }
  int base_dim() const { return 2 * half(); }
  int generators() const { return copies() * base_dim(); }

  int slot(int copy, int dir) const { return copy * base_dim() + dir; }
  int copy_of(int slot) const { return slot / base_dim(); }
  int dir_of(int slot) const { return slot % base_dim(); }
  // slot of A f for the frame vector in `slot`
  int partner(int slot) const {
    const int d = dir_of(slot), m = half();
    return slot - d + (d < m ? d + m : d - m);
  }
  Mask copy_mask(int copy) const {
    return ((Mask(1) << base_dim()) - 1) << (copy * base_dim());
  }

  GrassmannSpace with_copies(int n) const { return GrassmannSpace(reference(), n); }
  bool same_as(const GrassmannSpace& o) const;

private:
  struct Data {
    BasisProjection ref;
    Mat frame;
    int copies;
  };
  std::shared_ptr<const Data> data_;
};

struct Term {
  Mask mask;
  cplx coeff;
};

// Sign of the merge: (-1)^{#(a in A, b in B) with a > b}.
int wedge_sign(Mask A, Mask B);

class GrassmannElement {
public:
  explicit GrassmannElement(GrassmannSpace space) : space_(std::move(space)) {}
  // accumulates duplicate masks and prunes |c| <= kPruneTol
  GrassmannElement(GrassmannSpace space, const std::vector<Term>& terms);

  static GrassmannElement scalar(const GrassmannSpace& sp, cplx c);
  static GrassmannElement generator(const GrassmannSpace& sp, int slot, cplx c = 1.0);
  // phi in copy k as a degree-one element, linear in phi
  static GrassmannElement vector(const GrassmannSpace& sp, int copy, const Vec& phi);

  const GrassmannSpace& space() const { return space_; }
  const std::vector<Term>& terms() const { return terms_; }
  cplx coeff(Mask m) const;
  cplx scalar_part() const { return coeff(0); }
  bool is_zero() const { return terms_.empty(); }
  bool is_even() const;
  double max_abs_coeff() const;
  int max_degree() const;

  GrassmannElement& operator+=(const GrassmannElement& o);
  GrassmannElement& operator-=(const GrassmannElement& o);
  GrassmannElement& operator*=(cplx c);
  friend GrassmannElement operator+(GrassmannElement a, const GrassmannElement& b) { return a += b; }
  friend GrassmannElement operator-(GrassmannElement a, const GrassmannElement& b) { return a -= b; }
  friend GrassmannElement operator*(cplx c, GrassmannElement a) { return a *= c; }
  friend GrassmannElement operator*(GrassmannElement a, cplx c) { return a *= c; }
  GrassmannElement operator-() const { return (*this) * cplx(-1.0); }

private:
  GrassmannSpace space_;
  std::vector<Term> terms_;  // sorted by mask
};

double max_abs_diff(const GrassmannElement& a, const GrassmannElement& b);

GrassmannElement wedge(const GrassmannElement& a, const GrassmannElement& b);

// left derivative along a frame generator
GrassmannElement slot_derivative(int slot, const GrassmannElement& xi);
// d/d(phi^(k)) = sum_i conj(<f_i, phi>) d/d f_i^(k), antilinear in phi
GrassmannElement berezin_derivative(int copy, const Vec& phi, const GrassmannElement& xi);

// prod_i (d/d psi_i^(k) d/d (A psi_i)^(k)) over the range basis of P; the result keeps the
// space of xi with copy k emptied
GrassmannElement berezin_integral(const BasisProjection& P, int copy, const GrassmannElement& xi);
// all copies; returns the remaining scalar
cplx berezin_integral_all(const BasisProjection& P, const GrassmannElement& xi);

// Global sign convention: the integral of the top monomial f_0 ^ f_1 ^ ... ^ f_{2m-1} of one copy,
// taken over its reference projection.
constexpr int berezin_top_sign(int m) { return ((m * (m + 1) / 2) % 2) ? -1 : 1; }

GrassmannElement grassmann_exp(const GrassmannElement& xi);

// <H^(k), H H^(l)> = sum_ij <f_i, H f_j> (A f_j)^(k) ^ f_i^(l)
GrassmannElement bilinear_grassmann(const GrassmannSpace& sp, const Mat& H, int k = 0, int l = 0);
// same on the copied space, X acting on (C^{2m})^{copies} block-wise
GrassmannElement bilinear_grassmann_extended(const GrassmannSpace& sp, const Mat& X);
// <h_P^(k), h_P^(l)> = sum_j (A psi_j)^(k) ^ psi_j^(l)
GrassmannElement pairing(const GrassmannSpace& sp, int k, int l);

// Generic relabel: slot s of xi goes to map(s) in target (must be injective).
GrassmannElement relabel(const GrassmannElement& xi, const GrassmannSpace& target,
                         const std::function<int(int)>& map);
// kappa^{(k,l)}_{(0,0)} of a single-copy element: A-directions to copy k, psi-directions to l
GrassmannElement split_place(const GrassmannElement& xi, const GrassmannSpace& target, int k, int l);
inline GrassmannElement place(const GrassmannElement& xi, const GrassmannSpace& target, int k) {
  return split_place(xi, target, k, k);
}
// Re-expand xi in the generators of another reference projection on the same base space.
GrassmannElement rebase(const GrassmannElement& xi, const GrassmannSpace& target);

// Extended-space helpers: block-diagonal frame and involution on (C^{2m})^{copies}.
Mat extended_frame(const GrassmannSpace& sp);
Mat extended_flip(const SelfDualSpace& base, int copies, const Mat& X);
Mat extend_blockwise(const Mat& X, int copies);

// det(C_P/2) * int_P exp(<H,C^-1 H>/2) ^ xi, literal Berezin evaluation
cplx gaussian_integral(const Mat& C, const GrassmannElement& xi);
// G_st = <A g_s, C g_t> over all generator slots
Mat wick_matrix(const GrassmannSpace& sp, const Mat& C);
// sum over monomials of coeff * Pf(G[mask])
cplx gaussian_integral_wick(const Mat& C, const GrassmannElement& xi);
// Pf[<A phi_k, C phi_l>] for copy-tagged vectors of the base space
cplx gaussian_moment_pfaffian(const SelfDualSpace& base, const Mat& C,
                              const std::vector<std::pair<int, Vec>>& phis);

// Canonical isomorphism between the Fock representation and the single-copy algebra.
GrassmannElement kappa(const FockRep& rep, const Mat& A);
Mat kappa_inv(const FockRep& rep, const GrassmannElement& xi);

GrassmannElement circle_product(const BasisProjection& P, const GrassmannElement& a,
                                const GrassmannElement& b);
GrassmannElement circle_product_literal(const BasisProjection& P, const GrassmannElement& a,
                                        const GrassmannElement& b);

// (1/N!) sum_pi (-1)^pi phi_pi(1) o ... o phi_pi(N), computed by brute force
GrassmannElement antisymmetrized_circle(const BasisProjection& P, const GrassmannSpace& sp,
                                        const std::vector<Vec>& phis);
// Pfaffian-weighted wedge expansion of the same quantity
GrassmannElement antisymmetrized_circle_expansion(const BasisProjection& P,
                                                  const GrassmannSpace& sp,
                                                  const std::vector<Vec>& phis);

GrassmannElement star_involution(const GrassmannElement& xi);

// [kappa^-1(exp(kappa(A)/n))]^n
Mat chernoff_approx(const FockRep& rep, const Mat& A, int n);

}  // namespace fermi
