#include "fermi/grassmann.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "fermi/numkernel.hpp"

namespace fermi {

using numkernel::max_abs;

namespace {

inline int parity(Mask m) { return std::popcount(m) & 1; }
inline Mask bit(int s) { return Mask(1) << s; }

// Working storage for products: flat array for small D when the product is dense enough,
// hash map otherwise.
class Accum {
public:
  Accum(int D, std::size_t expected) {
    const std::size_t full = std::size_t(1) << D;
    dense_ = D <= kDenseGenerators && expected * 16 >= full;
    if (dense_)
      arr_.assign(full, cplx(0));
    else
      map_.reserve(std::min<std::size_t>(expected, full));
  }
  void add(Mask m, cplx c) {
    if (dense_)
      arr_[m] += c;
    else
      map_[m] += c;
  }
  std::vector<Term> finish() {
    std::vector<Term> out;
    if (dense_) {
      for (std::size_t m = 0; m < arr_.size(); ++m)
        if (std::abs(arr_[m]) > kPruneTol) out.push_back({static_cast<Mask>(m), arr_[m]});
    } else {
      out.reserve(map_.size());
      for (const auto& [m, c] : map_)
        if (std::abs(c) > kPruneTol) out.push_back({m, c});
      std::sort(out.begin(), out.end(), [](const Term& a, const Term& b) { return a.mask < b.mask; });
    }
    return out;
  }

private:
  bool dense_ = false;
  std::vector<cplx> arr_;
  std::unordered_map<Mask, cplx> map_;
};

// sign of sorting `slots` ascending (slots distinct)
int sort_sign(std::vector<int>& slots) {
  int inv = 0;
  for (std::size_t i = 1; i < slots.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) inv += slots[j] > slots[i];
  std::sort(slots.begin(), slots.end());
  return (inv & 1) ? -1 : 1;
}

std::vector<int> slots_of(Mask m) {
  std::vector<int> s;
  while (m) {
    s.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return s;
}

bool same_projection(const BasisProjection& a, const BasisProjection& b) {
  return a.space().same_as(b.space(), 1e-14) && a.half() == b.half() &&
         max_abs(a.range_basis() - b.range_basis()) <= 1e-14;
}

void require_same(const GrassmannSpace& a, const GrassmannSpace& b, const char* what) {
  require(a.same_as(b), Errc::SpaceMismatch, what);
}

}  // namespace

GrassmannSpace::GrassmannSpace(BasisProjection reference, int copies) {
  require(copies >= 1, Errc::InvalidInput, "Grassmann space needs at least one copy");
  const int D = copies * 2 * reference.half();
  require(D <= kMaxGenerators, Errc::CapacityExceeded,
          "Grassmann space with " + std::to_string(D) + " generators exceeds the cap of " +
              std::to_string(kMaxGenerators));
  Mat F = reference.frame();
  data_ = std::make_shared<const Data>(Data{std::move(reference), std::move(F), copies});
}

bool GrassmannSpace::same_as(const GrassmannSpace& o) const {
  if (data_ == o.data_) return true;
  return copies() == o.copies() && same_projection(reference(), o.reference());
}

int wedge_sign(Mask A, Mask B) {
  int s = 0;
  while (B) {
    const int j = std::countr_zero(B);
    s += std::popcount(static_cast<std::uint64_t>(A) >> (j + 1));
    B &= B - 1;
  }
  return (s & 1) ? -1 : 1;
}

GrassmannElement::GrassmannElement(GrassmannSpace space, const std::vector<Term>& terms)
    : space_(std::move(space)) {
  bool canonical = true;
  for (std::size_t i = 0; i < terms.size() && canonical; ++i)
    canonical = std::abs(terms[i].coeff) > kPruneTol && (i == 0 || terms[i - 1].mask < terms[i].mask);
  if (canonical) {
    terms_ = terms;
    return;
  }
  Accum acc(space_.generators(), terms.size());
  for (const auto& t : terms) acc.add(t.mask, t.coeff);
  terms_ = acc.finish();
}

GrassmannElement GrassmannElement::scalar(const GrassmannSpace& sp, cplx c) {
  return GrassmannElement(sp, {{0, c}});
}

GrassmannElement GrassmannElement::generator(const GrassmannSpace& sp, int slot, cplx c) {
  require(slot >= 0 && slot < sp.generators(), Errc::InvalidInput, "generator slot out of range");
  return GrassmannElement(sp, {{bit(slot), c}});
}

GrassmannElement GrassmannElement::vector(const GrassmannSpace& sp, int copy, const Vec& phi) {
  require(phi.size() == sp.base_dim(), Errc::ShapeMismatch, "vector size does not match the space");
  require(copy >= 0 && copy < sp.copies(), Errc::InvalidInput, "copy index out of range");
  const Vec c = sp.frame().adjoint() * phi;
  std::vector<Term> t;
  for (int i = 0; i < sp.base_dim(); ++i) t.push_back({bit(sp.slot(copy, i)), c(i)});
  return GrassmannElement(sp, t);
}

cplx GrassmannElement::coeff(Mask m) const {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), m,
                             [](const Term& t, Mask v) { return t.mask < v; });
  return (it != terms_.end() && it->mask == m) ? it->coeff : cplx(0);
}

bool GrassmannElement::is_even() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return !parity(t.mask); });
}

double GrassmannElement::max_abs_coeff() const {
  double r = 0;
  for (const auto& t : terms_) r = std::max(r, std::abs(t.coeff));
  return r;
}

int GrassmannElement::max_degree() const {
  int d = -1;
  for (const auto& t : terms_) d = std::max(d, std::popcount(t.mask));
  return d;
}

GrassmannElement& GrassmannElement::operator+=(const GrassmannElement& o) {
  require_same(space_, o.space_, "sum of elements from different spaces");
  std::vector<Term> merged;
  merged.reserve(terms_.size() + o.terms_.size());
  auto a = terms_.cbegin(), b = o.terms_.cbegin();
  while (a != terms_.cend() || b != o.terms_.cend()) {
    Term t;
    if (b == o.terms_.cend() || (a != terms_.cend() && a->mask < b->mask)) {
      t = *a++;
    } else if (a == terms_.cend() || b->mask < a->mask) {
      t = *b++;
    } else {
      t = {a->mask, a->coeff + b->coeff};
      ++a;
      ++b;
    }
    if (std::abs(t.coeff) > kPruneTol) merged.push_back(t);
  }
  terms_ = std::move(merged);
  return *this;
}

GrassmannElement& GrassmannElement::operator-=(const GrassmannElement& o) { return *this += -o; }

GrassmannElement& GrassmannElement::operator*=(cplx c) {
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_)
    if (std::abs(t.coeff * c) > kPruneTol) out.push_back({t.mask, t.coeff * c});
  terms_ = std::move(out);
  return *this;
}

double max_abs_diff(const GrassmannElement& a, const GrassmannElement& b) {
  return (a - b).max_abs_coeff();
}

GrassmannElement wedge(const GrassmannElement& a, const GrassmannElement& b) {
  require_same(a.space(), b.space(), "wedge of elements from different spaces");
  Accum acc(a.space().generators(), a.terms().size() * b.terms().size());
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms()) {
      if (ta.mask & tb.mask) continue;
      acc.add(ta.mask | tb.mask, double(wedge_sign(ta.mask, tb.mask)) * ta.coeff * tb.coeff);
    }
  return GrassmannElement(a.space(), acc.finish());
}

GrassmannElement slot_derivative(int slot, const GrassmannElement& xi) {
  const Mask b = bit(slot);
  std::vector<Term> out;
  for (const auto& t : xi.terms()) {
    if (!(t.mask & b)) continue;
    const double sg = parity(t.mask & (b - 1)) ? -1.0 : 1.0;
    out.push_back({t.mask ^ b, sg * t.coeff});
  }
  return GrassmannElement(xi.space(), out);
}

GrassmannElement berezin_derivative(int copy, const Vec& phi, const GrassmannElement& xi) {
  const GrassmannSpace& sp = xi.space();
  require(phi.size() == sp.base_dim(), Errc::ShapeMismatch, "derivative direction size");
  require(copy >= 0 && copy < sp.copies(), Errc::SpaceMismatch, "copy index out of range");
  const Vec c = sp.frame().adjoint() * phi;
  std::vector<Term> out;
  for (int i = 0; i < sp.base_dim(); ++i) {
    if (std::abs(c(i)) == 0.0) continue;
    const Mask b = bit(sp.slot(copy, i));
    for (const auto& t : xi.terms()) {
      if (!(t.mask & b)) continue;
      const double sg = parity(t.mask & (b - 1)) ? -1.0 : 1.0;
      out.push_back({t.mask ^ b, sg * std::conj(c(i)) * t.coeff});
    }
  }
  return GrassmannElement(sp, out);
}

GrassmannElement berezin_integral(const BasisProjection& P, int copy, const GrassmannElement& xi) {
  const GrassmannSpace& sp = xi.space();
  require(P.space().same_as(sp.reference().space()), Errc::SpaceMismatch,
          "integration projection lives on another space");
  require(copy >= 0 && copy < sp.copies(), Errc::SpaceMismatch, "copy index out of range");
  const int m = sp.half();
  if (same_projection(P, sp.reference())) {
    const Mask cm = sp.copy_mask(copy);
    std::vector<Term> out;
    for (const auto& t : xi.terms()) {
      if ((t.mask & cm) != cm) continue;
      Mask mask = t.mask;
      int s = 0;
      for (int i = m - 1; i >= 0; --i) {
        for (int slot : {sp.slot(copy, m + i), sp.slot(copy, i)}) {
          s += parity(mask & (bit(slot) - 1));
          mask ^= bit(slot);
        }
      }
      out.push_back({mask, (s & 1) ? -t.coeff : t.coeff});
    }
    return GrassmannElement(sp, out);
  }
  GrassmannElement r = xi;
  const Mat& psi = P.range_basis();
  for (int i = m - 1; i >= 0; --i) {
    r = berezin_derivative(copy, P.space().involve(psi.col(i)), r);
    r = berezin_derivative(copy, psi.col(i), r);
  }
  return r;
}

cplx berezin_integral_all(const BasisProjection& P, const GrassmannElement& xi) {
  GrassmannElement r = xi;
  for (int k = 0; k < xi.space().copies(); ++k) r = berezin_integral(P, k, r);
  return r.scalar_part();
}

GrassmannElement grassmann_exp(const GrassmannElement& xi) {
  const GrassmannSpace& sp = xi.space();
  const cplx c0 = xi.scalar_part();
  GrassmannElement x = xi - GrassmannElement::scalar(sp, c0);
  GrassmannElement result = GrassmannElement::scalar(sp, 1.0);
  GrassmannElement term = result;
  for (int k = 1; k <= sp.generators() + 1; ++k) {
    term = wedge(term, x) * cplx(1.0 / k);
    if (term.is_zero()) break;
    result += term;
  }
  return result * std::exp(c0);
}

GrassmannElement bilinear_grassmann(const GrassmannSpace& sp, const Mat& H, int k, int l) {
  require(H.rows() == sp.base_dim() && H.cols() == sp.base_dim(), Errc::ShapeMismatch,
          "bilinear_grassmann: H shape");
  require(k >= 0 && k < sp.copies() && l >= 0 && l < sp.copies(), Errc::SpaceMismatch,
          "bilinear_grassmann: copy index");
  const Mat Hf = sp.frame().adjoint() * H * sp.frame();
  std::vector<Term> out;
  for (int i = 0; i < sp.base_dim(); ++i)
    for (int j = 0; j < sp.base_dim(); ++j) {
      const int a = sp.partner(sp.slot(k, j)), b = sp.slot(l, i);
      if (a == b || Hf(i, j) == cplx(0)) continue;
      out.push_back({bit(a) | bit(b), a < b ? Hf(i, j) : -Hf(i, j)});
    }
  return GrassmannElement(sp, out);
}

GrassmannElement bilinear_grassmann_extended(const GrassmannSpace& sp, const Mat& X) {
  const int D = sp.generators();
  require(X.rows() == D && X.cols() == D, Errc::ShapeMismatch, "bilinear_grassmann: X shape");
  const Mat Fh = extended_frame(sp);
  const Mat Xf = Fh.adjoint() * X * Fh;
  std::vector<Term> out;
  for (int s = 0; s < D; ++s)
    for (int t = 0; t < D; ++t) {
      const int a = sp.partner(t);
      if (a == s || Xf(s, t) == cplx(0)) continue;
      out.push_back({bit(a) | bit(s), a < s ? Xf(s, t) : -Xf(s, t)});
    }
  return GrassmannElement(sp, out);
}

GrassmannElement pairing(const GrassmannSpace& sp, int k, int l) {
  return bilinear_grassmann(sp, sp.reference().P(), k, l);
}

GrassmannElement relabel(const GrassmannElement& xi, const GrassmannSpace& target,
                         const std::function<int(int)>& map) {
  std::vector<Term> out;
  out.reserve(xi.terms().size());
  for (const auto& t : xi.terms()) {
    std::vector<int> img;
    for (int s : slots_of(t.mask)) img.push_back(map(s));
    const int sg = sort_sign(img);
    Mask m = 0;
    for (int s : img) {
      require(s >= 0 && s < target.generators() && !(m & bit(s)), Errc::InvalidInput,
              "relabel map is not injective into the target");
      m |= bit(s);
    }
    out.push_back({m, double(sg) * t.coeff});
  }
  return GrassmannElement(target, out);
}

GrassmannElement split_place(const GrassmannElement& xi, const GrassmannSpace& target, int k, int l) {
  const GrassmannSpace& sp = xi.space();
  require(sp.copies() == 1, Errc::SpaceMismatch, "split_place needs a single-copy element");
  require(same_projection(sp.reference(), target.reference()), Errc::SpaceMismatch,
          "split_place: target has another reference projection");
  const int m = sp.half();
  return relabel(xi, target, [&](int s) { return s < m ? target.slot(l, s) : target.slot(k, s); });
}

GrassmannElement rebase(const GrassmannElement& xi, const GrassmannSpace& target) {
  const GrassmannSpace& sp = xi.space();
  require(sp.copies() == target.copies() &&
              sp.reference().space().same_as(target.reference().space()),
          Errc::SpaceMismatch, "rebase needs the same base space and copy count");
  if (sp.same_as(target)) return GrassmannElement(target, xi.terms());
  const Mat T = target.frame().adjoint() * sp.frame();
  std::vector<GrassmannElement> img;
  for (int s = 0; s < sp.generators(); ++s) {
    const int c = sp.copy_of(s), i = sp.dir_of(s);
    std::vector<Term> t;
    for (int j = 0; j < sp.base_dim(); ++j) t.push_back({bit(target.slot(c, j)), T(j, i)});
    img.emplace_back(target, t);
  }
  GrassmannElement out(target);
  for (const auto& t : xi.terms()) {
    GrassmannElement mono = GrassmannElement::scalar(target, t.coeff);
    for (int s : slots_of(t.mask)) mono = wedge(mono, img[s]);
    out += mono;
  }
  return out;
}

Mat extend_blockwise(const Mat& X, int copies) {
  const Eigen::Index b = X.rows();
  Mat E = Mat::Zero(b * copies, X.cols() * copies);
  for (int k = 0; k < copies; ++k) E.block(k * b, k * X.cols(), b, X.cols()) = X;
  return E;
}

Mat extended_frame(const GrassmannSpace& sp) { return extend_blockwise(sp.frame(), sp.copies()); }

Mat extended_flip(const SelfDualSpace& base, int copies, const Mat& X) {
  const Mat Jh = extend_blockwise(base.J(), copies);
  return Jh * X.conjugate() * Jh.conjugate();
}

namespace {

void require_covariance_shape(const GrassmannSpace& sp, const Mat& C) {
  require(C.rows() == sp.generators() && C.cols() == sp.generators(), Errc::ShapeMismatch,
          "covariance shape does not match the Grassmann space");
}

}  // namespace

cplx gaussian_integral(const Mat& C, const GrassmannElement& xi) {
  const GrassmannSpace& sp = xi.space();
  require_covariance_shape(sp, C);
  const Mat Ph = extend_blockwise(sp.reference().P(), sp.copies());
  const Mat I = Mat::Identity(C.rows(), C.cols());
  require(max_abs(Ph * C * (I - Ph)) <= 1e-9 * std::max(1.0, max_abs(C)), Errc::NotDiagonalized,
          "the reference projection does not diagonalize the covariance");
  Mat Cinv;
  try {
    Cinv = numkernel::matrix_inverse(C);
  } catch (const Error&) {
    throw Error(Errc::SingularCovariance, "covariance is not invertible");
  }
  const GrassmannElement E = grassmann_exp(bilinear_grassmann_extended(sp, Cinv) * cplx(0.5));
  const Mat psi = extend_blockwise(sp.reference().range_basis(), sp.copies());
  const cplx norm = numkernel::determinant(Mat(psi.adjoint() * C * psi));
  return norm * berezin_integral_all(sp.reference(), wedge(E, xi));
}

Mat wick_matrix(const GrassmannSpace& sp, const Mat& C) {
  require_covariance_shape(sp, C);
  const Mat Fh = extended_frame(sp);
  const Mat Cf = Fh.adjoint() * C * Fh;
  const int D = sp.generators();
  Mat G(D, D);
  for (int s = 0; s < D; ++s)
    for (int t = 0; t < D; ++t) G(s, t) = Cf(sp.partner(s), t);
  require(max_abs(G + G.transpose()) <= 1e-9 * std::max(1.0, max_abs(G)), Errc::NotSkewSymmetric,
          "moment matrix is not skew; covariance is not self-dual");
  return 0.5 * (G - G.transpose());
}

cplx gaussian_integral_wick(const Mat& C, const GrassmannElement& xi) {
  const Mat G = wick_matrix(xi.space(), C);
  cplx acc = 0;
  for (const auto& t : xi.terms()) {
    if (parity(t.mask)) continue;
    if (t.mask == 0) {
      acc += t.coeff;
      continue;
    }
    const auto s = slots_of(t.mask);
    const Eigen::Index k = static_cast<Eigen::Index>(s.size());
    Mat sub(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) sub(i, j) = G(s[i], s[j]);
    acc += t.coeff * numkernel::pfaffian(sub);
  }
  return acc;
}

cplx gaussian_moment_pfaffian(const SelfDualSpace& base, const Mat& C,
                              const std::vector<std::pair<int, Vec>>& phis) {
  const int b = base.dim();
  require(C.rows() == C.cols() && C.rows() % b == 0, Errc::ShapeMismatch, "covariance shape");
  const int copies = static_cast<int>(C.rows() / b);
  const Eigen::Index N = static_cast<Eigen::Index>(phis.size());
  require(N % 2 == 0, Errc::OddOrder, "odd number of vectors");
  Mat V = Mat::Zero(C.rows(), N), AV = Mat::Zero(C.rows(), N);
  for (Eigen::Index q = 0; q < N; ++q) {
    const auto& [k, phi] = phis[q];
    require(k >= 0 && k < copies && phi.size() == b, Errc::ShapeMismatch, "copy-tagged vector");
    V.block(k * b, q, b, 1) = phi;
    AV.block(k * b, q, b, 1) = base.involve(phi);
  }
  const Mat M = AV.adjoint() * C * V;
  require(max_abs(M + M.transpose()) <= 1e-9 * std::max(1.0, max_abs(M)), Errc::NotSkewSymmetric,
          "moment matrix is not skew");
  return numkernel::pfaffian(Mat(0.5 * (M - M.transpose())));
}

namespace {

// mode i sits at bit (m - 1 - i) of a Fock basis index
inline unsigned mode_bit(int m, int i) { return 1u << (m - 1 - i); }

// a_I a*_J |s>, operators applied right to left; returns false if annihilated
bool apply_normal(int m, const std::vector<int>& I, const std::vector<int>& J, unsigned& s,
                  int& sign) {
  auto apply = [&](int i, bool create) {
    const unsigned b = mode_bit(m, i);
    if (bool(s & b) == create) return false;
    const unsigned higher = ~((b << 1) - 1);
    if (std::popcount(s & higher) & 1) sign = -sign;
    s ^= b;
    return true;
  };
  for (auto it = J.rbegin(); it != J.rend(); ++it)
    if (!apply(*it, true)) return false;
  for (auto it = I.rbegin(); it != I.rend(); ++it)
    if (!apply(*it, false)) return false;
  return true;
}

GrassmannSpace fock_space_of(const FockRep& rep) { return GrassmannSpace(rep.projection(), 1); }

}  // namespace

GrassmannElement kappa(const FockRep& rep, const Mat& A) {
  const int m = rep.modes();
  const Eigen::Index N = rep.fock_dim();
  require(A.rows() == N && A.cols() == N, Errc::ShapeMismatch, "kappa: operator shape");
  const GrassmannSpace sp = fock_space_of(rep);
  Accum acc(2 * m, std::size_t(N) * std::size_t(N));
  for (Eigen::Index col = 0; col < N; ++col)
    for (Eigen::Index row = 0; row < N; ++row) {
      const cplx v = A(row, col);
      if (std::abs(v) <= kPruneTol) continue;
      // |n><n'| = sign0 * X_0 ... X_{m-1}, X_i in {a a*, a, a*, a* a}
      std::vector<int> type(m);
      int sign0 = 0, odd_above = 0;
      for (int i = m - 1; i >= 0; --i) {
        const int ni = (row & mode_bit(m, i)) ? 1 : 0, npi = (col & mode_bit(m, i)) ? 1 : 0;
        type[i] = 2 * ni + npi;
        sign0 += npi * odd_above;
        odd_above += (ni != npi);
      }
      std::vector<int> e11;
      for (int i = 0; i < m; ++i)
        if (type[i] == 3) e11.push_back(i);
      const unsigned nsub = 1u << e11.size();
      for (unsigned sub = 0; sub < nsub; ++sub) {
        // modes in e11 with the sub bit set contribute -a a*, others contribute 1
        Mask Imask = 0, Jmask = 0;
        int sg = sign0 + std::popcount(sub);
        for (int i = 0; i < m; ++i) {
          const int t = type[i];
          if (t == 0) Imask |= bit(i), Jmask |= bit(i);
          else if (t == 1) Imask |= bit(i);
          else if (t == 2) Jmask |= bit(i);
        }
        for (std::size_t q = 0; q < e11.size(); ++q)
          if (sub & (1u << q)) Imask |= bit(e11[q]), Jmask |= bit(e11[q]);
        // normal ordering: creators j passing annihilators i with j < i
        for (Mask jm = Jmask; jm; jm &= jm - 1) {
          const int j = std::countr_zero(jm);
          sg += std::popcount(Imask >> (j + 1));
        }
        sg += std::popcount(Imask) * std::popcount(Jmask);
        acc.add(Jmask | (Imask << m), (sg & 1) ? -v : v);
      }
    }
  return GrassmannElement(sp, acc.finish());
}

Mat kappa_inv(const FockRep& rep, const GrassmannElement& xi) {
  const int m = rep.modes();
  require(xi.space().same_as(fock_space_of(rep)), Errc::SpaceMismatch,
          "kappa_inv: element is not over the representation's projection");
  const Eigen::Index N = rep.fock_dim();
  Mat A = Mat::Zero(N, N);
  for (const auto& t : xi.terms()) {
    std::vector<int> I, J;
    for (int i = 0; i < m; ++i) {
      if (t.mask & bit(i)) J.push_back(i);
      if (t.mask & bit(m + i)) I.push_back(i);
    }
    const cplx c = ((I.size() * J.size()) & 1) ? -t.coeff : t.coeff;
    for (Eigen::Index s0 = 0; s0 < N; ++s0) {
      unsigned s = static_cast<unsigned>(s0);
      int sign = 1;
      if (apply_normal(m, I, J, s, sign)) A(s, s0) += double(sign) * c;
    }
  }
  return A;
}

namespace {

void require_single_copy(const GrassmannElement& a, const GrassmannElement& b) {
  require(a.space().copies() == 1 && b.space().copies() == 1, Errc::SpaceMismatch,
          "circle product needs single-copy elements");
  require_same(a.space(), b.space(), "circle product of elements from different spaces");
}

}  // namespace

GrassmannElement circle_product(const BasisProjection& P, const GrassmannElement& a,
                                const GrassmannElement& b) {
  require_single_copy(a, b);
  if (!same_projection(P, a.space().reference())) {
    const GrassmannSpace sp(P, 1);
    return rebase(circle_product(P, rebase(a, sp), rebase(b, sp)), a.space());
  }
  const FockRep rep(P);
  return kappa(rep, kappa_inv(rep, a) * kappa_inv(rep, b));
}

GrassmannElement circle_product_literal(const BasisProjection& P, const GrassmannElement& a,
                                        const GrassmannElement& b) {
  require_single_copy(a, b);
  if (!same_projection(P, a.space().reference())) {
    const GrassmannSpace sp(P, 1);
    return rebase(circle_product_literal(P, rebase(a, sp), rebase(b, sp)), a.space());
  }
  const GrassmannSpace sp2 = a.space().with_copies(2);
  GrassmannElement x = wedge(split_place(a, sp2, 0, 1), split_place(b, sp2, 1, 0));
  x = wedge(x, grassmann_exp(-pairing(sp2, 0, 0)));
  x = wedge(x, grassmann_exp(pairing(sp2, 0, 1)));
  x = wedge(x, grassmann_exp(-pairing(sp2, 1, 1)));
  x = wedge(x, grassmann_exp(pairing(sp2, 1, 0)));
  x = berezin_integral(P, 1, x);
  if (a.space().half() & 1) x = -x;
  return relabel(x, a.space(), [](int s) { return s; });
}

GrassmannElement antisymmetrized_circle(const BasisProjection& P, const GrassmannSpace& sp,
                                        const std::vector<Vec>& phis) {
  const int N = static_cast<int>(phis.size());
  require(N >= 2, Errc::InvalidInput, "antisymmetrized circle product needs N >= 2");
  std::vector<GrassmannElement> el;
  for (const auto& phi : phis) el.push_back(GrassmannElement::vector(sp, 0, phi));
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  GrassmannElement acc(sp);
  double nfact = 0;
  do {
    std::vector<int> p = perm;
    const int sg = sort_sign(p);
    GrassmannElement prod = el[perm[0]];
    for (int q = 1; q < N; ++q) prod = circle_product(P, prod, el[perm[q]]);
    acc += prod * cplx(sg);
    nfact += 1;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc * cplx(1.0 / nfact);
}

GrassmannElement antisymmetrized_circle_expansion(const BasisProjection& P,
                                                  const GrassmannSpace& sp,
                                                  const std::vector<Vec>& phis) {
  const int N = static_cast<int>(phis.size());
  require(N >= 2, Errc::InvalidInput, "antisymmetrized circle product needs N >= 2");
  const SelfDualSpace& base = P.space();
  const Mat X = 0.5 * (P.perp() - P.P());
  Mat K(N, N);
  for (int k = 0; k < N; ++k)
    for (int l = 0; l < N; ++l) K(k, l) = base.involve(phis[k]).dot(X * phis[l]);
  K = (0.5 * (K - K.transpose())).eval();
  GrassmannElement acc(sp);
  for (unsigned sub = 0; sub < (1u << N); ++sub) {
    if (std::popcount(sub) & 1) continue;
    std::vector<int> in, out;
    int inv = 0;
    for (int q = 0; q < N; ++q) {
      if (sub & (1u << q)) {
        in.push_back(q);
        inv += static_cast<int>(out.size());
      } else {
        out.push_back(q);
      }
    }
    const Eigen::Index k = static_cast<Eigen::Index>(in.size());
    Mat Ks(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) Ks(i, j) = K(in[i], in[j]);
    cplx w = numkernel::pfaffian(Ks) * ((inv & 1) ? -1.0 : 1.0);
    GrassmannElement term = GrassmannElement::scalar(sp, w);
    for (int q : out) term = wedge(term, GrassmannElement::vector(sp, 0, phis[q]));
    acc += term;
  }
  return acc;
}

GrassmannElement star_involution(const GrassmannElement& xi) {
  const GrassmannSpace& sp = xi.space();
  std::vector<Term> out;
  out.reserve(xi.terms().size());
  for (const auto& t : xi.terms()) {
    auto s = slots_of(t.mask);
    std::vector<int> img;
    for (auto it = s.rbegin(); it != s.rend(); ++it) img.push_back(sp.partner(*it));
    const int sg = sort_sign(img);
    Mask m = 0;
    for (int q : img) m |= bit(q);
    out.push_back({m, double(sg) * std::conj(t.coeff)});
  }
  return GrassmannElement(sp, out);
}

Mat chernoff_approx(const FockRep& rep, const Mat& A, int n) {
  require(n >= 1, Errc::InvalidInput, "Chernoff approximation needs n >= 1");
  const Mat X = kappa_inv(rep, grassmann_exp(kappa(rep, A) * cplx(1.0 / n)));
  Mat R = rep.identity();
  for (int k = 0; k < n; ++k) R = R * X;
  return R;
}

}  // namespace fermi
