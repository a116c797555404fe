#include "fermi/genfunc.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "fermi/numkernel.hpp"

namespace fermi {

using numkernel::max_abs;

namespace {

using Mask64 = std::uint64_t;

void require_diagonalized(const SelfDualOperator& H, const BasisProjection& P) {
  require(H.hamiltonian(), Errc::NotHermitian, "feynman-kac needs a self-dual Hamiltonian");
  require(P.space().same_as(H.space()), Errc::SpaceMismatch, "P and H live on different spaces");
  require(diagonalization_residual(H.H(), P) <= 1e-9 * std::max(1.0, max_abs(H.H())),
          Errc::NotDiagonalized, "the projection does not diagonalize H");
}

void require_inputs(const FockRep& rep, const Mat& W, const Mat& K) {
  require(is_even(rep, W), Errc::ParityViolation, "W is not even");
  require_even_selfadjoint(rep, K, "K");
}

// exp(-beta/n kappa(W)) and exp(beta s/n kappa(K)) on one copy
struct StepFactors {
  GrassmannElement w;
  GrassmannElement k;
};

StepFactors step_factors(const FockRep& rep, const Mat& W, const Mat& K, double beta, double s,
                         int n) {
  return {grassmann_exp(kappa(rep, W) * cplx(-beta / n)),
          grassmann_exp(kappa(rep, K) * cplx(beta * s / n))};
}

cplx rhs_literal(const SelfDualOperator& H, const FockRep& rep, const StepFactors& f,
                 const TimeGrid& grid) {
  const BasisProjection& P = rep.projection();
  const GrassmannSpace sp(P, grid.n_beta);
  GrassmannElement xi = GrassmannElement::scalar(sp, 1.0);
  for (int k = 0; k < grid.n_beta; ++k) xi = wedge(xi, place(k < grid.n ? f.w : f.k, sp, k));
  return gaussian_integral(covariance_direct(H, P, grid).matrix(), xi);
}

cplx rhs_wick(const SelfDualOperator& H, const FockRep& rep, const StepFactors& f,
              const TimeGrid& grid) {
  const BasisProjection& P = rep.projection();
  const int b = P.space().dim(), m = P.half(), D = grid.n_beta * b;
  require(D <= kWickMaxGenerators, Errc::CapacityExceeded,
          "Wick path limited to " + std::to_string(kWickMaxGenerators) + " generators, need " +
              std::to_string(D));
  const Mat C = covariance_direct(H, P, grid).matrix();
  const Mat Fh = extend_blockwise(P.frame(), grid.n_beta);
  const Mat Cf = Fh.adjoint() * C * Fh;
  const auto partner = [&](int s) {
    const int d = s % b;
    return s - d + (d < m ? d + m : d - m);
  };
  Mat G(D, D);
  for (int s = 0; s < D; ++s)
    for (int t = 0; t < D; ++t) G(s, t) = Cf(partner(s), t);
  require(max_abs(G + G.transpose()) <= 1e-9 * std::max(1.0, max_abs(G)), Errc::NotSkewSymmetric,
          "moment matrix is not skew");
  G = (0.5 * (G - G.transpose())).eval();

  // copies occupy increasing slot ranges, so concatenating per-copy monomials carries no sign
  std::vector<std::pair<Mask64, cplx>> terms{{0, 1.0}};
  for (int k = 0; k < grid.n_beta; ++k) {
    const GrassmannElement& e = k < grid.n ? f.w : f.k;
    require(terms.size() * e.terms().size() <= kWickMaxTerms, Errc::CapacityExceeded,
            "Wick expansion exceeds " + std::to_string(kWickMaxTerms) + " monomials");
    std::vector<std::pair<Mask64, cplx>> next;
    next.reserve(terms.size() * e.terms().size());
    for (const auto& [mask, c] : terms)
      for (const auto& t : e.terms())
        next.emplace_back(mask | (Mask64(t.mask) << (k * b)), c * t.coeff);
    terms = std::move(next);
  }
  cplx acc = 0;
  std::vector<int> slots;
  for (const auto& [mask, c] : terms) {
    if (std::popcount(mask) & 1) continue;
    slots.clear();
    for (int s = 0; s < D; ++s)
      if (mask >> s & 1) slots.push_back(s);
    const Eigen::Index q = static_cast<Eigen::Index>(slots.size());
    Mat sub(q, q);
    for (Eigen::Index i = 0; i < q; ++i)
      for (Eigen::Index j = 0; j < q; ++j) sub(i, j) = G(slots[i], slots[j]);
    acc += c * numkernel::pfaffian(sub);
  }
  return acc;
}

// The integrand exp(1/2 <H, B H>) ^ prod_k E_k factorizes over the ring of copies because B is
// block tridiagonal with a corner coupling (0, n_beta - 1). Copies enter one at a time into three
// working slots: copy 0 stays resident, the others are integrated as soon as all factors touching
// them are present.
cplx rhs_ring(const SelfDualOperator& H, const FockRep& rep, const StepFactors& f,
              const TimeGrid& grid) {
  const BasisProjection& P = rep.projection();
  const int b = P.space().dim(), nb = grid.n_beta;
  const GrassmannSpace ws(P, 3);
  const Mat B = inverse_covariance(H, P, grid);
  const auto block = [&](int x, int y) { return B.block(x * b, y * b, b, b); };
  const double scale = std::max(1.0, max_abs(B));
  // 1/2 <H^(x), B[x,y] H^(y)> with copy x in working slot wx and y in wy
  const auto piece = [&](int x, int y, int wx, int wy) {
    const Mat X = block(x, y);
    if (max_abs(X) <= 1e-300 * scale) return GrassmannElement(ws);
    return bilinear_grassmann(ws, X, wy, wx) * cplx(0.5);
  };
  const auto factor = [&](int copy) { return copy < grid.n ? f.w : f.k; };

  std::vector<int> slot_of(nb, -1);
  slot_of[0] = 0;
  GrassmannElement acc = wedge(grassmann_exp(piece(0, 0, 0, 0)), place(factor(0), ws, 0));
  const auto couple = [&](int x, int y) {
    if (x == y) return;
    const GrassmannElement e = piece(x, y, slot_of[x], slot_of[y]) + piece(y, x, slot_of[y], slot_of[x]);
    if (!e.is_zero()) acc = wedge(acc, grassmann_exp(e));
  };
  for (int x = nb - 1; x >= 1; --x) {
    const int w = (x % 2 == 1) ? 1 : 2;
    slot_of[x] = w;
    acc = wedge(acc, grassmann_exp(piece(x, x, w, w)));
    acc = wedge(acc, place(factor(x), ws, w));
    couple(x, 0);
    if (x + 1 < nb) {
      couple(x, x + 1);
      acc = berezin_integral(P, slot_of[x + 1], acc);
    }
  }
  if (nb > 1) acc = berezin_integral(P, slot_of[1], acc);
  acc = berezin_integral(P, 0, acc);
  const Mat psi = extend_blockwise(P.range_basis(), nb);
  const cplx det = numkernel::determinant(Mat(psi.adjoint() * B * psi));
  require(std::abs(det) > 0, Errc::SingularCovariance, "inverse covariance is singular on h_P");
  return acc.scalar_part() / det;
}

}  // namespace

GrassmannElement trace_formula_exponent(const GrassmannSpace& sp) {
  const int n = sp.copies();
  GrassmannElement q = pairing(sp, 0, 0) + pairing(sp, 0, n - 1);
  for (int k = 1; k < n; ++k) q += pairing(sp, k, k) - pairing(sp, k, k - 1);
  return q;
}

cplx trace_formula(const FockRep& rep, const std::vector<Mat>& ops) {
  require(!ops.empty(), Errc::InvalidInput, "trace_formula needs at least one operator");
  const int n = static_cast<int>(ops.size());
  const BasisProjection& P = rep.projection();
  require(n * P.space().dim() <= kMaxGenerators, Errc::CapacityExceeded,
          "trace formula needs n * dim <= " + std::to_string(kMaxGenerators));
  const GrassmannSpace sp(P, n);
  GrassmannElement xi = grassmann_exp(trace_formula_exponent(sp));
  for (int k = 0; k < n; ++k) xi = wedge(xi, place(kappa(rep, ops[k]), sp, k));
  return std::ldexp(1.0, -P.half()) * berezin_integral_all(P, xi);
}

const char* fk_path_name(FkPath p) {
  switch (p) {
    case FkPath::Auto: return "auto";
    case FkPath::Literal: return "literal";
    case FkPath::Wick: return "wick";
    case FkPath::Ring: return "ring";
  }
  return "?";
}

cplx feynman_kac_rhs(const SelfDualOperator& H, const FockRep& rep, const Mat& W, const Mat& K,
                     double beta, double s, int n, FkPath path) {
  require(n > 1, Errc::GridTooCoarse, "need n > 1");
  require(beta > 0, Errc::InvalidInput, "beta must be positive");
  require_diagonalized(H, rep.projection());
  require_inputs(rep, W, K);
  const TimeGrid grid = TimeGrid::make(n, beta);
  require_fine_grid(H, grid);
  const StepFactors f = step_factors(rep, W, K, beta, s, n);
  switch (path) {
    case FkPath::Literal: return rhs_literal(H, rep, f, grid);
    case FkPath::Wick: return rhs_wick(H, rep, f, grid);
    case FkPath::Auto:
    case FkPath::Ring: return rhs_ring(H, rep, f, grid);
  }
  return 0.0;
}

cplx feynman_kac_lhs(const FockRep& rep, const SelfDualOperator& H, const Mat& W, const Mat& K,
                     double beta, double s) {
  require_inputs(rep, W, K);
  return trace_ratio_exact(rep, H, W, K, beta, s);
}

double empirical_order(const std::vector<ConvergenceRow>& rows, double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (const auto& r : rows) {
    if (!(r.abs_err > floor)) continue;
    const double x = std::log(double(r.n)), y = -std::log(r.abs_err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  if (cnt < 2) return std::numeric_limits<double>::quiet_NaN();
  return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

ConvergenceReport convergence_study(const SelfDualOperator& H, const FockRep& rep, const Mat& W,
                                    const Mat& K, double beta, double s, const std::vector<int>& ns,
                                    FkPath path) {
  for (std::size_t i = 1; i < ns.size(); ++i)
    require(ns[i] > ns[i - 1], Errc::InvalidInput, "n-list must be strictly increasing");
  ConvergenceReport rep_out;
  rep_out.beta = beta;
  rep_out.s = s;
  rep_out.path = path;
  const cplx lhs = feynman_kac_lhs(rep, H, W, K, beta, s);
  for (int n : ns) {
    ConvergenceRow r;
    r.n = n;
    r.rhs = feynman_kac_rhs(H, rep, W, K, beta, s, n, path);
    r.lhs = lhs;
    r.abs_err = std::abs(r.rhs - lhs);
    r.ratio = rep_out.rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                                   : r.abs_err / rep_out.rows.back().abs_err;
    if (!rep_out.rows.empty() && r.abs_err > rep_out.rows.back().abs_err) rep_out.monotone = false;
    rep_out.rows.push_back(r);
  }
  rep_out.empirical_order = empirical_order(rep_out.rows);
  return rep_out;
}

Mat box_observable(const FockRep& rep, const LatticeModel& m, const LocalObservable& obs, int ell) {
  require(ell >= 0 && ell <= m.L, Errc::InvalidInput, "observable box must lie inside the model box");
  require(rep.modes() == m.modes(), Errc::ShapeMismatch, "Fock space does not match the model box");
  const int S = m.nspins();
  // n_i = B(e_i)^* B(e_i) is basis-free, so this works for any projection of the rep
  std::vector<SpMat> num(m.modes());
  for (int i = 0; i < m.modes(); ++i) {
    Vec e = Vec::Zero(2 * m.modes());
    e(i) = 1.0;
    const Mat b = rep.generator(e);
    num[i] = Mat(b.adjoint() * b).sparseView();
  }
  SpMat id(rep.fock_dim(), rep.fock_dim());
  id.setIdentity();
  SpMat acc(rep.fock_dim(), rep.fock_dim());
  for (const auto& x : box_sites(m.d, ell))
    for (const auto& term : obs.terms) {
      SpMat op = id;
      bool inside = true;
      for (const auto& fct : term.factors) {
        require(static_cast<int>(fct.dx.size()) == m.d && fct.s >= 0 && fct.s < S,
                Errc::InvalidInput, "malformed observable factor");
        std::vector<int> y = x;
        for (int c = 0; c < m.d; ++c) y[c] += fct.dx[c];
        if (!in_box(y, ell)) {
          inside = false;
          break;
        }
        op = SpMat(op * num[site_index(y, m.L) * S + fct.s]);
      }
      if (inside) acc += SpMat(term.coeff * op);
    }
  return Mat(acc);
}

double log_moment_generating(const LatticeModel& model, const LocalObservable& W,
                             const LocalObservable& K, double beta, double s, int L_f, int L_i,
                             int l) {
  require(L_f >= L_i && L_i >= l && l >= 0, Errc::InvalidInput, "need L_f >= L_i >= l >= 0");
  const LatticeModel m = with_box(model, L_f);
  require(m.modes() <= kMaxFockModes, Errc::CapacityExceeded,
          "exact path limited to " + std::to_string(kMaxFockModes) + " modes");
  const FockRep rep(canonical_lattice_projection(m));
  const SelfDualOperator H = build_hamiltonian(m);
  const Mat Wop = box_observable(rep, m, W, L_i);
  const Mat Kop = box_observable(rep, m, K, l);
  const double j1 = generating_function_exact(rep, H, Wop, Kop, beta, s);
  const double j0 = generating_function_exact(rep, H, Wop, Kop, beta, 0.0);
  return (j1 - j0) / with_box(model, l).sites();
}

}  // namespace fermi
