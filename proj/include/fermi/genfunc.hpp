#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fermi/covariance.hpp"
#include "fermi/fock.hpp"
#include "fermi/grassmann.hpp"
#include "fermi/lattice.hpp"

namespace fermi {

// tr(A_0 ... A_{n-1}) through the Grassmann integral over n copies; n * dim <= 24
cplx trace_formula(const FockRep& rep, const std::vector<Mat>& ops);

// The exponent 1/2 <H, d_P H> of the trace formula as a sum of pairings.
GrassmannElement trace_formula_exponent(const GrassmannSpace& sp);

enum class FkPath {
  Auto,     // Ring
  Literal,  // full Berezin evaluation on all n_beta copies, D <= 24
  Wick,     // monomial expansion, one Pfaffian per monomial, D <= 40
  Ring,     // copies integrated one at a time around the time ring
};

const char* fk_path_name(FkPath p);

inline constexpr int kWickMaxGenerators = 40;
inline constexpr std::size_t kWickMaxTerms = std::size_t(1) << 20;

// int dmu_C exp(beta s/n sum_{k>=n} kappa^(k)(K) - beta/n sum_{k<n} kappa^(k)(W)) with
// C = C^(n)_{H,P}; P is the projection of `rep` and must diagonalize H
cplx feynman_kac_rhs(const SelfDualOperator& H, const FockRep& rep, const Mat& W, const Mat& K,
                     double beta, double s, int n, FkPath path = FkPath::Auto);

// tr(e^{beta(<B,HB>/2 - W)} e^{sK}) / tr(e^{beta/2 <B,HB>})
cplx feynman_kac_lhs(const FockRep& rep, const SelfDualOperator& H, const Mat& W, const Mat& K,
                     double beta, double s);

struct ConvergenceRow {
  int n;
  cplx rhs;
  cplx lhs;
  double abs_err;
  double ratio;  // abs_err / previous abs_err, NaN on the first row
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double beta = 0;
  double s = 0;
  std::string model;
  std::uint64_t seed = 0;
  FkPath path = FkPath::Auto;
  bool monotone = true;         // abs_err non-increasing along rows
  double empirical_order = 0;   // least-squares slope of -ln err against ln n
};

ConvergenceReport convergence_study(const SelfDualOperator& H, const FockRep& rep, const Mat& W,
                                    const Mat& K, double beta, double s, const std::vector<int>& ns,
                                    FkPath path = FkPath::Auto);

// slope of -ln(err) against ln(n); rows with err below `floor` are skipped
double empirical_order(const std::vector<ConvergenceRow>& rows, double floor = 1e-14);

// Sum over x in Lambda_ell of the translates of `obs` supported in Lambda_ell, as an operator on
// the Fock space of `rep`, whose modes must number m.modes(); any projection of the box works.
Mat box_observable(const FockRep& rep, const LatticeModel& m, const LocalObservable& obs, int ell);

// J(s) = (1/|Lambda_l|) ln[ tr(e^{-beta(H_{L_f} + W_{L_i})} e^{s K_l}) / tr(e^{-beta(H_{L_f} + W_{L_i})}) ]
// with W = |Lambda_{L_i}| E^W_{L_i}, K = |Lambda_l| E^K_l; exact Fock evaluation
double log_moment_generating(const LatticeModel& model, const LocalObservable& W,
                             const LocalObservable& K, double beta, double s, int L_f, int L_i,
                             int l);

}  // namespace fermi
