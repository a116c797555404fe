#pragma once

#include <string>
#include <vector>

#include "fermi/selfdual.hpp"

namespace fermi {

// One kernel entry: amplitude for (x, s) -> (x - dx, t), i.e. <e_{x,s}, h e_{x-dx,t}> = value.
struct Amplitude {
  std::vector<int> dx;
  int s = 0;
  int t = 0;
  cplx value = 0.0;
};

// Products of on-site number operators, translated over a box.
struct DensityFactor {
  std::vector<int> dx;
  int s = 0;
};
struct DensityTerm {
  double coeff = 0;
  std::vector<DensityFactor> factors;  // empty: constant
};
struct LocalObservable {
  std::vector<DensityTerm> terms;
};

// Lattice fermions on the box {|x_i| <= L} of Z^d with spin set S, open boundaries.
// Hopping is Hermitian, h(-dx, t, s) = conj h(dx, s, t); pairing is antisymmetric,
// g(-dx, t, s) = -g(dx, s, t). Both lists are stored completed.
struct LatticeModel {
  int d = 1;
  int L = 0;
  std::vector<std::string> spins{"0"};
  std::vector<Amplitude> hopping;
  std::vector<Amplitude> pairing;
  // optional interaction W and observable K densities used by the generating function
  LocalObservable interaction;
  LocalObservable observable;

  int nspins() const { return static_cast<int>(spins.size()); }
  int sites() const;
  // |Lambda_L| * |S|, the number of modes; the self-dual space has twice that
  int modes() const { return sites() * nspins(); }
  bool gauge_invariant() const { return pairing.empty(); }
  double range() const;
};

// Adds the Hermitian / antisymmetric partner of every entry, merging duplicates.
// Throws Conflict if a given partner disagrees, InvalidInput on malformed entries.
LatticeModel complete_model(LatticeModel m);

// JSON: {d, L, spins, hopping: [{dx, s, t, re, im}], pairing: [...]}; s, t are spin labels or
// indices. Optional: interaction / observable: [{coeff, factors: [{dx, s}]}], description.
LatticeModel model_from_json(const std::string& text);
LatticeModel load_model(const std::string& path);
std::string model_summary(const LatticeModel& m);

LatticeModel with_box(LatticeModel m, int L);

// sites of the box in lexicographic order
std::vector<std::vector<int>> box_sites(int d, int L);
int site_index(const std::vector<int>& x, int L);
bool in_box(const std::vector<int>& x, int L);

// Basis of X_L: index (site * |S| + s) for v = -, M + (site * |S| + s) for v = +.
Mat hopping_matrix(const LatticeModel& m);
Mat pairing_matrix(const LatticeModel& m);
// [[h, G], [-conj G, -conj h]] on the canonical space of dimension 2M
SelfDualOperator build_hamiltonian(const LatticeModel& m);
// P e_{(x,s,v)} = delta_{v,-} e_{(x,s,v)}
BasisProjection canonical_lattice_projection(const LatticeModel& m);

struct Geometry {
  int d = 1;
  int L = 0;
  int nspins = 1;
  RMat dist;  // |x - y| over X_L
};
Geometry lattice_geometry(const LatticeModel& m);

// sup_x1 sum_x2 (e^{mu |x1-x2|^eps} - 1) |<e_x1, H e_x2>|
double combes_thomas_S(const Geometry& g, const Mat& H, double mu, double eps);

double spectral_distance(const Mat& H, cplx z);

struct CombesThomasResult {
  double delta;      // distance of z to spec H
  double S;
  double max_ratio;  // max |R_xy| (delta - S) e^{mu d^eps}, must stay <= 1
};
// throws NotApplicable unless delta > S
CombesThomasResult combes_thomas_check(const Geometry& g, const Mat& H, cplx z, double mu,
                                       double eps);

// max |K_xy| / (12 e^{-mu d^eps} sqrt(K_xx K_yy)) with K = ((H-u)^2 + eta^2)^-1, eta = 2 S(H, mu)
double resolvent_difference_check(const Geometry& g, const Mat& H, double u, double mu, double eps);

// sup over a uniform alpha grid of sup_x sum_y e^{ups |x-y|^eps} |<e_x, e^{alpha H}/(1+e^{beta H}) e_y>|
double fermi_summability(const Geometry& g, const Mat& H, double beta, double upsilon, double eps,
                         int alpha_grid = 32);

inline constexpr double kMuStep = 0.1;
inline constexpr int kMuSteps = 20;  // mu in {0.1, ..., 2.0}

// sum_{x in Z^d} e^{-c |x|^eps} by growing shells; a lower estimate once the shell cap is hit.
// +inf for c <= 0.
double lattice_sum(int d, double c, double eps);

// 96 |S| inf_mu sum_x e^{(ups - mu min{1, pi / (4 beta S(H,mu))}) |x|^eps}
double fermi_summability_bound(const Geometry& g, const Mat& H, double beta, double upsilon,
                               double eps);

// D_P = sup_x1 sum_x2 e^{ups |x1-x2|^eps} |<e_x1, P e_x2>|
double projection_summability(const Geometry& g, const Mat& P, double upsilon, double eps);

// alpha(u1,u2) = [min{beta - min(u1,u2), |u1 - u2|}]_+ and its folded version
double alpha_time(double beta, double u1, double u2);
double alpha_tilde(double beta, double u1, double u2);

// F_{u1,u2}(H,P) from the spectral data of H
Mat decay_kernel(const Mat& H, const Mat& P, double beta, double u1, double u2);

struct DecayGrid {
  int u1 = 16;     // sup over u1 on a uniform grid of [0, beta+1)
  int u2 = 64;     // trapezoid panels on [0, beta+1], split at u1
  int alpha = 32;  // alpha grid for the Fermi summability constant
};

struct DecayEstimate {
  double value = 0;
  double beta = 0;
  double upsilon = 0;
  double epsilon = 1;
  double gimel = 0;
  int L = 0;
  DecayGrid grid;
  double bound = 0;  // right-hand side of the summability bound
  bool satisfied = false;
  // ingredients of the bound
  double d_projection = 0;
  double d_fermi = 0;
  double gap = 0;
};

inline constexpr double kDecayRelSlack = 1e-6;

// finite-volume, finite-grid omega; the bound is 2 (D_P + 1)^2 D_{H,beta} (beta + 1) for gimel = 0
// and +inf otherwise
DecayEstimate decay_parameter(const Geometry& g, const Mat& H, const Mat& P, double beta,
                              double upsilon, double eps, double gimel, const DecayGrid& grid = {});

// min |eigenvalue|, 0 if any eigenvalue is below 1e-10 in magnitude
double spectral_gap(const Mat& H);

// 152 |S| inf_mu sum_x e^{(ups - mu min{1, gap / (4 S)}) |x|^eps}
//        * sup_u1 int_0^{beta+1} e^{(gimel - gap/2) alpha~} / (1 - e^{-beta gap/2}) du2
double gapped_bound(const Geometry& g, const Mat& H, double beta, double upsilon, double eps,
                    double gimel, const DecayGrid& grid = {});

struct GappedReport {
  std::vector<DecayEstimate> estimates;
  double uniformity = 0;  // max omega / min omega over the beta list
};

// omega with P = 1[H>0] against the gapped bound, per beta; throws GapTooSmall if gap <= 2 gimel
GappedReport gapped_summability_check(const Geometry& g, const SelfDualOperator& H,
                                      const std::vector<double>& betas, double upsilon,
                                      double eps, double gimel, const DecayGrid& grid = {});

// max |P_L - P_{L+2}| over index pairs inside Lambda_L; P = canonical for gauge-invariant
// models, 1[H>0] otherwise
double projection_drift(const LatticeModel& m);

}  // namespace fermi
