#pragma once

#include <cstdint>
#include <optional>

#include "fermi/selfdual.hpp"

namespace fermi {

// largest natural number strictly smaller than x (x - 1 for integral x)
int strict_floor(double x);

struct TimeGrid {
  int n;
  double beta;
  int n_beta;  // n + strict_floor(n / beta)

  static TimeGrid make(int n, double beta);
};

inline constexpr double kGridMargin = 1.01;

// throws GridTooCoarse unless n > kGridMargin * beta * ||H||
void require_fine_grid(const SelfDualOperator& H, const TimeGrid& grid);

class CovarianceOperator {
public:
  enum class Source { DirectInverse, ClosedForm };

  CovarianceOperator(TimeGrid grid, SelfDualSpace space, Mat matrix, Source source);

  const TimeGrid& grid() const { return grid_; }
  const SelfDualSpace& space() const { return space_; }
  const Mat& matrix() const { return C_; }
  Source source() const { return source_; }
  Mat block(int k1, int k2) const;
  // max |C* + A C A| on the copied space
  double selfduality_residual() const;

private:
  TimeGrid grid_;
  SelfDualSpace space_;
  Mat C_;
  Source source_;
};

// d phi^(0) = phi^(0) + phi^(n_beta - 1), d phi^(k) = phi^(k) - phi^(k-1)
Mat discrete_derivative(const TimeGrid& grid, int base_dim);

// d_P = P d P - A P d* P A on the copied space
Mat selfdual_derivative(const TimeGrid& grid, const BasisProjection& P);

// d_P + beta/n 1[k<n] H, the inverse covariance
Mat inverse_covariance(const SelfDualOperator& H, const BasisProjection& P, const TimeGrid& grid);

CovarianceOperator covariance_direct(const SelfDualOperator& H, const BasisProjection& P,
                                     const TimeGrid& grid);

// (n / 2 beta) ln((1 + beta H / n)(1 - beta H / n)^-1)
SelfDualOperator h_n_approximant(const SelfDualOperator& H, double beta, int n);

// P L P - A P L P A with L = (n / beta) ln(1 + beta H / n): the one-step generator of the
// discrete dynamics, exact for the closed form
SelfDualOperator h_n_adapted(const SelfDualOperator& H, const BasisProjection& P, double beta,
                             int n);

// beta/n [min(n - k, q - k)]_+
double alpha_n(const TimeGrid& grid, int k, int q);

Mat covariance_closed_form(const SelfDualOperator& H, const BasisProjection& P,
                           const TimeGrid& grid, int k1, int k2);
CovarianceOperator covariance_closed_form_full(const SelfDualOperator& H, const BasisProjection& P,
                                               const TimeGrid& grid);

struct BoundStats {
  std::int64_t samples = 0;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
  std::int64_t violations = 0;  // ratio > 1 + kBoundSlack
};

inline constexpr double kBoundSlack = 1e-9;

// |det[<phi_q^(k_q), C phi_{N+l}^(k_{N+l})>]| / prod ||phi_q||, phi_q in h_P, N <= 4
BoundStats det_bound_ratio(const CovarianceOperator& C, const BasisProjection& P,
                           std::int64_t samples, std::uint64_t seed);

struct PfaffianSweep {
  std::int64_t samples = 1000;
  std::uint64_t seed = 0;
  int max_pairs = 3;  // N
  // draw every phi from h_P or A h_P (the sharpness probe)
  bool paired_subspaces = false;
  // PSD weight with index assignment j_q drawn uniformly
  std::optional<RMat> weight;
};

// |Pf[M_{j_q j_l} <A phi_q^(k_q), C phi_l^(k_l)>]| / prod (||P phi_q|| + ||P^perp phi_q||) M_{j_q j_q}^1/2
BoundStats pfaffian_bound_ratio(const CovarianceOperator& C, const BasisProjection& P,
                                const PfaffianSweep& sweep);

// clips eigenvalues in [-1e-12, 0) to zero, returns R real with M = R^T R; throws NotPSD
RMat psd_factor(const RMat& M);

}  // namespace fermi
