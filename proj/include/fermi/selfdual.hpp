#pragma once

#include "fermi/types.hpp"

namespace fermi {

// Even-dimensional space with antiunitary involution v -> J * conj(v).
class SelfDualSpace {
public:
  explicit SelfDualSpace(Mat J);
  // J swaps the two m-blocks: (phi1, phi2*) -> (phi2, phi1*)
  static SelfDualSpace canonical(int m);

  int dim() const { return static_cast<int>(J_.rows()); }
  int half() const { return dim() / 2; }
  const Mat& J() const { return J_; }

  Vec involve(const Vec& v) const { return J_ * v.conjugate(); }
  Mat involve_cols(const Mat& V) const { return J_ * V.conjugate(); }
  // the linear operator A X A
  Mat flip(const Mat& X) const { return J_ * X.conjugate() * J_.conjugate(); }

  bool same_as(const SelfDualSpace& o, double tol = 1e-12) const;

private:
  Mat J_;
};

class BasisProjection {
public:
  // range_basis: dim x m, orthonormal columns spanning ran P
  BasisProjection(SelfDualSpace space, Mat range_basis);
  static BasisProjection canonical(const SelfDualSpace& space);

  const SelfDualSpace& space() const { return space_; }
  const Mat& P() const { return P_; }
  Mat perp() const { return Mat::Identity(P_.rows(), P_.cols()) - P_; }
  const Mat& range_basis() const { return psi_; }
  // [psi_0..psi_{m-1}, A psi_0..A psi_{m-1}], unitary
  Mat frame() const;
  int half() const { return static_cast<int>(psi_.cols()); }

private:
  SelfDualSpace space_;
  Mat psi_;
  Mat P_;
};

class SelfDualOperator {
public:
  SelfDualOperator(SelfDualSpace space, Mat H);

  const SelfDualSpace& space() const { return space_; }
  const Mat& H() const { return H_; }
  bool hamiltonian() const { return hamiltonian_; }

private:
  SelfDualSpace space_;
  Mat H_;
  bool hamiltonian_;
};

inline constexpr double kKernelTol = 1e-10;

SelfDualOperator kmap(const SelfDualSpace& space, const Mat& H);

// P = 1[H>0] + P0 with P0 pairing the kernel
BasisProjection diagonalizing_projection(const SelfDualOperator& H);

// Residual of H = (P H_P P - P^perp A H_P^* A P^perp)/2 with H_P = 2PHP.
double diagonalization_residual(const Mat& H, const BasisProjection& P);

BasisProjection bogoliubov_transform(const BasisProjection& P, const Mat& U);

// -[kappa(h) + kappa~(g)] on the canonical space h + h*, with g(phi) = G conj(phi)
SelfDualOperator lift_one_particle(const Mat& h, const Mat& G);

int orientation_sign(const BasisProjection& P1, const BasisProjection& P2);

}  // namespace fermi
