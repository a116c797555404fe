#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fermi {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

enum class Errc {
  NotSkewSymmetric,
  OddOrder,
  NotHermitian,
  Singular,
  ShapeMismatch,
  KernelPairingFailure,
  NotBogoliubov,
  NotAntisymmetric,
  DegenerateOverlap,
  CapacityExceeded,
  ParityViolation,
  NotSelfAdjoint,
  SymbolViolation,
  SpaceMismatch,
  SingularCovariance,
  NotDiagonalized,
  GridTooCoarse,
  NotPSD,
  NotApplicable,
  GapTooSmall,
  Conflict,
  InvalidInput,
  BranchAmbiguity,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace fermi
