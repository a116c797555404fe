#include "fermi/numkernel.hpp"

namespace fermi {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NotSkewSymmetric: return "NotSkewSymmetric";
    case Errc::OddOrder: return "OddOrder";
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::Singular: return "Singular";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::KernelPairingFailure: return "KernelPairingFailure";
    case Errc::NotBogoliubov: return "NotBogoliubov";
    case Errc::NotAntisymmetric: return "NotAntisymmetric";
    case Errc::DegenerateOverlap: return "DegenerateOverlap";
    case Errc::CapacityExceeded: return "CapacityExceeded";
    case Errc::ParityViolation: return "ParityViolation";
    case Errc::NotSelfAdjoint: return "NotSelfAdjoint";
    case Errc::SymbolViolation: return "SymbolViolation";
    case Errc::SpaceMismatch: return "SpaceMismatch";
    case Errc::SingularCovariance: return "SingularCovariance";
    case Errc::NotDiagonalized: return "NotDiagonalized";
    case Errc::GridTooCoarse: return "GridTooCoarse";
    case Errc::NotPSD: return "NotPSD";
    case Errc::NotApplicable: return "NotApplicable";
    case Errc::GapTooSmall: return "GapTooSmall";
    case Errc::Conflict: return "Conflict";
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::BranchAmbiguity: return "BranchAmbiguity";
  }
  return "Unknown";
}

}  // namespace fermi
