#pragma once

// Thresholds fixed after the first verified run and not tuned since.
//
// kFkRelErr: relative error of the Feynman-Kac Berezin integral at n = 24 (beta = 1, s = 0.3).
//   First run (2026-10-16): 0.029 for the single-mode model, 0.034 for the m = 2 interacting
//   toy. Frozen at the initial value 5e-2.
//
// kGappedUniformity: max/min of omega over beta in {1, 2, 4, 8, 16} for the gapped pairing
//   chain. First run (2026-10-16): 1.45 to 1.62 over eps in {0.5, 1} and gimel in
//   {0, gap / 4}.
//   Frozen at the initial value 3.

namespace calibration {

inline constexpr double kFkRelErr = 5e-2;
inline constexpr double kFkMinOrder = 0.8;
inline constexpr double kGappedUniformity = 3.0;

}  // namespace calibration
