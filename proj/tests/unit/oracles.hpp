#pragma once

// Reference values computed independently of the library (exact rational
// arithmetic or 30-digit mpmath) and frozen here. Do not regenerate them from
// library output.

namespace oracle {

// 1 / B(1/2, 4) = 35/32.
inline constexpr double triweight_norm_d1 = 35.0 / 32.0;
// (35/32)^2 * int_{-1}^{1} (1 - x^2)^6 dx = (1225/1024) * (2048/3003) = 350/429.
inline constexpr double triweight_l2_d1 = 350.0 / 429.0;
// 1 / (2 pi int_0^1 (1 - s^2)^3 s ds) = 4 / pi.
inline constexpr double triweight_norm_d2 = 1.27323954473516268615;
// 1 / (4 pi int_0^1 (1 - s^2)^3 s^2 ds) = 315 / (64 pi).
inline constexpr double triweight_norm_d3 = 1.56668147106084471147;
inline constexpr double uniform_norm_d1 = 0.5;
// 1 / int_{-1}^{1} (1 - x^2) dx.
inline constexpr double epanechnikov_norm_d1 = 0.75;
inline constexpr double biweight_norm_d1 = 15.0 / 16.0;
inline constexpr double triweight_mu2 = 1.0 / 9.0;

// 5 * 1000^(-1/10) and 10 * 100^(-1/24).
inline constexpr double bandwidth_model1_n1000 = 2.50593616813636132892;
inline constexpr double bandwidth_model2_n100 = 8.25404185268018425680;

// Hand data set: W = (0.1, 0.4, -0.3, 0.8, 1.5), Y = (1, 2, 3, 4, 5),
// w0 = 0.2, h = 1, triweight, d = 1. Exact rational evaluation.
inline constexpr double hand_eta = 360998.0 / 181361.0;
inline constexpr double hand_f = 0.5554180625;
inline constexpr double hand_sigma2 = 0.9611928558963448;
inline constexpr double hand_ci_half_95 = 1.04151069144926687079;

inline constexpr double z_975 = 1.95996398454005423552;
inline constexpr double z_75 = 0.67448975019608174320;

// (1/N) sum (v - mean)^2 for {0, 1, 2, 3}.
inline constexpr double emse_0123 = 1.25;

}  // namespace oracle
