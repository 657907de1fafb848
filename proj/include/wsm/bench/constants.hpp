#pragma once

// Frozen constants. Regenerate with `wsbench calibrate --out include/wsm/bench/constants.hpp`.

namespace wsm::bench::frozen {

inline constexpr double slack = 1.5;

inline constexpr double esort_comparisons = 6.85576;
inline constexpr double flush_span = 2.25;
inline constexpr double m0_work = 9.38527;
inline constexpr double m1_span = 40.7739;
inline constexpr double m1_work = 21.5711;
inline constexpr double m2_front_delay = 188.062;
inline constexpr double m2_span = 16.033;
inline constexpr double m2_work = 23.82;
inline constexpr double pesort_span = 16.7812;
inline constexpr double tree_span_slope_hi = 1.5;
inline constexpr double tree_span_slope_lo = 0.666667;

}  // namespace wsm::bench::frozen
