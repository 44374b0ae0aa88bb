// Dirichlet-process posterior-predictive point predictor.
//
// The prediction is a convex combination of the observed values (weighted by
// multiplicity) and the median of the base measure, taken as the discrete
// uniform over the observed range so median(F0) = (min + max) / 2.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>

#include "streampred/core.hpp"

namespace streampred {

struct DppState {
    double M = 1.0;              // concentration mass
    double rounding_grid = 0.0;  // 0 disables rounding; otherwise bucket width
    std::map<double, std::uint64_t> counts;
    std::uint64_t n = 0;
    double sum = 0.0;  // sum of all tokens (= sum of y'_j * n_j)
    double f0_min = 0.0;
    double f0_max = 0.0;

    double bucket(double y) const {
        if (rounding_grid <= 0.0) return y;
        return std::round(y / rounding_grid) * rounding_grid;
    }
};

inline void dpp_update(DppState& s, double y) {
    if (!std::isfinite(y)) throw ingestion_error("non-finite dpp token");
    const double b = s.bucket(y);
    s.counts[b] += 1;
    s.sum += b;
    if (s.n == 0) {
        s.f0_min = s.f0_max = b;
    } else {
        if (b < s.f0_min) s.f0_min = b;
        if (b > s.f0_max) s.f0_max = b;
    }
    ++s.n;
}

inline double dpp_predict(const DppState& s) {
    if (s.n == 0) throw not_ready_error("dpp: no data");
    if (s.M <= 0.0) throw parameter_error("dpp concentration must be positive");
    const double n = static_cast<double>(s.n);
    const double f0_median = 0.5 * (s.f0_min + s.f0_max);
    return s.sum / (s.M + n) + (s.M / (s.M + n)) * f0_median;
}

// Same predictor evaluated over an explicit sample (used by the
// representative-set variant, each value with multiplicity one).
inline double dpp_predict_over(std::span<const double> values, double M) {
    if (values.empty()) throw not_ready_error("dpp: empty sample");
    if (M <= 0.0) throw parameter_error("dpp concentration must be positive");
    double sum = 0.0, lo = values[0], hi = values[0];
    for (double v : values) {
        sum += v;
        if (v < lo) lo = v;
        if (v > hi) hi = v;
    }
    const double n = static_cast<double>(values.size());
    return sum / (M + n) + (M / (M + n)) * 0.5 * (lo + hi);
}

}  // namespace streampred
