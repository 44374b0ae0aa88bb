// Conformal prediction intervals over a candidate grid, with
// distance-to-average and normal-conjugate posterior-density conformity
// measures. The point prediction is the interval midpoint.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "streampred/core.hpp"

namespace streampred {

enum class ConformityKind { dta, dta_streaming, bayes_posterior };

inline ConformityKind parse_conformity(const std::string& s) {
    if (s == "dta") return ConformityKind::dta;
    if (s == "dta-streaming") return ConformityKind::dta_streaming;
    if (s == "bayes-posterior") return ConformityKind::bayes_posterior;
    throw parameter_error("unknown conformity measure: " + s);
}

struct ConformityMeasure {
    ConformityKind kind = ConformityKind::bayes_posterior;
    // normal-conjugate hyperparameters (bayes-posterior only)
    double mu = 0.0;
    double tau2 = 1.0;
    double a = 1.0;
    double b = 1.0;

    void validate() const {
        if (kind == ConformityKind::bayes_posterior &&
            (tau2 <= 0.0 || a <= 0.0 || b <= 0.0))
            throw parameter_error("bayes-posterior conformity needs tau2, a, b > 0");
    }
};

namespace detail {

// Log density of the posterior-predictive Student t for a sample summarized
// by (count, sum, sum of squares), evaluated at x.
inline double bayes_posterior_logpdf(const ConformityMeasure& m, double count,
                                     double sum, double sumsq, double x) {
    const double tau_theta2 = 1.0 / (1.0 / m.tau2 + count);
    const double mu_theta = (m.mu / m.tau2 + sum) * tau_theta2;
    const double a_sigma = m.a + count;
    double b_sigma = m.b + sumsq + m.mu * m.mu / m.tau2 -
                     mu_theta * mu_theta / tau_theta2;
    if (b_sigma <= 0.0) b_sigma = std::numeric_limits<double>::min();
    const double sigma_t2 = (b_sigma / a_sigma) * (1.0 + tau_theta2);
    const double nu = 2.0 * a_sigma;
    const double z = (x - mu_theta) * (x - mu_theta) / sigma_t2;
    return std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
           0.5 * std::log(nu * M_PI) - 0.5 * std::log(sigma_t2) -
           ((nu + 1.0) / 2.0) * std::log1p(z / nu);
}

// Conformity from deleted-set running sums; larger = more conforming.
inline double conformity_from_sums(const ConformityMeasure& m, double count,
                                   double sum, double sumsq, double y) {
    switch (m.kind) {
        case ConformityKind::dta:
            return -std::abs(sum / count - y);
        case ConformityKind::dta_streaming:
            // streaming form compares against the mean of the full set
            return -std::abs((sum + y) / (count + 1.0) - y);
        case ConformityKind::bayes_posterior:
            return bayes_posterior_logpdf(m, count, sum, sumsq, y);
    }
    throw parameter_error("unknown conformity measure");
}

}  // namespace detail

inline double conformity_score(const ConformityMeasure& m,
                               std::span<const double> deleted_set, double y) {
    if (deleted_set.empty()) throw parameter_error("conformity needs a nonempty set");
    m.validate();
    double sum = 0.0, sumsq = 0.0;
    for (double v : deleted_set) {
        sum += v;
        sumsq += v * v;
    }
    return detail::conformity_from_sums(m, static_cast<double>(deleted_set.size()),
                                        sum, sumsq, y);
}

struct ConformalResult {
    double level = 0.0;  // alpha
    double lower = 0.0;
    double upper = 0.0;
    double point = 0.0;  // midpoint of the bounds
    bool contiguous = true;  // false when the included set has interior gaps
};

inline std::vector<double> conformal_default_grid(std::span<const double> y,
                                                  std::size_t size = 512) {
    if (y.empty()) throw parameter_error("grid needs data");
    if (size < 2) throw parameter_error("grid needs at least 2 points");
    const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
    const double range = *hi_it - *lo_it;
    const double lo = *lo_it - range;
    const double hi = *hi_it + range;
    std::vector<double> g(size);
    for (std::size_t i = 0; i < size; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) /
                        static_cast<double>(size - 1);
    return g;
}

inline ConformalResult conformal_pi(std::span<const double> y,
                                    const ConformityMeasure& m, double alpha,
                                    std::span<const double> grid) {
    const std::size_t n = y.size();
    if (n < 2) throw not_ready_error("conformal needs n >= 2");
    if (!(alpha > 0.0 && alpha < 1.0)) throw parameter_error("alpha must be in (0,1)");
    if (grid.empty()) throw parameter_error("candidate grid is empty");
    m.validate();
    double sum = 0.0, sumsq = 0.0;
    for (double v : y) {
        sum += v;
        sumsq += v * v;
    }
    ConformalResult out;
    out.level = alpha;
    bool any = false, in_prev = false, gap_after_block = false;
    double lower = 0.0, upper = 0.0;
    for (double cand : grid) {
        const double s1 = sum + cand;
        const double q1 = sumsq + cand * cand;
        const double c_new = detail::conformity_from_sums(
            m, static_cast<double>(n), s1 - cand, q1 - cand * cand, cand);
        // p-value of the candidate: proportion of deleted-set scores at most
        // as conforming as the candidate's own (which trivially ties itself)
        std::size_t at_most = 1;
        for (double yi : y) {
            const double ci = detail::conformity_from_sums(
                m, static_cast<double>(n), s1 - yi, q1 - yi * yi, yi);
            if (ci <= c_new) ++at_most;
        }
        const bool included =
            static_cast<double>(at_most) / static_cast<double>(n + 1) >= alpha;
        if (included) {
            if (!any) {
                lower = cand;
                any = true;
            } else if (!in_prev) {
                gap_after_block = true;  // re-entered after a gap
            }
            upper = cand;
        }
        in_prev = included;
    }
    if (!any) throw degenerate_error("conformal inclusion set empty: alpha too large");
    out.lower = lower;
    out.upper = upper;
    out.point = 0.5 * (lower + upper);
    out.contiguous = !gap_after_block;
    return out;
}

}  // namespace streampred
