// Shtarkov (NML / NMPL) point predictors for normal, binomial, exponential,
// and gamma expert families, frequentist and Bayes variants.
//
// Only argmax predictions are computed; the normalizing constants of the
// Shtarkov solution cancel and are never evaluated.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

#include "streampred/core.hpp"

namespace streampred {

enum class NormalVariant {
    freq_known_var,     // sigma2 known  -> predict running mean
    freq_known_mean,    // mu known      -> predict mu
    freq_both_unknown,  // -> predict running mean
    bayes_mean,         // N(mu0, sigma02) prior on mu, sigma2 known
    bayes_var,          // IG(alpha, beta) prior on sigma2, mu known
    bayes_both,         // N(mu0, sigma2*sigma02) x IG(alpha, beta)
};

inline NormalVariant parse_normal_variant(const std::string& s) {
    if (s == "freq-known-var") return NormalVariant::freq_known_var;
    if (s == "freq-known-mean") return NormalVariant::freq_known_mean;
    if (s == "freq-both-unknown") return NormalVariant::freq_both_unknown;
    if (s == "bayes-mean") return NormalVariant::bayes_mean;
    if (s == "bayes-var") return NormalVariant::bayes_var;
    if (s == "bayes-both") return NormalVariant::bayes_both;
    throw parameter_error("unknown normal variant: " + s);
}

struct ShtarkovNormalState {
    NormalVariant variant = NormalVariant::freq_both_unknown;
    double mu = 0.0;       // known mean (freq-known-mean, bayes-var)
    double sigma2 = 1.0;   // known variance where needed
    double mu0 = 0.0;      // prior mean
    double sigma02 = 1.0;  // prior variance (> 0)
    double alpha = 1.0;    // IG shape (> 0)
    double beta = 1.0;     // IG rate (> 0)

    std::uint64_t n = 0;
    double mean = 0.0;

    void validate() const {
        if (sigma02 <= 0 || sigma2 <= 0 || alpha <= 0 || beta <= 0)
            throw parameter_error("shtarkov-normal hyperparameters must be positive");
    }

    void update(double y) {
        ++n;
        mean += (y - mean) / static_cast<double>(n);
    }
};

inline double sht_normal_predict(const ShtarkovNormalState& s) {
    if (s.n == 0) throw not_ready_error("shtarkov-normal: no data");
    s.validate();
    const double n = static_cast<double>(s.n);
    switch (s.variant) {
        case NormalVariant::freq_known_var:
        case NormalVariant::freq_both_unknown:
            return s.mean;
        case NormalVariant::freq_known_mean:
        case NormalVariant::bayes_var:
            return s.mu;
        case NormalVariant::bayes_mean:
            // posterior mode of mu with known sigma2
            return (s.mu0 / s.sigma02 + n * s.mean / s.sigma2) /
                   (1.0 / s.sigma02 + n / s.sigma2);
        case NormalVariant::bayes_both:
            return (n * s.mean + s.mu0 / s.sigma02) / (n + 1.0 / s.sigma02);
    }
    throw parameter_error("unknown normal variant");
}

struct ShtarkovBinomialState {
    std::uint64_t N = 1;  // trials per token
    std::uint64_t n = 0;
    std::uint64_t sum = 0;
    std::optional<std::pair<double, double>> bayes;  // Beta(alpha, beta)

    void update(std::uint64_t y) {
        if (y > N) throw ingestion_error("binomial token exceeds N");
        ++n;
        sum += y;
    }
};

namespace detail {
// t*ln(t) with the 0*ln(0) = 0 continuity convention; negative arguments
// mark an infeasible candidate.
inline double xlogx(double t) {
    if (t == 0.0) return 0.0;
    if (t < 0.0) return -std::numeric_limits<double>::infinity();
    return t * std::log(t);
}

inline double log_choose(double N, double y) {
    return std::lgamma(N + 1.0) - std::lgamma(y + 1.0) - std::lgamma(N - y + 1.0);
}
}  // namespace detail

// Log objective whose argmax over y in {0..N} is the predictor. Exposed for
// the unimodality and oracle tests.
inline double sht_binomial_objective(const ShtarkovBinomialState& s, std::uint64_t y) {
    const double N = static_cast<double>(s.N);
    const double n = static_cast<double>(s.n);
    const double S = static_cast<double>(s.sum);
    const double yd = static_cast<double>(y);
    const double lc = detail::log_choose(N, yd);
    if (!s.bayes) {
        return lc + detail::xlogx(S + yd) + detail::xlogx(N * (n + 1.0) - S - yd);
    }
    const double a = s.bayes->first;
    const double b = s.bayes->second;
    return lc + detail::xlogx(S + yd + a - 1.0) +
           detail::xlogx(b + N * (n + 1.0) - S - yd - 1.0);
}

inline std::uint64_t sht_binomial_predict(const ShtarkovBinomialState& s) {
    if (s.n == 0) throw not_ready_error("shtarkov-binomial: no data");
    if (s.bayes && (s.bayes->first <= 0 || s.bayes->second <= 0))
        throw parameter_error("Beta hyperparameters must be positive");
    std::uint64_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    for (std::uint64_t y = 0; y <= s.N; ++y) {
        const double v = sht_binomial_objective(s, y);
        if (v > best_val) {  // strict: ties break toward the smaller candidate
            best_val = v;
            best = y;
        }
    }
    if (!std::isfinite(best_val))
        throw numeric_error("shtarkov-binomial objective infeasible for all candidates");
    return best;
}

// Exponential experts: the optimal prediction is identically zero for both
// the frequentist and Bayes variants.
inline double sht_exponential_predict() { return 0.0; }

struct ShtarkovGammaState {
    double alpha = 1.0;  // shape index, fixed per stream
    std::uint64_t n = 0;
    double mean = 0.0;
    std::optional<std::pair<double, double>> bayes;  // Gamma(alpha0, beta0) prior

    void update(double y) {
        if (y <= 0.0) throw ingestion_error("gamma token must be strictly positive");
        ++n;
        mean += (y - mean) / static_cast<double>(n);
    }
};

inline double sht_gamma_predict(const ShtarkovGammaState& s) {
    if (s.n == 0) throw not_ready_error("shtarkov-gamma: no data");
    if (s.alpha <= 0) throw parameter_error("gamma shape must be positive");
    if (s.alpha <= 1.0) return 0.0;  // boundary maximization regime
    const double n = static_cast<double>(s.n);
    if (!s.bayes) return n * (s.alpha - 1.0) * s.mean / (n * s.alpha + 1.0);
    const double a0 = s.bayes->first;
    const double b0 = s.bayes->second;
    if (a0 <= 0 || b0 <= 0) throw parameter_error("gamma prior hyperparameters must be positive");
    return (s.alpha - 1.0) * (b0 + n * s.mean) / (n * s.alpha + a0);
}

}  // namespace streampred
