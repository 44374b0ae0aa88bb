// Evaluation protocol: burn-in gating, recursive cumulative predictive error
// (CPE), its running variance, Gaussian stream perturbation, and per-method
// sensitivity curves over a tau grid.
#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <random>
#include <span>
#include <vector>

#include "streampred/core.hpp"
#include "streampred/methods.hpp"

namespace streampred {

struct CpeAccumulator {
    std::uint64_t n = 0;
    double cpe = 0.0;
    double sum = 0.0;     // sum of CPE_i over the trace
    double sum_sq = 0.0;  // sum of CPE_i^2

    void add(double y, double yhat) {
        if (!std::isfinite(y) || !std::isfinite(yhat))
            throw numeric_error("non-finite CPE inputs");
        const double err = std::abs(y - yhat);
        cpe = (static_cast<double>(n) * cpe + err) / static_cast<double>(n + 1);
        ++n;
        sum += cpe;
        sum_sq += cpe * cpe;
    }
};

inline double running_variance(const CpeAccumulator& a) {
    if (a.n == 0) throw not_ready_error("running variance needs n >= 1");
    const double inv = 1.0 / static_cast<double>(a.n);
    const double mean = a.sum * inv;
    const double var = a.sum_sq * inv - mean * mean;
    return var > 0.0 ? var : 0.0;  // clamp against rounding
}

inline double sigma_rv(const CpeAccumulator& a) { return std::sqrt(running_variance(a)); }

inline std::vector<double> perturb_stream(std::span<const double> y, double tau,
                                          std::uint64_t seed) {
    if (tau < 0.0) throw parameter_error("perturbation scale must be nonnegative");
    std::vector<double> out(y.begin(), y.end());
    if (tau == 0.0) return out;  // exact identity, including bit patterns
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, tau);
    for (double& v : out) v += noise(rng);
    return out;
}

struct TraceRow {
    std::uint64_t index = 0;  // index of the realized token
    double y = 0.0;
    double yhat = 0.0;
    double abs_err = 0.0;
    double cpe = 0.0;
};

struct RunOutput {
    CpeAccumulator acc;
    double cpe = 0.0;
    double sigma_rv = 0.0;
    std::vector<TraceRow> trace;
    std::uint64_t clamped_low = 0;   // sketch out-of-range statistics
    std::uint64_t clamped_high = 0;
};

// One prequential pass: tokens before the burn-in boundary only feed state;
// afterwards each prediction is scored against the token it preceded.
inline RunOutput run_stream(const PredictorId& id, const MethodParams& params,
                            std::span<const double> y, std::size_t burnin,
                            std::uint64_t seed, bool keep_trace = false) {
    if (y.empty()) throw config_error("empty stream");
    if (burnin >= y.size())
        throw config_error("stream shorter than the burn-in prefix");
    auto pred = make_predictor(id, params, seed, burnin);
    RunOutput out;
    if (keep_trace) out.trace.reserve(y.size() - burnin);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (i >= burnin) {
            const Prediction p = pred->predict();
            out.acc.add(y[i], p.point);
            if (keep_trace)
                out.trace.push_back({static_cast<std::uint64_t>(i + 1), y[i], p.point,
                                     std::abs(y[i] - p.point), out.acc.cpe});
        }
        pred->update({static_cast<std::uint64_t>(i + 1), y[i]});
    }
    out.cpe = out.acc.cpe;
    out.sigma_rv = sigma_rv(out.acc);
    if (auto* cm = dynamic_cast<const CmPredictor*>(pred.get())) {
        out.clamped_low = cm->clamped_low();
        out.clamped_high = cm->clamped_high();
    }
    return out;
}

struct SensitivityCurve {
    PredictorId method;
    std::vector<double> taus;
    std::vector<double> cpes;
    double sigma_rv = 0.0;
    std::uint64_t clamped_low = 0;
    std::uint64_t clamped_high = 0;
};

// Unperturbed run fixes sigma_RV; the tau grid spans [0, sigma_RV] with the
// perturbation seed offset by the grid index. A zero sigma_RV collapses the
// curve to the single tau = 0 point.
inline SensitivityCurve run_sensitivity(const PredictorId& id,
                                        const MethodParams& params,
                                        std::span<const double> y,
                                        std::size_t grid_points,
                                        double burnin_frac, std::uint64_t seed,
                                        bool parallel = true) {
    if (grid_points < 2) throw config_error("tau grid needs at least 2 points");
    if (!(burnin_frac >= 0.0 && burnin_frac < 1.0))
        throw config_error("burn-in fraction must be in [0, 1)");
    const std::size_t burnin =
        static_cast<std::size_t>(burnin_frac * static_cast<double>(y.size()));
    const RunOutput base = run_stream(id, params, y, burnin, seed);
    SensitivityCurve curve;
    curve.method = id;
    curve.sigma_rv = base.sigma_rv;
    curve.clamped_low = base.clamped_low;
    curve.clamped_high = base.clamped_high;
    if (base.sigma_rv == 0.0) {
        curve.taus = {0.0};
        curve.cpes = {base.cpe};
        return curve;
    }
    curve.taus.resize(grid_points);
    curve.cpes.resize(grid_points);
    for (std::size_t j = 0; j < grid_points; ++j)
        curve.taus[j] = base.sigma_rv * static_cast<double>(j) /
                        static_cast<double>(grid_points - 1);
    auto one_point = [&](std::size_t j) {
        const std::vector<double> pert = perturb_stream(y, curve.taus[j], seed + j);
        return run_stream(id, params, pert, burnin, seed).cpe;
    };
    if (parallel) {
        std::vector<std::future<double>> futs;
        futs.reserve(grid_points);
        for (std::size_t j = 0; j < grid_points; ++j)
            futs.push_back(std::async(std::launch::async, one_point, j));
        for (std::size_t j = 0; j < grid_points; ++j) curve.cpes[j] = futs[j].get();
    } else {
        for (std::size_t j = 0; j < grid_points; ++j) curve.cpes[j] = one_point(j);
    }
    return curve;
}

}  // namespace streampred
