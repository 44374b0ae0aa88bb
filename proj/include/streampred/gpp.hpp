// Gaussian-process posterior-predictive point predictors over an AR(1)
// kernel: zero-mean conditional, and Student-t predictives under an IID or
// INID random additive bias with method-of-moments hyperparameters.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "streampred/core.hpp"

namespace streampred {

inline Eigen::MatrixXd build_ar1_kernel(int n, double rho) {
    if (n < 1) throw parameter_error("kernel dimension must be positive");
    if (!(std::abs(rho) < 1.0)) throw parameter_error("AR(1) correlation needs |rho| < 1");
    Eigen::MatrixXd k(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = std::pow(rho, i - j);
            k(i, j) = v;
            k(j, i) = v;
        }
    return k;
}

namespace detail {

inline double sample_variance(const Eigen::VectorXd& v) {
    const auto n = v.size();
    if (n < 2) throw not_ready_error("sample variance needs n >= 2");
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(n - 1);
}

// Symmetric PSD square root via eigendecomposition.
inline Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw numeric_error("eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            if (ev(i) < -1e-9) throw numeric_error("matrix not PSD in square root");
            ev(i) = 0.0;
        }
        ev(i) = std::sqrt(ev(i));
    }
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw numeric_error("SPD factorization failed");
    return llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

}  // namespace detail

// Sample variance of the transformed vector (I+K)^{1/2} y.
inline double gpp_estimate_sigma2_nobias(const Eigen::VectorXd& y, double rho) {
    const int n = static_cast<int>(y.size());
    if (n < 2) throw not_ready_error("sigma2 estimate needs n >= 2");
    const Eigen::MatrixXd k = build_ar1_kernel(n, rho);
    const Eigen::MatrixXd root =
        detail::sym_sqrt(Eigen::MatrixXd::Identity(n, n) + k);
    return detail::sample_variance(root * y);
}

struct NobiasPrediction {
    double mu_star = 0.0;
    double sigma_star = 0.0;  // predictive variance
};

inline NobiasPrediction gpp_nobias_predict(const Eigen::VectorXd& y, double rho) {
    const int n = static_cast<int>(y.size());
    if (n < 1) throw not_ready_error("gpp-nobias needs n >= 1");
    const Eigen::MatrixXd k = build_ar1_kernel(n + 1, rho);
    const Eigen::MatrixXd k11 = k.topLeftCorner(n, n);
    const Eigen::VectorXd k12 = k.topRightCorner(n, 1);
    Eigen::LLT<Eigen::MatrixXd> llt(k11 + Eigen::MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) throw numeric_error("gpp-nobias solve failed");
    const Eigen::VectorXd w = llt.solve(k12);
    NobiasPrediction out;
    out.mu_star = w.dot(y);
    const double cond = (k(n, n) + 1.0) - k12.dot(w);
    const double sigma2 = (n >= 2) ? gpp_estimate_sigma2_nobias(y, rho) : 0.0;
    out.sigma_star = sigma2 * cond;
    return out;
}

struct GppHyper {
    double rho = 0.8;
    double delta2 = 0.01;
    double gamma = 0.0;         // scalar bias mean (IID case)
    Eigen::VectorXd gamma_vec;  // per-index bias means (INID case), may be empty
    double alpha = 3.0;
    double beta = 1.0;
    double sigma2 = 0.0;
    bool sigma2_clamped = false;  // INID second moment fell below zero
};

struct StudentPredictive {
    double location = 0.0;
    double scale_param = 0.0;  // (beta + A2) / 2
    double dof = 0.0;          // 2 alpha + n
};

namespace detail {
// Method-of-moments (alpha, beta) from a plug-in sigma2 and bias mean.
inline void moment_alpha_beta(double sigma2, double gamma_sq_mean, double delta2,
                              int n, GppHyper& h) {
    const double var = (2.0 * sigma2 / ((n - 1.0) * (n - 1.0))) *
                       (sigma2 + 2.0 * n * gamma_sq_mean / (1.0 + delta2));
    if (var > 0.0) {
        h.alpha = sigma2 * sigma2 / var + 2.0;
        h.beta = sigma2 * (h.alpha - 1.0);
    } else {
        // degenerate (constant) stream: keep the predictive proper
        h.alpha = 3.0;
        h.beta = sigma2 * (h.alpha - 1.0);
    }
    if (!(h.beta > 0.0)) h.beta = 1e-12;
}
}  // namespace detail

inline GppHyper gpp_iid_hyperparams(const Eigen::VectorXd& y, double rho, double delta2) {
    const int n = static_cast<int>(y.size());
    if (n < 3) throw not_ready_error("gpp-iid hyperparameters need n >= 3");
    if (!(delta2 > 0.0)) throw parameter_error("delta2 must be positive");
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) + build_ar1_kernel(n, rho);
    const Eigen::MatrixXd ainv = detail::spd_inverse(a);
    const Eigen::MatrixXd v = detail::spd_inverse(
        ainv + Eigen::MatrixXd::Identity(n, n) / delta2);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
    const double num = y.dot(ainv * (v * one));
    const double den = one.dot(one - (v * one) / delta2);
    if (std::abs(den) < 1e-12 * n)
        throw degenerate_error("gpp-iid bias-mean denominator vanishes");
    GppHyper h;
    h.rho = rho;
    h.delta2 = delta2;
    h.gamma = num / den;
    h.sigma2 = gpp_estimate_sigma2_nobias(y, rho) / (1.0 + delta2);
    detail::moment_alpha_beta(h.sigma2, h.gamma * h.gamma, delta2, n, h);
    return h;
}

// Literal evaluation of the partitioned predictive: builds the (n+1)-dim
// V, Gamma1, Gamma2 and splits at the last index. gamma_vec has length n+1.
inline StudentPredictive gpp_bias_predict(const Eigen::VectorXd& y, double rho,
                                          double delta2,
                                          const Eigen::VectorXd& gamma_vec,
                                          double alpha, double beta) {
    const int n = static_cast<int>(y.size());
    if (n < 1) throw not_ready_error("gpp bias predictive needs n >= 1");
    if (gamma_vec.size() != n + 1) throw parameter_error("bias vector must have length n+1");
    if (!(delta2 > 0.0)) throw parameter_error("delta2 must be positive");
    const int m = n + 1;
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(m, m) + build_ar1_kernel(m, rho);
    const Eigen::MatrixXd ainv = detail::spd_inverse(a);
    const Eigen::MatrixXd v = detail::spd_inverse(
        ainv + Eigen::MatrixXd::Identity(m, m) / delta2);
    const Eigen::MatrixXd g1m = ainv - ainv * v * ainv;       // Gamma1
    const Eigen::VectorXd g2m = (ainv * (v * gamma_vec)) / delta2;  // Gamma2
    const double g1 = g1m(n, n);
    if (!(g1 > 0.0)) throw numeric_error("gpp predictive curvature not positive");
    const Eigen::VectorXd g1n = g1m.topRightCorner(n, 1);
    const double g2 = g2m(n);
    // gamma-only constant of the exponent; see the conditional-t identity
    // beta* = beta + (1/2)(y - gamma)' M11^{-1} (y - gamma), M = I + K + delta2 I
    const double delta_term = 0.5 * gamma_vec.dot(g1m * gamma_vec);
    const double lin = g2 - y.dot(g1n);
    StudentPredictive out;
    out.location = lin / g1;
    const double a2 = 0.5 * y.dot(g1m.topLeftCorner(n, n) * y) -
                      y.dot(g2m.head(n)) + delta_term - lin * lin / (2.0 * g1);
    out.scale_param = (beta + a2) / 2.0;
    out.dof = 2.0 * alpha + n;
    if (!(out.scale_param > 0.0)) throw numeric_error("gpp predictive scale not positive");
    return out;
}

inline StudentPredictive gpp_iid_predict(const Eigen::VectorXd& y, const GppHyper& h) {
    const Eigen::VectorXd gv =
        Eigen::VectorXd::Constant(y.size() + 1, h.gamma);
    return gpp_bias_predict(y, h.rho, h.delta2, gv, h.alpha, h.beta);
}

// Bias-vector MLE of the INID model, evaluated exactly as written.
inline Eigen::VectorXd gpp_inid_gamma(const Eigen::VectorXd& y, double rho, double delta2) {
    const int n = static_cast<int>(y.size());
    if (n < 1) throw not_ready_error("gpp-inid bias needs n >= 1");
    if (!(delta2 > 0.0)) throw parameter_error("delta2 must be positive");
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) + build_ar1_kernel(n, rho);
    const Eigen::MatrixXd ainv = detail::spd_inverse(a);
    const Eigen::MatrixXd v = detail::spd_inverse(
        ainv + Eigen::MatrixXd::Identity(n, n) / delta2);
    const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(n, n) - v / delta2;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(lhs);
    if (!lu.isInvertible()) throw degenerate_error("gpp-inid system singular");
    return lu.solve(ainv * (v * y));
}

inline GppHyper gpp_inid_hyperparams(const Eigen::VectorXd& y, double rho, double delta2) {
    const int n = static_cast<int>(y.size());
    if (n < 3) throw not_ready_error("gpp-inid hyperparameters need n >= 3");
    GppHyper h;
    h.rho = rho;
    h.delta2 = delta2;
    h.gamma_vec = gpp_inid_gamma(y, rho, delta2);
    h.gamma = h.gamma_vec.mean();
    const double s2p = gpp_estimate_sigma2_nobias(y, rho);
    const double s2g = detail::sample_variance(h.gamma_vec);
    double plug;  // sigma2 used in the (alpha, beta) moment match
    if (s2p - s2g >= 0.0) {
        h.sigma2 = (s2p - s2g) / (1.0 + delta2);
        plug = h.sigma2;
    } else {
        h.sigma2 = 0.0;
        h.sigma2_clamped = true;
        plug = s2p / (1.0 + delta2);
    }
    detail::moment_alpha_beta(plug, h.gamma * h.gamma, delta2, n, h);
    return h;
}

inline StudentPredictive gpp_inid_predict(const Eigen::VectorXd& y, double rho,
                                          double delta2) {
    const GppHyper h = gpp_inid_hyperparams(y, rho, delta2);
    Eigen::VectorXd gv(y.size() + 1);
    gv.head(y.size()) = h.gamma_vec;
    gv(y.size()) = h.gamma;  // appended future bias = mean of the fitted biases
    return gpp_bias_predict(y, rho, delta2, gv, h.alpha, h.beta);
}

// Per-dimension workspace so the per-step cost of the streaming predictors is
// a few matrix-vector products. Rebuilt only when the sample size changes.
struct GppCache {
    int n = -1;
    double rho = 0.0, delta2 = 0.0;

    Eigen::MatrixXd sqrt_a;        // (I+K_n)^{1/2}
    Eigen::VectorXd gamma_num;     // A_n^{-1} V_n 1
    double gamma_den = 0.0;        // 1'(I - V_n/delta2)1
    Eigen::MatrixXd inid_w;        // (I - V/delta2)^{-1} A^{-1} V
    Eigen::MatrixXd g1m;           // Gamma1 over n+1
    Eigen::MatrixXd b;             // (1/delta2) A_{n+1}^{-1} V_{n+1}
    Eigen::VectorXd b_one;         // b * 1_{n+1}
    Eigen::VectorXd g1n;           // top-right column of g1m
    double g1 = 0.0;
    Eigen::VectorXd nobias_w;      // (K11+I)^{-1} K12
    double nobias_c = 0.0;

    void ensure(int dim, double rho_, double delta2_) {
        if (dim == n && rho_ == rho && delta2_ == delta2) return;
        if (dim < 1) throw not_ready_error("gpp cache needs n >= 1");
        n = dim;
        rho = rho_;
        delta2 = delta2_;
        const Eigen::MatrixXd an =
            Eigen::MatrixXd::Identity(n, n) + build_ar1_kernel(n, rho);
        sqrt_a = detail::sym_sqrt(an);
        const Eigen::MatrixXd an_inv = detail::spd_inverse(an);
        const Eigen::MatrixXd vn = detail::spd_inverse(
            an_inv + Eigen::MatrixXd::Identity(n, n) / delta2);
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(n);
        gamma_num = an_inv * (vn * one);
        gamma_den = one.dot(one - (vn * one) / delta2);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(n, n) -
                                             vn / delta2);
        if (!lu.isInvertible()) throw degenerate_error("gpp-inid system singular");
        inid_w = lu.solve(an_inv * vn);

        const int m = n + 1;
        const Eigen::MatrixXd am =
            Eigen::MatrixXd::Identity(m, m) + build_ar1_kernel(m, rho);
        const Eigen::MatrixXd am_inv = detail::spd_inverse(am);
        const Eigen::MatrixXd vm = detail::spd_inverse(
            am_inv + Eigen::MatrixXd::Identity(m, m) / delta2);
        g1m = am_inv - am_inv * vm * am_inv;
        b = (am_inv * vm) / delta2;
        b_one = b * Eigen::VectorXd::Ones(m);
        g1 = g1m(n, n);
        if (!(g1 > 0.0)) throw numeric_error("gpp predictive curvature not positive");
        g1n = g1m.topRightCorner(n, 1);

        const Eigen::MatrixXd k11 = am.topLeftCorner(n, n) -
                                    Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd k12 = am.topRightCorner(n, 1);
        Eigen::LLT<Eigen::MatrixXd> llt(k11 + Eigen::MatrixXd::Identity(n, n));
        if (llt.info() != Eigen::Success) throw numeric_error("gpp-nobias solve failed");
        nobias_w = llt.solve(k12);
        nobias_c = (am(n, n) - 1.0 + 1.0) - k12.dot(nobias_w);
    }

    double sigma2_nobias(const Eigen::VectorXd& y) const {
        return detail::sample_variance(sqrt_a * y);
    }

    StudentPredictive bias_predict(const Eigen::VectorXd& y,
                                   const Eigen::VectorXd& gamma_vec,
                                   double alpha, double beta) const {
        const Eigen::VectorXd g2m = b * gamma_vec;
        const double g2 = g2m(n);
        const double lin = g2 - y.dot(g1n);
        const double delta_term = 0.5 * gamma_vec.dot(g1m * gamma_vec);
        StudentPredictive out;
        out.location = lin / g1;
        const double a2 = 0.5 * y.dot(g1m.topLeftCorner(n, n) * y) -
                          y.dot(g2m.head(n)) + delta_term - lin * lin / (2.0 * g1);
        out.scale_param = (beta + a2) / 2.0;
        out.dof = 2.0 * alpha + n;
        if (!(out.scale_param > 0.0))
            throw numeric_error("gpp predictive scale not positive");
        return out;
    }
};

}  // namespace streampred
