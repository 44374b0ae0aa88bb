// The twelve benchmark method configurations behind the common Predictor
// contract, plus their parameter block and factory.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <memory>
#include <vector>

#include "streampred/conformal.hpp"
#include "streampred/core.hpp"
#include "streampred/dirichlet.hpp"
#include "streampred/gpp.hpp"
#include "streampred/repset.hpp"
#include "streampred/shtarkov.hpp"
#include "streampred/sketch.hpp"

namespace streampred {

struct MethodParams {
    // shtarkov (normal experts)
    std::string normal_variant = "freq-both-unknown";
    double mu = 0.0, sigma2 = 1.0, mu0 = 0.0, sigma02 = 1.0;
    double prior_alpha = 1.0, prior_beta = 1.0;
    // gpp
    double rho = 0.8;
    double delta = 0.1;  // bias prior scale; delta^2 enters the formulas
    int refresh_stride = 1;
    // dpp
    double dpp_mass = 1.0;
    double rounding_grid = 0.0;  // 0 = off
    // sketch
    int d = 25;
    int V = 50;
    int K_int = 200;
    double sketch_M = 0.0;  // 0 = estimate as 1.5 x burn-in maximum
    // repset
    std::size_t K_rep = 200;
    // conformal
    std::string conformity = "bayes-posterior";
    double conf_alpha = 0.15;
    std::size_t conf_grid = 512;
    double conf_mu = std::numeric_limits<double>::quiet_NaN();  // NaN = burn-in mean
    double conf_tau2 = 1.0, conf_a = 1.0, conf_b = 1.0;
};

namespace detail {

// Optional repset substitution: either the raw running state or the current
// centers in slot order.
class RepSetFeed {
public:
    explicit RepSetFeed(std::size_t k) : rs_(k) {}
    void add(double y) { rs_.update(y); }
    const std::vector<double>& centers() const { return rs_.centers(); }

private:
    RepSet rs_;
};

}  // namespace detail

class ShtNormalPredictor final : public Predictor {
public:
    ShtNormalPredictor(const PredictorId& id, const MethodParams& p)
        : id_(id), params_(p) {
        state_.variant = parse_normal_variant(p.normal_variant);
        state_.mu = p.mu;
        state_.sigma2 = p.sigma2;
        state_.mu0 = p.mu0;
        state_.sigma02 = p.sigma02;
        state_.alpha = p.prior_alpha;
        state_.beta = p.prior_beta;
        state_.validate();
        if (id.uses_repset) rep_.emplace(p.K_rep);
    }
    const PredictorId& id() const override { return id_; }

protected:
    void do_update(const Observation& obs) override {
        if (rep_)
            rep_->add(obs.value);
        else
            state_.update(obs.value);
    }
    Prediction do_predict() const override {
        if (!rep_) return {.point = sht_normal_predict(state_)};
        ShtarkovNormalState s = state_;
        s.n = 0;
        s.mean = 0.0;
        for (double c : rep_->centers()) s.update(c);
        return {.point = sht_normal_predict(s)};
    }

private:
    PredictorId id_;
    MethodParams params_;
    ShtarkovNormalState state_;
    std::optional<detail::RepSetFeed> rep_;
};

class DppPredictor final : public Predictor {
public:
    DppPredictor(const PredictorId& id, const MethodParams& p) : id_(id) {
        state_.M = p.dpp_mass;
        state_.rounding_grid = p.rounding_grid;
        if (id.uses_repset) rep_.emplace(p.K_rep);
        mass_ = p.dpp_mass;
    }
    const PredictorId& id() const override { return id_; }

protected:
    void do_update(const Observation& obs) override {
        if (rep_)
            rep_->add(obs.value);
        else
            dpp_update(state_, obs.value);
    }
    Prediction do_predict() const override {
        if (!rep_) return {.point = dpp_predict(state_)};
        return {.point = dpp_predict_over(rep_->centers(), mass_)};
    }

private:
    PredictorId id_;
    DppState state_;
    double mass_ = 1.0;
    std::optional<detail::RepSetFeed> rep_;
};

// Count-Min mean / median, one-pass or over the representative set. The
// one-pass form buffers the burn-in prefix until the range bound M is fixed
// (1.5 x burn-in maximum) unless M is configured explicitly.
class CmPredictor final : public Predictor {
public:
    CmPredictor(const PredictorId& id, const MethodParams& p, std::uint64_t seed,
                std::size_t burnin_count)
        : id_(id), params_(p), burnin_count_(std::max<std::size_t>(burnin_count, 1)) {
        hashes_ = sample_hash_family(p.d, p.V, static_cast<std::uint64_t>(p.K_int), seed);
        if (id.uses_repset) rep_.emplace(p.K_rep);
        if (!id.uses_repset && p.sketch_M > 0.0)
            table_.emplace(hashes_, p.K_int, p.sketch_M);
    }
    const PredictorId& id() const override { return id_; }

    std::uint64_t clamped_low() const { return table_ ? table_->clamped_low : 0; }
    std::uint64_t clamped_high() const { return table_ ? table_->clamped_high : 0; }
    double range_bound() const { return table_ ? table_->M : 0.0; }

protected:
    void do_update(const Observation& obs) override {
        if (rep_) {
            rep_->add(obs.value);
            return;
        }
        if (table_) {
            cm_update(*table_, obs.value);
            return;
        }
        buffer_.push_back(obs.value);
        if (buffer_.size() >= burnin_count_) {
            table_.emplace(hashes_, params_.K_int, auto_bound(buffer_));
            for (double v : buffer_) cm_update(*table_, v);
            buffer_.clear();
            buffer_.shrink_to_fit();
        }
    }

    Prediction do_predict() const override {
        if (rep_) {
            const auto& c = rep_->centers();
            if (c.empty()) throw not_ready_error("cm: representative set empty");
            const double m =
                params_.sketch_M > 0.0 ? params_.sketch_M : auto_bound(c);
            CountMinTable t(hashes_, params_.K_int, m);
            for (double v : c) cm_update(t, v);
            return {.point = evaluate(t)};
        }
        if (!table_) throw not_ready_error("cm: range bound not fixed yet");
        return {.point = evaluate(*table_)};
    }

private:
    static double auto_bound(const std::vector<double>& v) {
        const double mx = *std::max_element(v.begin(), v.end());
        return mx > 0.0 ? 1.5 * mx : 1.0;
    }
    double evaluate(const CountMinTable& t) const {
        const Eedf e = eedf_build(t);
        return id_.family == Family::cm_mean ? cm_mean_predict(e)
                                             : cm_median_predict(e);
    }

    PredictorId id_;
    MethodParams params_;
    std::size_t burnin_count_;
    HashFamily hashes_;
    std::vector<double> buffer_;
    std::optional<CountMinTable> table_;
    std::optional<detail::RepSetFeed> rep_;
};

class GppPredictor final : public Predictor {
public:
    GppPredictor(const PredictorId& id, const MethodParams& p)
        : id_(id), params_(p), rep_(p.K_rep) {
        if (!(p.refresh_stride >= 1)) throw parameter_error("refresh stride must be >= 1");
    }
    const PredictorId& id() const override { return id_; }

protected:
    void do_update(const Observation& obs) override { rep_.add(obs.value); }

    Prediction do_predict() const override {
        const auto& c = rep_.centers();
        const int n = static_cast<int>(c.size());
        const int min_n = id_.family == Family::gpp_nobias ? 2 : 3;
        if (n < min_n) throw not_ready_error("gpp: too few representative points");
        const double delta2 = params_.delta * params_.delta;
        cache_.ensure(n, params_.rho, delta2);
        Eigen::Map<const Eigen::VectorXd> y(c.data(), n);

        if (id_.family == Family::gpp_nobias) {
            return {.point = cache_.nobias_w.dot(y)};
        }
        if (id_.family == Family::gpp_iid) {
            refresh([&] {
                if (std::abs(cache_.gamma_den) < 1e-12 * n)
                    throw degenerate_error("gpp-iid bias-mean denominator vanishes");
                hyper_.rho = params_.rho;
                hyper_.delta2 = delta2;
                hyper_.gamma = y.dot(cache_.gamma_num) / cache_.gamma_den;
                hyper_.sigma2 = cache_.sigma2_nobias(y) / (1.0 + delta2);
                gpp_moment_refresh(n);
            });
            const Eigen::VectorXd gv = Eigen::VectorXd::Constant(n + 1, hyper_.gamma);
            return {.point = cache_.bias_predict(y, gv, hyper_.alpha, hyper_.beta).location};
        }
        // INID
        refresh([&] {
            hyper_.rho = params_.rho;
            hyper_.delta2 = delta2;
            hyper_.gamma_vec = cache_.inid_w * y;
            hyper_.gamma = hyper_.gamma_vec.mean();
            const double s2p = cache_.sigma2_nobias(y);
            const double s2g = streampred::detail::sample_variance(hyper_.gamma_vec);
            double plug;
            if (s2p - s2g >= 0.0) {
                hyper_.sigma2 = (s2p - s2g) / (1.0 + delta2);
                hyper_.sigma2_clamped = false;
                plug = hyper_.sigma2;
            } else {
                hyper_.sigma2 = 0.0;
                hyper_.sigma2_clamped = true;
                plug = s2p / (1.0 + delta2);
            }
            streampred::detail::moment_alpha_beta(plug, hyper_.gamma * hyper_.gamma,
                                                  delta2, n, hyper_);
        });
        if (hyper_.gamma_vec.size() != n)
            throw numeric_error("gpp-inid cached bias has stale dimension");
        Eigen::VectorXd gv(n + 1);
        gv.head(n) = hyper_.gamma_vec;
        gv(n) = hyper_.gamma;
        return {.point = cache_.bias_predict(y, gv, hyper_.alpha, hyper_.beta).location};
    }

private:
    void gpp_moment_refresh(int n) const {
        streampred::detail::moment_alpha_beta(hyper_.sigma2,
                                              hyper_.gamma * hyper_.gamma,
                                              hyper_.delta2, n, hyper_);
    }
    template <class F>
    void refresh(F&& fit) const {
        if (calls_ % static_cast<std::uint64_t>(params_.refresh_stride) == 0 ||
            !hyper_ready_) {
            fit();
            hyper_ready_ = true;
        }
        ++calls_;
    }

    PredictorId id_;
    MethodParams params_;
    detail::RepSetFeed rep_;
    mutable GppCache cache_;
    mutable GppHyper hyper_;
    mutable bool hyper_ready_ = false;
    mutable std::uint64_t calls_ = 0;
};

class ConformalPredictor final : public Predictor {
public:
    ConformalPredictor(const PredictorId& id, const MethodParams& p,
                       std::size_t burnin_count)
        : id_(id), params_(p), rep_(p.K_rep),
          burnin_count_(std::max<std::size_t>(burnin_count, 1)) {
        measure_.kind = parse_conformity(p.conformity);
        measure_.tau2 = p.conf_tau2;
        measure_.a = p.conf_a;
        measure_.b = p.conf_b;
        measure_.validate();
    }
    const PredictorId& id() const override { return id_; }

protected:
    void do_update(const Observation& obs) override {
        rep_.add(obs.value);
        if (seen_ < burnin_count_) {
            ++seen_;
            burnin_mean_ += (obs.value - burnin_mean_) / static_cast<double>(seen_);
        }
    }
    Prediction do_predict() const override {
        const auto& c = rep_.centers();
        if (c.size() < 2) throw not_ready_error("conformal: too few representative points");
        ConformityMeasure m = measure_;
        m.mu = std::isnan(params_.conf_mu) ? burnin_mean_ : params_.conf_mu;
        const auto grid = conformal_default_grid(c, params_.conf_grid);
        const ConformalResult r = conformal_pi(c, m, params_.conf_alpha, grid);
        Prediction pr;
        pr.point = r.point;
        pr.interval = std::make_pair(r.lower, r.upper);
        return pr;
    }

private:
    PredictorId id_;
    MethodParams params_;
    detail::RepSetFeed rep_;
    std::size_t burnin_count_;
    std::size_t seen_ = 0;
    double burnin_mean_ = 0.0;
    ConformityMeasure measure_;
};

inline std::unique_ptr<Predictor> make_predictor(const PredictorId& id,
                                                 const MethodParams& p,
                                                 std::uint64_t seed,
                                                 std::size_t burnin_count) {
    if (!is_legal_id(id))
        throw config_error("illegal method configuration: " + method_label(id));
    switch (id.family) {
        case Family::shtarkov:
            return std::make_unique<ShtNormalPredictor>(id, p);
        case Family::dpp:
            return std::make_unique<DppPredictor>(id, p);
        case Family::cm_mean:
        case Family::cm_median:
            return std::make_unique<CmPredictor>(id, p, seed, burnin_count);
        case Family::gpp_nobias:
        case Family::gpp_iid:
        case Family::gpp_inid:
            return std::make_unique<GppPredictor>(id, p);
        case Family::conformal:
            return std::make_unique<ConformalPredictor>(id, p, burnin_count);
    }
    throw config_error("unknown family");
}

}  // namespace streampred
