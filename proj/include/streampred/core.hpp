// Sequential predictor contract shared by every method and the harness.
#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace streampred {

// Error taxonomy. The CLI maps these onto exit codes: config/parameter -> 1,
// ingestion/sequencing/data -> 2, numeric/degenerate/not-ready -> 3.
struct stream_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ingestion_error : stream_error {
    using stream_error::stream_error;
};
struct sequencing_error : stream_error {
    using stream_error::stream_error;
};
struct not_ready_error : stream_error {
    using stream_error::stream_error;
};
struct parameter_error : stream_error {
    using stream_error::stream_error;
};
struct numeric_error : stream_error {
    using stream_error::stream_error;
};
struct degenerate_error : stream_error {
    using stream_error::stream_error;
};
struct config_error : stream_error {
    using stream_error::stream_error;
};
struct data_error : stream_error {
    using stream_error::stream_error;
};

// One stream token. Indices are 1-based and must arrive consecutively.
struct Observation {
    std::uint64_t index = 0;
    double value = 0.0;
};

struct Prediction {
    std::uint64_t target_index = 0;
    double point = 0.0;
    std::optional<std::pair<double, double>> interval;  // (lower, upper)
};

enum class Family {
    shtarkov,
    gpp_nobias,
    gpp_iid,
    gpp_inid,
    dpp,
    cm_mean,
    cm_median,
    conformal,
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::shtarkov: return "shtarkov";
        case Family::gpp_nobias: return "gpp-nobias";
        case Family::gpp_iid: return "gpp-iid";
        case Family::gpp_inid: return "gpp-inid";
        case Family::dpp: return "dpp";
        case Family::cm_mean: return "cm-mean";
        case Family::cm_median: return "cm-median";
        case Family::conformal: return "conformal";
    }
    throw parameter_error("unknown family");
}

struct PredictorId {
    Family family = Family::shtarkov;
    std::string variant;
    bool uses_repset = false;

    bool operator==(const PredictorId&) const = default;
};

// The 12 method configurations of the benchmark, in table order.
inline const std::vector<PredictorId>& legal_ids() {
    static const std::vector<PredictorId> ids = {
        {Family::shtarkov, "normal", false},
        {Family::shtarkov, "normal", true},
        {Family::gpp_nobias, "", true},
        {Family::gpp_iid, "", true},
        {Family::gpp_inid, "", true},
        {Family::dpp, "", false},
        {Family::dpp, "", true},
        {Family::cm_mean, "", false},
        {Family::cm_mean, "", true},
        {Family::cm_median, "", false},
        {Family::cm_median, "", true},
        {Family::conformal, "bayes-posterior", true},
    };
    return ids;
}

inline bool is_legal_id(const PredictorId& id) {
    for (const auto& l : legal_ids())
        if (l == id) return true;
    return false;
}

// Short method label used for CLI selection and output directories.
inline std::string method_label(const PredictorId& id) {
    std::string base;
    switch (id.family) {
        case Family::shtarkov: base = "sht"; break;
        case Family::gpp_nobias: return "gpp-nobias";
        case Family::gpp_iid: return "gpp-iid";
        case Family::gpp_inid: return "gpp-inid";
        case Family::dpp: base = "dpp"; break;
        case Family::cm_mean: base = "cm-mean"; break;
        case Family::cm_median: base = "cm-median"; break;
        case Family::conformal: return "conformal";
    }
    return id.uses_repset ? base + "_rep" : base;
}

inline PredictorId id_from_label(const std::string& label) {
    for (const auto& id : legal_ids())
        if (method_label(id) == label) return id;
    throw config_error("unknown method name: " + label);
}

// Base class enforcing the update/predict contract: consecutive 1-based
// indices, finite tokens, pure predict.
class Predictor {
public:
    virtual ~Predictor() = default;

    void update(const Observation& obs) {
        if (!std::isfinite(obs.value))
            throw ingestion_error("non-finite token at index " + std::to_string(obs.index));
        if (obs.index != next_index_)
            throw sequencing_error("expected index " + std::to_string(next_index_) +
                                   ", got " + std::to_string(obs.index));
        do_update(obs);
        ++next_index_;
    }

    Prediction predict() const {
        Prediction p = do_predict();
        p.target_index = next_index_;
        if (!std::isfinite(p.point)) throw numeric_error("non-finite prediction");
        if (p.interval && p.interval->first > p.interval->second)
            throw numeric_error("inverted prediction interval");
        return p;
    }

    std::uint64_t next_index() const { return next_index_; }
    virtual const PredictorId& id() const = 0;

protected:
    virtual void do_update(const Observation& obs) = 0;
    virtual Prediction do_predict() const = 0;

private:
    std::uint64_t next_index_ = 1;
};

}  // namespace streampred
