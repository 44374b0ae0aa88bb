// Pairwise-independent hash family, Count-Min sketch over a discretized
// range (0, M], the EEDF it induces, and the weighted mean / weighted median
// point predictors.
#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "streampred/core.hpp"

namespace streampred {

namespace detail {
inline bool is_prime(std::uint64_t v) {
    if (v < 2) return false;
    for (std::uint64_t d = 2; d * d <= v; ++d)
        if (v % d == 0) return false;
    return true;
}

inline std::uint64_t next_prime_above(std::uint64_t v) {
    // keep a*k < p^2 inside 64 bits
    constexpr std::uint64_t overflow_bound = (1ull << 32);
    for (std::uint64_t p = v + 1; p < overflow_bound; ++p)
        if (is_prime(p)) return p;
    throw parameter_error("no prime found below overflow bound");
}
}  // namespace detail

// h_j(k) = ((a_j k + b_j) mod p) mod V + 1, or an explicitly injected table
// (used by the worked-example tests).
struct HashFamily {
    int d = 0;
    int V = 0;
    std::uint64_t p = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::uint64_t, std::uint64_t>> coeffs;  // (a_j, b_j)
    std::vector<std::vector<int>> table;  // d x U when injected, else empty

    bool injected() const { return !table.empty(); }

    int operator()(int j, std::uint64_t k) const {
        if (injected()) {
            if (k == 0 || k > table[static_cast<std::size_t>(j)].size())
                throw parameter_error("hash key outside injected table domain");
            return table[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)];
        }
        const auto& [a, b] = coeffs[static_cast<std::size_t>(j)];
        return static_cast<int>(((a * k + b) % p) % static_cast<std::uint64_t>(V)) + 1;
    }

    bool operator==(const HashFamily&) const = default;
};

inline HashFamily sample_hash_family(int d, int V, std::uint64_t K_int, std::uint64_t seed) {
    if (d < 1) throw parameter_error("hash family needs d >= 1");
    if (V < 2) throw parameter_error("hash family needs V >= 2");
    if (K_int < static_cast<std::uint64_t>(V)) throw parameter_error("need K_int >= V");
    HashFamily h;
    h.d = d;
    h.V = V;
    h.seed = seed;
    h.p = detail::next_prime_above(K_int);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint64_t> da(1, h.p - 1);
    std::uniform_int_distribution<std::uint64_t> db(0, h.p - 1);
    h.coeffs.reserve(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) h.coeffs.emplace_back(da(rng), db(rng));
    return h;
}

inline HashFamily inject_hash_table(std::vector<std::vector<int>> rows, int V) {
    if (rows.empty()) throw parameter_error("injected hash table must be nonempty");
    HashFamily h;
    h.d = static_cast<int>(rows.size());
    h.V = V;
    h.p = 0;
    for (const auto& row : rows) {
        if (row.size() != rows[0].size())
            throw parameter_error("ragged injected hash table");
        for (int v : row)
            if (v < 1 || v > V) throw parameter_error("injected hash value outside 1..V");
    }
    h.table = std::move(rows);
    return h;
}

struct CountMinTable {
    HashFamily hashes;
    int K_int = 0;
    double M = 0.0;  // range is (0, M]
    std::vector<std::uint64_t> counts;  // d x V, row-major
    std::uint64_t n = 0;
    std::uint64_t clamped_low = 0;
    std::uint64_t clamped_high = 0;

    CountMinTable() = default;
    CountMinTable(HashFamily h, int k_int, double m)
        : hashes(std::move(h)), K_int(k_int), M(m) {
        if (K_int < 1) throw parameter_error("K_int must be positive");
        if (!(M > 0.0)) throw parameter_error("range bound M must be positive");
        counts.assign(static_cast<std::size_t>(hashes.d) * hashes.V, 0);
    }

    std::uint64_t& cell(int j, int v) {
        return counts[static_cast<std::size_t>(j) * hashes.V + (v - 1)];
    }
    std::uint64_t cell(int j, int v) const {
        return counts[static_cast<std::size_t>(j) * hashes.V + (v - 1)];
    }

    // Interval index for a value, clamping out-of-range tokens into the
    // first / last interval.
    int interval_of(double y) {
        if (y <= 0.0) {
            ++clamped_low;
            return 1;
        }
        if (y > M) {
            ++clamped_high;
            return K_int;
        }
        int k = static_cast<int>(std::ceil(y * K_int / M));
        if (k < 1) k = 1;
        if (k > K_int) k = K_int;
        return k;
    }

    double midpoint(int k) const { return (k - 0.5) * M / K_int; }
};

inline void cm_update_interval(CountMinTable& t, int k) {
    if (k < 1 || k > t.K_int) throw parameter_error("interval index out of range");
    for (int j = 0; j < t.hashes.d; ++j)
        t.cell(j, t.hashes(j, static_cast<std::uint64_t>(k))) += 1;
    ++t.n;
}

inline void cm_update(CountMinTable& t, double y) {
    if (!std::isfinite(y)) throw ingestion_error("non-finite sketch token");
    cm_update_interval(t, t.interval_of(y));
}

inline std::uint64_t cm_estimate(const CountMinTable& t, int k) {
    if (k < 1 || k > t.K_int) throw parameter_error("interval index out of range");
    std::uint64_t m = UINT64_MAX;
    for (int j = 0; j < t.hashes.d; ++j) {
        const std::uint64_t c = t.cell(j, t.hashes(j, static_cast<std::uint64_t>(k)));
        if (c < m) m = c;
    }
    return m;
}

struct Eedf {
    std::vector<double> weights;    // a-hat_k / n (may sum above 1)
    std::vector<double> midpoints;  // (k - 1/2) M / K
    double interval_width = 0.0;
};

inline Eedf eedf_build(const CountMinTable& t) {
    if (t.n == 0) throw not_ready_error("eedf: empty sketch");
    Eedf e;
    e.weights.reserve(static_cast<std::size_t>(t.K_int));
    e.midpoints.reserve(static_cast<std::size_t>(t.K_int));
    e.interval_width = t.M / t.K_int;
    for (int k = 1; k <= t.K_int; ++k) {
        e.weights.push_back(static_cast<double>(cm_estimate(t, k)) /
                            static_cast<double>(t.n));
        e.midpoints.push_back(t.midpoint(k));
    }
    return e;
}

// EEDF evaluated at x: total weight of intervals lying fully at or below x.
inline double eedf_cdf(const Eedf& e, double x) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.weights.size(); ++k) {
        const double upper = (static_cast<double>(k) + 1.0) * e.interval_width;
        if (upper <= x) s += e.weights[k];
    }
    return s;
}

inline double cm_mean_predict(const Eedf& e) {
    double s = 0.0;
    for (std::size_t k = 0; k < e.weights.size(); ++k)
        s += e.midpoints[k] * e.weights[k];
    return s;
}

// Weighted median of the interval midpoints. The defining inequalities admit
// several q at exact cumulative-half ties; the first strict crossing of 1/2
// is used, with the q=1 boundary returning m_1.
inline double cm_median_predict(const Eedf& e) {
    double total = 0.0;
    for (double w : e.weights) total += w;
    if (total <= 0.0) throw degenerate_error("weighted median of all-zero weights");
    double cum = 0.0;
    for (std::size_t q = 0; q < e.weights.size(); ++q) {
        cum += e.weights[q] / total;
        if (cum > 0.5) {
            if (q == 0) return e.midpoints[0];
            return 0.5 * (e.midpoints[q - 1] + e.midpoints[q]);
        }
    }
    return e.midpoints.back();  // unreachable barring rounding
}

// Flat text dump: header, hash coefficients (or injected table), then the
// row-major counter matrix. Two dumps of sketches built with identical hash
// configuration can be merged by elementwise addition.
inline std::string cm_serialize(const CountMinTable& t) {
    std::ostringstream os;
    os.precision(17);
    os << "cmsketch 1\n";
    os << t.hashes.d << ' ' << t.hashes.V << ' ' << t.K_int << ' ' << t.M << ' '
       << t.n << ' ' << t.clamped_low << ' ' << t.clamped_high << ' '
       << t.hashes.p << ' ' << t.hashes.seed << ' '
       << (t.hashes.injected() ? "table" : "coeffs") << '\n';
    if (t.hashes.injected()) {
        os << t.hashes.table[0].size() << '\n';
        for (const auto& row : t.hashes.table) {
            for (std::size_t i = 0; i < row.size(); ++i)
                os << (i ? " " : "") << row[i];
            os << '\n';
        }
    } else {
        for (const auto& [a, b] : t.hashes.coeffs) os << a << ' ' << b << '\n';
    }
    for (int j = 0; j < t.hashes.d; ++j) {
        for (int v = 1; v <= t.hashes.V; ++v) os << (v > 1 ? " " : "") << t.cell(j, v);
        os << '\n';
    }
    return os.str();
}

inline CountMinTable cm_deserialize(const std::string& text) {
    std::istringstream is(text);
    std::string magic;
    int version = 0;
    is >> magic >> version;
    if (magic != "cmsketch" || version != 1)
        throw data_error("unrecognized sketch dump header");
    HashFamily h;
    int k_int = 0;
    double m = 0.0;
    std::uint64_t n = 0, cl = 0, ch = 0;
    std::string mode;
    is >> h.d >> h.V >> k_int >> m >> n >> cl >> ch >> h.p >> h.seed >> mode;
    if (!is) throw data_error("truncated sketch dump");
    if (mode == "table") {
        std::size_t domain = 0;
        is >> domain;
        h.table.assign(static_cast<std::size_t>(h.d), std::vector<int>(domain));
        for (auto& row : h.table)
            for (auto& v : row) is >> v;
    } else {
        h.coeffs.resize(static_cast<std::size_t>(h.d));
        for (auto& [a, b] : h.coeffs) is >> a >> b;
    }
    CountMinTable t(std::move(h), k_int, m);
    t.n = n;
    t.clamped_low = cl;
    t.clamped_high = ch;
    for (auto& c : t.counts) is >> c;
    if (!is) throw data_error("truncated sketch dump");
    return t;
}

inline CountMinTable cm_merge(const CountMinTable& a, const CountMinTable& b) {
    if (!(a.hashes == b.hashes) || a.K_int != b.K_int || a.M != b.M)
        throw parameter_error("cannot merge sketches with different configurations");
    CountMinTable out = a;
    for (std::size_t i = 0; i < out.counts.size(); ++i) out.counts[i] += b.counts[i];
    out.n += b.n;
    out.clamped_low += b.clamped_low;
    out.clamped_high += b.clamped_high;
    return out;
}

}  // namespace streampred
