// Fixed-cardinality representative subset via sequential K-means.
// Fill phase takes the first K distinct values in arrival order; afterwards
// each token moves its nearest center by a running-mean step.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "streampred/core.hpp"

namespace streampred {

class RepSet {
public:
    explicit RepSet(std::size_t k) : k_(k) {
        if (k == 0) throw parameter_error("repset cardinality must be positive");
        centers_.reserve(k);
        counts_.reserve(k);
    }

    void update(double y) {
        if (!std::isfinite(y)) throw ingestion_error("non-finite repset token");
        if (centers_.size() < k_) {
            for (double c : centers_)
                if (c == y) return;  // duplicates skipped during fill
            centers_.push_back(y);
            counts_.push_back(1);
            return;
        }
        std::size_t best = 0;
        double best_dist = std::abs(y - centers_[0]);
        for (std::size_t i = 1; i < centers_.size(); ++i) {
            const double d = std::abs(y - centers_[i]);
            if (d < best_dist) {  // ties keep the lower-indexed slot
                best_dist = d;
                best = i;
            }
        }
        counts_[best] += 1;
        centers_[best] += (y - centers_[best]) / static_cast<double>(counts_[best]);
    }

    bool initialized() const { return centers_.size() == k_; }
    std::size_t capacity() const { return k_; }
    const std::vector<double>& centers() const { return centers_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
    std::size_t k_;
    std::vector<double> centers_;        // slot order = arrival order of fill
    std::vector<std::uint64_t> counts_;
};

}  // namespace streampred
