#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pcf/features.hpp"

namespace pcf::knn {

/// Squared Euclidean distance, summed in coordinate order.
inline double squared_distance(std::span<const double> p, std::span<const double> q) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        const double d = p[j] - q[j];
        s += d * d;
    }
    return s;
}

/// Reference search: scans every training point. Neighbors are ordered by
/// (distance, training index), so ties go to the lowest index.
std::vector<std::size_t> query_brute_force(const FeatureMatrix& points, std::span<const double> q, std::size_t k);

/// Exact search over points sorted along the first feature. Walks outwards
/// from the query and stops once the first-coordinate gap alone exceeds the
/// current k-th distance. Returns the same neighbor list as the brute force.
class SortedIndex {
public:
    SortedIndex() = default;
    explicit SortedIndex(const FeatureMatrix& points);

    std::vector<std::size_t> query(const FeatureMatrix& points, std::span<const double> q, std::size_t k) const;

private:
    std::vector<std::size_t> order_;
    std::vector<double> key_;
};

/// Mean label of the k nearest neighbors, accumulated in neighbor order.
double neighbor_mean(std::span<const std::size_t> neighbors, std::span<const double> labels);

namespace serial {
std::vector<double> predict_batch(const FeatureMatrix& points, std::span<const double> labels,
                                  const FeatureMatrix& queries, std::size_t k);
std::vector<double> predict_batch(const FeatureMatrix& points, const SortedIndex& index,
                                  std::span<const double> labels, const FeatureMatrix& queries, std::size_t k);
}

namespace parallel {
std::vector<double> predict_batch(const FeatureMatrix& points, const SortedIndex& index,
                                  std::span<const double> labels, const FeatureMatrix& queries, std::size_t k);
}

}  // namespace pcf::knn
