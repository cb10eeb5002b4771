#include "pcf/knn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <utility>

namespace pcf::knn {

namespace {

using Candidate = std::pair<double, std::size_t>;

// Max-heap on (distance, index) holding the k best candidates seen so far.
class BestK {
public:
    explicit BestK(std::size_t k) : k_(k) {}

    void offer(double d2, std::size_t idx) {
        const Candidate c{d2, idx};
        if (heap_.size() < k_) {
            heap_.push(c);
        } else if (c < heap_.top()) {
            heap_.pop();
            heap_.push(c);
        }
    }
    bool full() const { return heap_.size() == k_; }
    double worst() const { return heap_.top().first; }

    std::vector<std::size_t> sorted_indices() {
        std::vector<Candidate> all;
        all.reserve(heap_.size());
        while (!heap_.empty()) {
            all.push_back(heap_.top());
            heap_.pop();
        }
        std::sort(all.begin(), all.end());
        std::vector<std::size_t> out(all.size());
        std::transform(all.begin(), all.end(), out.begin(), [](const Candidate& c) { return c.second; });
        return out;
    }

private:
    std::size_t k_;
    std::priority_queue<Candidate> heap_;
};

}  // namespace

std::vector<std::size_t> query_brute_force(const FeatureMatrix& points, std::span<const double> q, std::size_t k) {
    BestK best(k);
    for (std::size_t i = 0; i < points.rows; ++i) best.offer(squared_distance(points.row(i), q), i);
    return best.sorted_indices();
}

SortedIndex::SortedIndex(const FeatureMatrix& points) : order_(points.rows), key_(points.rows) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t l, std::size_t r) { return points.row(l)[0] < points.row(r)[0]; });
    for (std::size_t i = 0; i < order_.size(); ++i) key_[i] = points.row(order_[i])[0];
}

std::vector<std::size_t> SortedIndex::query(const FeatureMatrix& points, std::span<const double> q,
                                            std::size_t k) const {
    BestK best(k);
    const double q0 = q[0];
    const std::size_t n = order_.size();
    std::size_t right = static_cast<std::size_t>(std::lower_bound(key_.begin(), key_.end(), q0) - key_.begin());
    std::size_t left = right;  // next candidate on the left is left - 1
    while (left > 0 || right < n) {
        const double gap_left = left > 0 ? q0 - key_[left - 1] : INFINITY;
        const double gap_right = right < n ? key_[right] - q0 : INFINITY;
        const bool take_left = gap_left <= gap_right;
        const double gap = take_left ? gap_left : gap_right;
        // strict: an equal gap may still hide an equal distance with a lower index
        if (best.full() && gap * gap > best.worst()) break;
        const std::size_t pos = take_left ? --left : right++;
        const std::size_t idx = order_[pos];
        best.offer(squared_distance(points.row(idx), q), idx);
    }
    return best.sorted_indices();
}

double neighbor_mean(std::span<const std::size_t> neighbors, std::span<const double> labels) {
    double s = 0.0;
    for (std::size_t idx : neighbors) s += labels[idx];
    return s / static_cast<double>(neighbors.size());
}

namespace serial {

std::vector<double> predict_batch(const FeatureMatrix& points, std::span<const double> labels,
                                  const FeatureMatrix& queries, std::size_t k) {
    std::vector<double> out(queries.rows);
    for (std::size_t i = 0; i < queries.rows; ++i) {
        const auto nb = query_brute_force(points, queries.row(i), k);
        out[i] = neighbor_mean(nb, labels);
    }
    return out;
}

std::vector<double> predict_batch(const FeatureMatrix& points, const SortedIndex& index,
                                  std::span<const double> labels, const FeatureMatrix& queries, std::size_t k) {
    std::vector<double> out(queries.rows);
    for (std::size_t i = 0; i < queries.rows; ++i) {
        out[i] = neighbor_mean(index.query(points, queries.row(i), k), labels);
    }
    return out;
}

}  // namespace serial

namespace parallel {

std::vector<double> predict_batch(const FeatureMatrix& points, const SortedIndex& index,
                                  std::span<const double> labels, const FeatureMatrix& queries, std::size_t k) {
    std::vector<double> out(queries.rows);
    const auto n = static_cast<std::ptrdiff_t>(queries.rows);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto nb = index.query(points, queries.row(static_cast<std::size_t>(i)), k);
        out[static_cast<std::size_t>(i)] = neighbor_mean(nb, labels);
    }
    return out;
}

}  // namespace parallel

}  // namespace pcf::knn
