#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwnn {

// A query point is a view over d contiguous coordinates.
using QueryPoint = std::span<const double>;

// Binary-labeled dataset with a row-major feature matrix.
struct Dataset {
    std::vector<double> features;  // n x d, row-major
    std::vector<int> labels;       // values in {0, 1}
    std::size_t n = 0;
    std::size_t d = 0;

    QueryPoint row(std::size_t i) const { return {features.data() + i * d, d}; }
};

inline double squared_distance(QueryPoint a, QueryPoint b) {
    if (a.size() != b.size())
        throw std::invalid_argument("squared_distance: dimension mismatch (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    double acc = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// Unchecked hot-path variant for callers that already validated dimensions.
inline double squared_distance_unchecked(const double* a, const double* b, std::size_t d) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = a[j] - b[j];
        acc += diff * diff;
    }
    return acc;
}

// Builds a Dataset from raw rows, rejecting ragged rows, non-finite values and
// non-binary labels. Error messages name the offending row.
inline Dataset validate_dataset(const std::vector<std::vector<double>>& rows,
                                const std::vector<int>& labels) {
    if (rows.empty()) throw std::invalid_argument("validate_dataset: no rows");
    if (rows.size() != labels.size())
        throw std::invalid_argument("validate_dataset: " + std::to_string(rows.size()) +
                                    " rows vs " + std::to_string(labels.size()) + " labels");
    const std::size_t d = rows.front().size();
    if (d == 0) throw std::invalid_argument("validate_dataset: row 0 has no features");

    Dataset out;
    out.n = rows.size();
    out.d = d;
    out.features.reserve(out.n * d);
    out.labels.reserve(out.n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != d)
            throw std::invalid_argument("validate_dataset: row " + std::to_string(i) +
                                        " has " + std::to_string(rows[i].size()) +
                                        " features, expected " + std::to_string(d));
        for (std::size_t j = 0; j < d; ++j) {
            if (!std::isfinite(rows[i][j]))
                throw std::invalid_argument("validate_dataset: row " + std::to_string(i) +
                                            " has non-finite feature at column " + std::to_string(j));
        }
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("validate_dataset: row " + std::to_string(i) +
                                        " has non-binary label " + std::to_string(labels[i]));
        out.features.insert(out.features.end(), rows[i].begin(), rows[i].end());
        out.labels.push_back(labels[i]);
    }
    return out;
}

}  // namespace dwnn
