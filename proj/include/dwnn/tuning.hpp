#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwnn/core.hpp"
#include "dwnn/neighbors.hpp"
#include "dwnn/parallel.hpp"
#include "dwnn/rng.hpp"
#include "dwnn/weights.hpp"

namespace dwnn::tune {

// Weight families selectable by a single integer parameter. The bagged-NN
// family is parameterized by its effective neighbor count m_b (the geometric
// ratio is q = 1/m_b), so every family's parameter means "more neighbors =
// smoother" and the smallest-parameter tie-break keeps its cheapest-predict
// rationale.
enum class Family { uniform_k, ownn, bnn_effective_size };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::uniform_k: return "uniform-k";
        case Family::ownn: return "ownn";
        case Family::bnn_effective_size: return "bnn";
    }
    return "?";
}

// Weight vector for a family member, with the parameter clamped to [1, n].
inline std::vector<double> family_weights(Family family, std::size_t n, std::size_t param,
                                          std::size_t d) {
    const std::size_t p = std::min(std::max<std::size_t>(param, 1), n);
    switch (family) {
        case Family::uniform_k: return weights::uniform_k_weights(n, p);
        case Family::ownn: return weights::ownn_weights(n, p, d);
        case Family::bnn_effective_size:
            if (p == 1) return weights::uniform_k_weights(n, 1);  // q -> 1 limit
            return weights::bnn_weights(n, 1.0 / static_cast<double>(p));
    }
    throw std::invalid_argument("family_weights: unknown family");
}

struct TuneResult {
    Family family = Family::uniform_k;
    std::vector<std::size_t> grid;
    std::vector<double> cv_risk;     // mean validation risk per grid point
    std::vector<double> cv_se;       // stderr over folds
    std::size_t selected = 0;        // chosen parameter value
    std::size_t selected_index = 0;  // index into grid
    std::size_t folds = 0;
};

// K = ceil(N^0.7), clamped to [1, N].
inline std::size_t default_oracle_k(std::size_t n_total) {
    if (n_total < 1) throw std::invalid_argument("default_oracle_k: N must be >= 1");
    const auto k = weights::detail::ceil_guarded(
        std::pow(static_cast<double>(n_total), 0.7));
    return std::clamp<std::size_t>(k, 1, n_total);
}

// Geometric grid over [1, c * N^{4/(d+4)}] (the optimal-parameter order),
// deduplicated integers clamped to [1, N].
inline std::vector<std::size_t> default_param_grid(std::size_t n_total, std::size_t d,
                                                   double c = 4.0) {
    if (n_total < 1 || d < 1) throw std::invalid_argument("default_param_grid: bad arguments");
    const double upper_raw = c * std::pow(static_cast<double>(n_total),
                                          4.0 / (static_cast<double>(d) + 4.0));
    const double upper = std::min(upper_raw, static_cast<double>(n_total));
    std::vector<std::size_t> grid;
    const double ratio = 1.4;
    for (double v = 1.0; v < upper; v *= ratio) {
        const auto p = static_cast<std::size_t>(std::llround(v));
        if (grid.empty() || p > grid.back()) grid.push_back(p);
    }
    const auto top = static_cast<std::size_t>(std::llround(upper));
    if (grid.empty() || top > grid.back()) grid.push_back(std::max<std::size_t>(top, 1));
    return grid;
}

// Stratified fold assignment: within each label class, a random permutation
// is dealt round-robin over folds, so fold class ratios match the data.
inline std::vector<std::uint32_t> stratified_folds(const std::vector<int>& labels,
                                                   std::size_t folds, SeededRng& rng) {
    if (folds < 2) throw std::invalid_argument("stratified_folds: folds must be >= 2");
    std::vector<std::uint32_t> assignment(labels.size());
    for (const int label : {0, 1}) {
        std::vector<std::uint32_t> members;
        for (std::uint32_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) members.push_back(i);
        if (members.size() < folds)
            throw std::invalid_argument("stratified_folds: class " + std::to_string(label) +
                                        " has " + std::to_string(members.size()) +
                                        " points, fewer than " + std::to_string(folds) + " folds");
        const auto order = rng.permutation(static_cast<std::uint32_t>(members.size()));
        for (std::size_t r = 0; r < members.size(); ++r)
            assignment[members[order[r]]] = static_cast<std::uint32_t>(r % folds);
    }
    return assignment;
}

// Stratified k-fold CV over one weight family. Every candidate is evaluated
// on the same fold split; the selected parameter attains the minimal CV risk,
// ties broken toward the smallest parameter.
inline TuneResult cv_tune(const Dataset& data, Family family, std::vector<std::size_t> grid,
                          std::size_t folds, SeededRng rng, unsigned threads = 1) {
    if (grid.empty()) throw std::invalid_argument("cv_tune: empty grid");
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    for (const auto p : grid)
        if (p < 1) throw std::invalid_argument("cv_tune: grid parameters must be >= 1");

    SeededRng fold_rng = rng.substream("folds");
    const auto fold_of = stratified_folds(data.labels, folds, fold_rng);

    // errors[f][g] = misclassified validation points of fold f under grid[g].
    std::vector<std::vector<std::size_t>> errors(folds, std::vector<std::size_t>(grid.size(), 0));
    std::vector<std::size_t> val_count(folds, 0);

    parallel_for(folds, threads, [&](std::size_t f) {
        Dataset train;
        std::vector<std::uint32_t> val_rows;
        train.d = data.d;
        for (std::uint32_t i = 0; i < data.n; ++i) {
            if (fold_of[i] == f) {
                val_rows.push_back(i);
                continue;
            }
            train.features.insert(train.features.end(), data.features.begin() + std::size_t{i} * data.d,
                                  data.features.begin() + std::size_t{i + 1} * data.d);
            train.labels.push_back(data.labels[i]);
        }
        train.n = train.labels.size();
        val_count[f] = val_rows.size();

        // Candidate weight vectors for this fold's training size, and the
        // deepest neighbor ordering any candidate needs.
        std::vector<std::vector<double>> cand_w(grid.size());
        std::size_t max_support = 0;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            cand_w[g] = family_weights(family, train.n, grid[g], data.d);
            std::size_t support = cand_w[g].size();
            while (support > 0 && cand_w[g][support - 1] == 0.0) --support;
            max_support = std::max(max_support, support);
        }

        const neighbors::KdTree tree(train);
        for (const std::uint32_t row : val_rows) {
            const auto ordering = tree.query(data.row(row), max_support);
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const auto& w = cand_w[g];
                double score = 0.0;
                const std::size_t support = std::min(w.size(), ordering.indices.size());
                for (std::size_t i = 0; i < support; ++i) {
                    if (w[i] == 0.0 && family != Family::bnn_effective_size) break;
                    score += w[i] * static_cast<double>(train.labels[ordering.indices[i]]);
                }
                const int pred = score >= 0.5 ? 1 : 0;
                if (pred != data.labels[row]) ++errors[f][g];
            }
        }
    });

    TuneResult result;
    result.family = family;
    result.grid = grid;
    result.folds = folds;
    result.cv_risk.resize(grid.size());
    result.cv_se.resize(grid.size());
    std::size_t total_val = 0;
    for (const auto c : val_count) total_val += c;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::size_t total_err = 0;
        std::vector<double> fold_risk(folds);
        for (std::size_t f = 0; f < folds; ++f) {
            total_err += errors[f][g];
            fold_risk[f] = static_cast<double>(errors[f][g]) / static_cast<double>(val_count[f]);
        }
        result.cv_risk[g] = static_cast<double>(total_err) / static_cast<double>(total_val);
        double mean = 0.0;
        for (const double r : fold_risk) mean += r;
        mean /= static_cast<double>(folds);
        double var = 0.0;
        for (const double r : fold_risk) var += (r - mean) * (r - mean);
        var /= static_cast<double>(folds - 1);
        result.cv_se[g] = std::sqrt(var / static_cast<double>(folds));
    }
    result.selected_index = 0;
    for (std::size_t g = 1; g < grid.size(); ++g)
        if (result.cv_risk[g] < result.cv_risk[result.selected_index]) result.selected_index = g;
    result.selected = grid[result.selected_index];
    return result;
}

}  // namespace dwnn::tune
