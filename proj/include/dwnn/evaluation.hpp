#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dwnn/core.hpp"
#include "dwnn/parallel.hpp"
#include "dwnn/rng.hpp"

namespace dwnn::eval {

inline double empirical_risk(std::span<const int> predictions, std::span<const int> truth) {
    if (predictions.size() != truth.size())
        throw std::invalid_argument("empirical_risk: length mismatch (" +
                                    std::to_string(predictions.size()) + " vs " +
                                    std::to_string(truth.size()) + ")");
    if (predictions.empty()) throw std::invalid_argument("empirical_risk: empty input");
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] != truth[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(predictions.size());
}

// Risk minus Bayes risk, reported raw (may be slightly negative under Monte
// Carlo noise; unclamped for unbiased aggregation).
inline double empirical_regret(double risk, double bayes_risk) { return risk - bayes_risk; }

// Numerically stable order-independent summation.
inline double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double acc = 0.0;
        for (const double v : values) acc += v;
        return acc;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

struct MeanStderr {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stderr_of_mean = std::numeric_limits<double>::quiet_NaN();  // NaN when count < 2
    std::size_t count = 0;
};

inline MeanStderr summarize(std::span<const double> values) {
    MeanStderr out;
    out.count = values.size();
    if (values.empty()) return out;
    out.mean = pairwise_sum(values) / static_cast<double>(values.size());
    if (values.size() < 2) return out;
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double c = values[i] - out.mean;
        sq[i] = c * c;
    }
    const double var = pairwise_sum(sq) / static_cast<double>(values.size() - 1);
    out.stderr_of_mean = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

// One result row of a replicated evaluation cell.
struct EvalReport {
    std::string method;
    double gamma = 0.0;
    std::size_t s = 1;
    std::size_t n = 0;   // per-shard training size
    std::size_t d = 0;
    std::size_t n_total = 0;
    std::size_t param_oracle = 0;  // K*, m*, or effective BNN size
    std::size_t param_local = 0;   // bridged k / l (0 for oracle methods)
    MeanStderr risk;
    double bayes_risk = std::numeric_limits<double>::quiet_NaN();
    double regret = std::numeric_limits<double>::quiet_NaN();
    MeanStderr cis;
    MeanStderr fit_ms;
    MeanStderr predict_ms;
    std::size_t dropped = 0;
    std::size_t replications = 0;
};

// Draws a training set for one side of a CIS pair (side is 0 or 1); the rng
// is already a pair-and-side-specific substream.
using TrainSetSource = std::function<Dataset(SeededRng&, std::size_t side)>;

// Fits on `train` and returns predictions for every row of `test`. The rng
// carries the procedure's internal randomness (e.g. the shard partition).
using FitPredict =
    std::function<std::vector<int>(const Dataset& train, const Dataset& test, SeededRng&)>;

// Classification instability: for each of `pairs` rounds, draw two
// independent training sets, fit the procedure on each, and measure the
// disagreement rate on the fixed test set; returns the average. Per-pair
// disagreements land in indexed slots, so thread count cannot change the
// result.
inline MeanStderr empirical_cis(const TrainSetSource& source, const FitPredict& fit,
                                const Dataset& test, std::size_t pairs, SeededRng rng,
                                unsigned threads = 1) {
    if (pairs < 1) throw std::invalid_argument("empirical_cis: pairs must be >= 1");
    if (test.n == 0) throw std::invalid_argument("empirical_cis: empty test set");
    std::vector<double> disagreement(pairs);
    parallel_for(pairs, threads, [&](std::size_t p) {
        std::vector<std::vector<int>> preds(2);
        for (std::size_t side = 0; side < 2; ++side) {
            SeededRng draw_rng = rng.substream("cis-draw", p * 2 + side);
            SeededRng fit_rng = rng.substream("cis-fit", p * 2 + side);
            const Dataset train = source(draw_rng, side);
            preds[side] = fit(train, test, fit_rng);
            if (preds[side].size() != test.n)
                throw std::runtime_error("empirical_cis: procedure returned wrong prediction count");
        }
        std::size_t diff = 0;
        for (std::size_t i = 0; i < test.n; ++i)
            if (preds[0][i] != preds[1][i]) ++diff;
        disagreement[p] = static_cast<double>(diff) / static_cast<double>(test.n);
    });
    return summarize(disagreement);
}

// CIS on one fixed dataset: each pair splits the data into two disjoint
// random halves serving as the independent training sets.
inline MeanStderr empirical_cis_fixed(const Dataset& data, const FitPredict& fit,
                                      const Dataset& test, std::size_t pairs, SeededRng rng,
                                      unsigned threads = 1) {
    if (data.n < 2) throw std::invalid_argument("empirical_cis_fixed: need at least 2 points");
    const std::size_t half = data.n / 2;
    // Both sides of a pair share one permutation, so the halves are disjoint.
    auto source = [&data, half](SeededRng& pair_rng, std::size_t side) {
        SeededRng perm_rng = pair_rng;
        const auto order = perm_rng.permutation(static_cast<std::uint32_t>(data.n));
        Dataset out;
        out.d = data.d;
        out.n = half;
        out.features.reserve(half * data.d);
        out.labels.reserve(half);
        const std::size_t offset = side == 0 ? 0 : half;
        for (std::size_t r = 0; r < half; ++r) {
            const std::size_t i = order[offset + r];
            out.features.insert(out.features.end(), data.features.begin() + i * data.d,
                                data.features.begin() + (i + 1) * data.d);
            out.labels.push_back(data.labels[i]);
        }
        return out;
    };
    // Re-derive a shared per-pair permutation stream: wrap the generic runner
    // with a source that ignores the side-specific stream for the split.
    if (pairs < 1) throw std::invalid_argument("empirical_cis_fixed: pairs must be >= 1");
    if (test.n == 0) throw std::invalid_argument("empirical_cis_fixed: empty test set");
    std::vector<double> disagreement(pairs);
    parallel_for(pairs, threads, [&](std::size_t p) {
        std::vector<std::vector<int>> preds(2);
        for (std::size_t side = 0; side < 2; ++side) {
            SeededRng split_rng = rng.substream("cis-split", p);
            SeededRng fit_rng = rng.substream("cis-fit", p * 2 + side);
            const Dataset train = source(split_rng, side);
            preds[side] = fit(train, test, fit_rng);
            if (preds[side].size() != test.n)
                throw std::runtime_error("empirical_cis_fixed: procedure returned wrong prediction count");
        }
        std::size_t diff = 0;
        for (std::size_t i = 0; i < test.n; ++i)
            if (preds[0][i] != preds[1][i]) ++diff;
        disagreement[p] = static_cast<double>(diff) / static_cast<double>(test.n);
    });
    return summarize(disagreement);
}

// R independent replications of an arbitrary scalar experiment; fn receives
// the replication index and a replication-specific rng substream.
inline MeanStderr run_replicated(const std::function<double(std::size_t, SeededRng&)>& fn,
                                 std::size_t replications, SeededRng rng, unsigned threads = 1) {
    if (replications < 1) throw std::invalid_argument("run_replicated: replications must be >= 1");
    std::vector<double> values(replications);
    parallel_for(replications, threads, [&](std::size_t r) {
        SeededRng rep_rng = rng.substream("rep", r);
        values[r] = fn(r, rep_rng);
    });
    return summarize(values);
}

}  // namespace dwnn::eval
