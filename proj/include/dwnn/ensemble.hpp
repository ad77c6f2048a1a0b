#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dwnn/core.hpp"
#include "dwnn/neighbors.hpp"
#include "dwnn/parallel.hpp"
#include "dwnn/rng.hpp"

namespace dwnn::ensemble {

enum class VoteMode : std::uint8_t { majority = 0, weighted = 1 };

// Random split of N points into s shards of exactly n = floor(N/s) points.
// The N mod s leftover points are held out of training (marked unassigned).
struct Partition {
    std::vector<std::uint32_t> assignment;  // length N; shard id or `unassigned`
    std::uint32_t s = 0;
    std::uint32_t n_per_shard = 0;
    std::uint32_t dropped = 0;

    static constexpr std::uint32_t unassigned = 0xffffffffu;
};

inline Partition make_partition(std::size_t n_total, std::size_t s, SeededRng& rng) {
    if (s < 1 || s > n_total)
        throw std::invalid_argument("make_partition: s=" + std::to_string(s) +
                                    " out of range [1, " + std::to_string(n_total) + "]");
    Partition p;
    p.s = static_cast<std::uint32_t>(s);
    p.n_per_shard = static_cast<std::uint32_t>(n_total / s);
    p.dropped = static_cast<std::uint32_t>(n_total % s);
    p.assignment.assign(n_total, Partition::unassigned);
    const auto order = rng.permutation(static_cast<std::uint32_t>(n_total));
    for (std::size_t r = 0; r < std::size_t{p.s} * p.n_per_shard; ++r)
        p.assignment[order[r]] = static_cast<std::uint32_t>(r / p.n_per_shard);
    return p;
}

// Distributed WNN classifier: s per-shard exact neighbor indexes sharing one
// local weight vector, aggregated either by majority vote over local class
// votes or by averaging local regression estimates. s=1 is the oracle WNN.
class DnnModel {
public:
    DnnModel() = default;

    static DnnModel fit(const Dataset& data, const Partition& partition,
                        std::vector<double> local_weights, VoteMode mode) {
        if (partition.assignment.size() != data.n)
            throw std::invalid_argument("DnnModel::fit: partition size does not match dataset");
        if (local_weights.size() != partition.n_per_shard)
            throw std::invalid_argument("DnnModel::fit: weight vector length " +
                                        std::to_string(local_weights.size()) + " != shard size " +
                                        std::to_string(partition.n_per_shard));
        DnnModel model;
        model.mode_ = mode;
        model.d_ = data.d;
        model.n_ = partition.n_per_shard;
        model.weights_ = std::move(local_weights);
        model.m_eff_ = effective_support(model.weights_);
        std::vector<std::vector<std::uint32_t>> members(partition.s);
        for (auto& m : members) m.reserve(partition.n_per_shard);
        for (std::uint32_t i = 0; i < data.n; ++i) {
            const std::uint32_t j = partition.assignment[i];
            if (j != Partition::unassigned) members[j].push_back(i);
        }
        model.shards_.resize(partition.s);
        for (std::uint32_t j = 0; j < partition.s; ++j) {
            if (members[j].size() != partition.n_per_shard)
                throw std::invalid_argument("DnnModel::fit: shard " + std::to_string(j) +
                                            " has irregular size");
            Shard& shard = model.shards_[j];
            shard.data.n = members[j].size();
            shard.data.d = data.d;
            shard.data.features.reserve(shard.data.n * data.d);
            shard.data.labels.reserve(shard.data.n);
            for (const std::uint32_t i : members[j]) {
                shard.data.features.insert(shard.data.features.end(),
                                           data.features.begin() + std::size_t{i} * data.d,
                                           data.features.begin() + std::size_t{i + 1} * data.d);
                shard.data.labels.push_back(data.labels[i]);
            }
            shard.tree = neighbors::KdTree(shard.data);
        }
        return model;
    }

    // Single-shard model over the full dataset: the oracle WNN baseline
    // (oracle kNN / OWNN / BNN depending on the weight vector).
    static DnnModel fit_oracle_wnn(const Dataset& data, std::vector<double> w) {
        if (w.size() != data.n)
            throw std::invalid_argument("fit_oracle_wnn: weight vector length must equal N");
        Partition p;
        p.s = 1;
        p.n_per_shard = static_cast<std::uint32_t>(data.n);
        p.assignment.assign(data.n, 0);
        return fit(data, p, std::move(w), VoteMode::weighted);
    }

    VoteMode mode() const { return mode_; }
    std::size_t shard_count() const { return shards_.size(); }
    std::size_t shard_size() const { return n_; }
    std::size_t dim() const { return d_; }
    std::size_t effective_neighbors() const { return m_eff_; }
    const std::vector<double>& local_weights() const { return weights_; }

    // Local regression estimate of shard j: sum_i w_i Y_(i) under the shard's
    // own neighbor ordering.
    double local_regress(std::size_t j, QueryPoint x) const {
        check_query(j, x);
        const auto ordering = shards_[j].tree.query(x, m_eff_);
        double acc = 0.0;
        for (std::size_t i = 0; i < m_eff_; ++i)
            acc += weights_[i] * static_cast<double>(shards_[j].data.labels[ordering.indices[i]]);
        return acc;
    }

    int local_classify(std::size_t j, QueryPoint x) const {
        return local_regress(j, x) >= 0.5 ? 1 : 0;
    }

    // Aggregate value before thresholding: the local-vote fraction (majority
    // mode) or the averaged local regression estimate (weighted mode).
    double aggregate(QueryPoint x) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < shards_.size(); ++j) {
            const double sj = local_regress(j, x);
            acc += mode_ == VoteMode::majority ? (sj >= 0.5 ? 1.0 : 0.0) : sj;
        }
        return acc / static_cast<double>(shards_.size());
    }

    int predict(QueryPoint x) const { return aggregate(x) >= 0.5 ? 1 : 0; }

    std::vector<int> predict_batch(const Dataset& queries, unsigned threads = 1) const {
        return predict_batch(queries.features, queries.n, threads);
    }

    std::vector<int> predict_batch(std::span<const double> features_rowmajor, std::size_t n_queries,
                                   unsigned threads = 1) const {
        if (features_rowmajor.size() != n_queries * d_)
            throw std::invalid_argument("predict_batch: feature buffer size mismatch");
        std::vector<int> out(n_queries);
        parallel_for(n_queries, threads, [&](std::size_t i) {
            out[i] = predict(QueryPoint{features_rowmajor.data() + i * d_, d_});
        });
        return out;
    }

    // Versioned binary dump: weights, mode and per-shard labels + features.
    // Trees are rebuilt on load, so a round trip reproduces predictions
    // exactly (feature and weight doubles are preserved bit for bit).
    void save(std::ostream& os) const {
        write_bytes(os, magic, sizeof magic);
        write_pod(os, format_version);
        write_pod(os, static_cast<std::uint8_t>(mode_));
        write_pod(os, static_cast<std::uint64_t>(shards_.size()));
        write_pod(os, static_cast<std::uint64_t>(n_));
        write_pod(os, static_cast<std::uint64_t>(d_));
        write_vec(os, weights_);
        for (const Shard& shard : shards_) {
            for (const int label : shard.data.labels) write_pod(os, static_cast<std::uint8_t>(label));
            write_vec(os, shard.data.features);
        }
        if (!os) throw std::runtime_error("DnnModel::save: stream failure");
    }

    static DnnModel load(std::istream& is) {
        char got_magic[4];
        read_bytes(is, got_magic, sizeof got_magic);
        if (!std::equal(got_magic, got_magic + 4, magic))
            throw std::runtime_error("DnnModel::load: bad magic");
        const auto version = read_pod<std::uint32_t>(is);
        if (version != format_version)
            throw std::runtime_error("DnnModel::load: unsupported format version " +
                                     std::to_string(version));
        DnnModel model;
        model.mode_ = static_cast<VoteMode>(read_pod<std::uint8_t>(is));
        const auto s = read_pod<std::uint64_t>(is);
        model.n_ = read_pod<std::uint64_t>(is);
        model.d_ = read_pod<std::uint64_t>(is);
        model.weights_ = read_vec(is);
        if (model.weights_.size() != model.n_)
            throw std::runtime_error("DnnModel::load: corrupt weight vector");
        model.m_eff_ = effective_support(model.weights_);
        model.shards_.resize(s);
        for (auto& shard : model.shards_) {
            shard.data.n = model.n_;
            shard.data.d = model.d_;
            shard.data.labels.resize(model.n_);
            for (auto& label : shard.data.labels) label = read_pod<std::uint8_t>(is);
            shard.data.features = read_vec(is);
            if (shard.data.features.size() != model.n_ * model.d_)
                throw std::runtime_error("DnnModel::load: corrupt shard features");
            shard.tree = neighbors::KdTree(shard.data);
        }
        if (!is) throw std::runtime_error("DnnModel::load: stream failure");
        return model;
    }

private:
    struct Shard {
        Dataset data;
        neighbors::KdTree tree;
    };

    static std::size_t effective_support(const std::vector<double>& w) {
        std::size_t m = w.size();
        while (m > 0 && w[m - 1] == 0.0) --m;
        if (m == 0) throw std::invalid_argument("DnnModel: weight vector is all zeros");
        return m;
    }

    void check_query(std::size_t j, QueryPoint x) const {
        if (j >= shards_.size()) throw std::out_of_range("DnnModel: shard index out of range");
        if (x.size() != d_)
            throw std::invalid_argument("DnnModel: query dimension " + std::to_string(x.size()) +
                                        " does not match model dimension " + std::to_string(d_));
    }

    static constexpr char magic[4] = {'D', 'W', 'N', 'N'};
    static constexpr std::uint32_t format_version = 1;

    static void write_bytes(std::ostream& os, const char* p, std::size_t count) {
        os.write(p, static_cast<std::streamsize>(count));
    }
    template <typename T>
    static void write_pod(std::ostream& os, T value) {
        write_bytes(os, reinterpret_cast<const char*>(&value), sizeof value);
    }
    static void write_vec(std::ostream& os, const std::vector<double>& v) {
        write_pod(os, static_cast<std::uint64_t>(v.size()));
        write_bytes(os, reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
    }
    static void read_bytes(std::istream& is, char* p, std::size_t count) {
        if (!is.read(p, static_cast<std::streamsize>(count)))
            throw std::runtime_error("DnnModel::load: truncated stream");
    }
    template <typename T>
    static T read_pod(std::istream& is) {
        T value;
        read_bytes(is, reinterpret_cast<char*>(&value), sizeof value);
        return value;
    }
    static std::vector<double> read_vec(std::istream& is) {
        const auto count = read_pod<std::uint64_t>(is);
        std::vector<double> v(count);
        read_bytes(is, reinterpret_cast<char*>(v.data()), count * sizeof(double));
        return v;
    }

    VoteMode mode_ = VoteMode::weighted;
    std::size_t d_ = 0;
    std::size_t n_ = 0;
    std::size_t m_eff_ = 0;
    std::vector<double> weights_;
    std::vector<Shard> shards_;
};

}  // namespace dwnn::ensemble
