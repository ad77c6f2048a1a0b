#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "dwnn/ensemble.hpp"
#include "dwnn/rng.hpp"
#include "dwnn/simgen.hpp"
#include "dwnn/weights.hpp"

using namespace dwnn;
using namespace dwnn::ensemble;

namespace {

Dataset toy_1d(std::vector<double> xs, std::vector<int> ys) {
    Dataset d;
    d.n = xs.size();
    d.d = 1;
    d.features = std::move(xs);
    d.labels = std::move(ys);
    return d;
}

}  // namespace

TEST_CASE("random partitions cover shards evenly and drop the remainder") {
    SeededRng rng(99);
    const auto p = make_partition(103, 10, rng);
    CHECK(p.s == 10);
    CHECK(p.n_per_shard == 10);
    CHECK(p.dropped == 3);
    REQUIRE(p.assignment.size() == 103);
    std::vector<std::size_t> counts(10, 0);
    std::size_t unassigned = 0;
    for (const auto a : p.assignment) {
        if (a == Partition::unassigned)
            ++unassigned;
        else
            counts[a]++;
    }
    CHECK(unassigned == 3);
    for (const auto c : counts) CHECK(c == 10);

    SeededRng rng2(99);
    const auto q = make_partition(103, 10, rng2);
    CHECK(q.assignment == p.assignment);

    CHECK_THROWS_AS(make_partition(5, 0, rng), std::invalid_argument);
    CHECK_THROWS_AS(make_partition(5, 6, rng), std::invalid_argument);
}

TEST_CASE("single-shard ensembles reproduce the oracle classifier exactly") {
    SeededRng master(314);
    const auto spec = simgen::simulation_spec(1, 3);
    for (std::size_t rep = 0; rep < 20; ++rep) {
        auto data_rng = master.substream("data", rep);
        const std::size_t n = 20 + data_rng.uniform_below(180);
        const auto data = simgen::sample(spec, n, data_rng);

        std::vector<double> w;
        switch (rep % 3) {
            case 0: w = weights::uniform_k_weights(n, 1 + data_rng.uniform_below(n)); break;
            case 1: w = weights::ownn_weights(n, 1 + data_rng.uniform_below(n), 3); break;
            default: w = weights::bnn_weights(n, 0.05 + 0.9 * data_rng.uniform01()); break;
        }

        SeededRng part_rng = master.substream("part", rep);
        const auto partition = make_partition(n, 1, part_rng);
        const auto oracle = DnnModel::fit_oracle_wnn(data, w);
        const auto majority = DnnModel::fit(data, partition, w, VoteMode::majority);
        const auto weighted = DnnModel::fit(data, partition, w, VoteMode::weighted);

        auto query_rng = master.substream("query", rep);
        const auto queries = simgen::sample(spec, 40, query_rng);
        for (std::size_t i = 0; i < queries.n; ++i) {
            const auto x = queries.row(i);
            REQUIRE(majority.predict(x) == oracle.predict(x));
            REQUIRE(weighted.predict(x) == oracle.predict(x));
        }
    }
}

TEST_CASE("majority and weighted votes can disagree") {
    // Three shards of two points each along a line, query at the origin.
    // Local estimates with weights (0.6, 0.4): 0.6, 0.6 and 0.0, so the
    // vote fraction is 2/3 but the averaged estimate is only 0.4.
    const auto data = toy_1d({1.0, 1.1, 1.2, 2.0, 2.1, 2.2}, {1, 1, 0, 0, 0, 0});
    Partition p;
    p.s = 3;
    p.n_per_shard = 2;
    p.dropped = 0;
    p.assignment = {0, 1, 2, 0, 1, 2};
    const std::vector<double> w{0.6, 0.4};

    const auto majority = DnnModel::fit(data, p, w, VoteMode::majority);
    const auto weighted = DnnModel::fit(data, p, w, VoteMode::weighted);
    const std::vector<double> origin{0.0};

    CHECK(majority.local_regress(0, origin) == Catch::Approx(0.6).margin(1e-15));
    CHECK(majority.local_regress(1, origin) == Catch::Approx(0.6).margin(1e-15));
    CHECK(majority.local_regress(2, origin) == Catch::Approx(0.0).margin(1e-15));
    CHECK(majority.aggregate(origin) == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(weighted.aggregate(origin) == Catch::Approx(0.4).margin(1e-15));
    CHECK(majority.predict(origin) == 1);
    CHECK(weighted.predict(origin) == 0);
}

TEST_CASE("ties at one half go to class one") {
    // Local estimate exactly 0.5 counts as a vote for class 1.
    const auto data = toy_1d({1.0, 2.0}, {1, 0});
    Partition p;
    p.s = 1;
    p.n_per_shard = 2;
    p.assignment = {0, 0};
    const auto model = DnnModel::fit(data, p, {0.5, 0.5}, VoteMode::weighted);
    const std::vector<double> origin{0.0};
    CHECK(model.aggregate(origin) == 0.5);
    CHECK(model.predict(origin) == 1);

    // A 1-1 split across two shards also resolves to class 1.
    const auto data2 = toy_1d({1.0, 2.0}, {1, 0});
    Partition p2;
    p2.s = 2;
    p2.n_per_shard = 1;
    p2.assignment = {0, 1};
    const auto model2 = DnnModel::fit(data2, p2, {1.0}, VoteMode::majority);
    CHECK(model2.aggregate(origin) == 0.5);
    CHECK(model2.predict(origin) == 1);
}

TEST_CASE("batch prediction is independent of the thread count") {
    const auto spec = simgen::simulation_spec(2, 4);
    SeededRng rng(555);
    const auto train = simgen::sample(spec, 300, rng);
    const auto test = simgen::sample(spec, 200, rng);
    SeededRng part_rng(556);
    const auto partition = make_partition(train.n, 5, part_rng);
    const auto model = DnnModel::fit(train, partition, weights::uniform_k_weights(60, 7),
                                     VoteMode::majority);
    const auto serial = model.predict_batch(test, 1);
    const auto parallel = model.predict_batch(test, 4);
    CHECK(serial == parallel);

    std::vector<int> loop(test.n);
    for (std::size_t i = 0; i < test.n; ++i) loop[i] = model.predict(test.row(i));
    CHECK(serial == loop);
}

TEST_CASE("models survive a save and load round trip") {
    const auto spec = simgen::simulation_spec(1, 2);
    SeededRng rng(77);
    const auto train = simgen::sample(spec, 120, rng);
    SeededRng part_rng(78);
    const auto partition = make_partition(train.n, 4, part_rng);
    const auto model = DnnModel::fit(train, partition, weights::ownn_weights(30, 9, 2),
                                     VoteMode::weighted);

    std::stringstream buffer;
    model.save(buffer);
    const auto restored = DnnModel::load(buffer);
    CHECK(restored.mode() == model.mode());
    CHECK(restored.shard_count() == model.shard_count());
    CHECK(restored.shard_size() == model.shard_size());
    CHECK(restored.dim() == model.dim());
    CHECK(restored.local_weights() == model.local_weights());

    const auto test = simgen::sample(spec, 100, rng);
    CHECK(restored.predict_batch(test) == model.predict_batch(test));

    std::stringstream junk("XXXXnot a model");
    CHECK_THROWS_AS(DnnModel::load(junk), std::runtime_error);
    std::stringstream empty;
    CHECK_THROWS_AS(DnnModel::load(empty), std::runtime_error);
}

TEST_CASE("fit rejects malformed inputs") {
    const auto data = toy_1d({1.0, 2.0, 3.0, 4.0}, {1, 0, 1, 0});
    SeededRng rng(5);
    const auto partition = make_partition(4, 2, rng);
    CHECK_THROWS_AS(DnnModel::fit(data, partition, {1.0}, VoteMode::majority),
                    std::invalid_argument);
    CHECK_THROWS_AS(DnnModel::fit(data, partition, {0.0, 0.0}, VoteMode::majority),
                    std::invalid_argument);
    CHECK_THROWS_AS(DnnModel::fit_oracle_wnn(data, {1.0, 0.0}), std::invalid_argument);

    Partition wrong;
    wrong.s = 2;
    wrong.n_per_shard = 2;
    wrong.assignment = {0, 0, 1};  // length 3 vs n = 4
    CHECK_THROWS_AS(DnnModel::fit(data, wrong, {0.5, 0.5}, VoteMode::majority),
                    std::invalid_argument);

    const auto model = DnnModel::fit(data, partition, {0.5, 0.5}, VoteMode::weighted);
    const std::vector<double> bad_dim{0.0, 0.0};
    CHECK_THROWS_AS(model.predict(bad_dim), std::invalid_argument);
    CHECK_THROWS_AS(model.local_regress(7, std::vector<double>{0.0}), std::out_of_range);
}
