#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "dwnn/neighbors.hpp"
#include "dwnn/rng.hpp"

using namespace dwnn;
using neighbors::KdTree;
using neighbors::order_neighbors;

namespace {

Dataset random_dataset(SeededRng& rng, std::size_t n, std::size_t d) {
    Dataset data;
    data.n = n;
    data.d = d;
    data.features.resize(n * d);
    data.labels.assign(n, 0);
    for (auto& v : data.features) v = rng.normal();
    return data;
}

}  // namespace

TEST_CASE("brute force ordering on a hand-checked example") {
    Dataset data;
    data.features = {0.0, 3.0, -1.0, 10.0};
    data.labels = {0, 0, 0, 0};
    data.n = 4;
    data.d = 1;
    const double q = 0.5;
    const auto ord = order_neighbors(data, QueryPoint(&q, 1), 4);
    CHECK(ord.indices == std::vector<std::uint32_t>{0, 2, 1, 3});
    CHECK(ord.distances[0] == 0.25);
    CHECK(ord.distances[1] == 2.25);
    CHECK(ord.distances[2] == 6.25);
}

TEST_CASE("equidistant neighbors are ordered by index") {
    Dataset data;
    data.features = {1.0, -1.0, 1.0};  // all at squared distance 1 from 0
    data.labels = {0, 0, 0};
    data.n = 3;
    data.d = 1;
    const double q = 0.0;
    const auto ord = order_neighbors(data, QueryPoint(&q, 1), 3);
    CHECK(ord.indices == std::vector<std::uint32_t>{0, 1, 2});
    const KdTree tree(data);
    CHECK(tree.query(QueryPoint(&q, 1), 3).indices == ord.indices);
}

TEST_CASE("m bounds and query dimension are validated") {
    SeededRng rng(1);
    const auto data = random_dataset(rng, 10, 3);
    const std::vector<double> q = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(order_neighbors(data, QueryPoint(q), 0), std::out_of_range);
    CHECK_THROWS_AS(order_neighbors(data, QueryPoint(q), 11), std::out_of_range);
    const std::vector<double> bad = {0.0, 0.0};
    CHECK_THROWS_AS(order_neighbors(data, QueryPoint(bad), 3), std::invalid_argument);
    const KdTree tree(data);
    CHECK_THROWS_AS(tree.query(QueryPoint(q), 0), std::out_of_range);
    CHECK_THROWS_AS(tree.query(QueryPoint(bad), 3), std::invalid_argument);
}

TEST_CASE("kd-tree matches brute force on random instances, exactly") {
    // Acceptance-grade property: indices and squared distances agree bit for
    // bit, including duplicate points and heavy distance ties.
    SeededRng rng(20240817);
    for (int instance = 0; instance < 1000; ++instance) {
        SeededRng local = rng.substream("instance", static_cast<std::uint64_t>(instance));
        const std::size_t n = 1 + local.uniform_below(500);
        const std::size_t d = 1 + local.uniform_below(10);
        Dataset data = random_dataset(local, n, d);
        if (instance % 3 == 0) {
            // Round features to one decimal so exact ties and duplicates occur.
            for (auto& v : data.features) v = std::round(v * 10.0) / 10.0;
        }
        const KdTree tree(data);
        const std::size_t m = 1 + local.uniform_below(n);
        std::vector<double> q(d);
        for (auto& v : q) v = local.normal();
        if (instance % 5 == 0) {
            const std::size_t steal = local.uniform_below(n);
            for (std::size_t j = 0; j < d; ++j) q[j] = data.features[steal * d + j];
        }
        const auto brute = order_neighbors(data, QueryPoint(q), m);
        const auto fast = tree.query(QueryPoint(q), m);
        REQUIRE(fast.indices == brute.indices);
        REQUIRE(fast.distances == brute.distances);
    }
}

TEST_CASE("kd-tree handles all-duplicate datasets") {
    Dataset data;
    data.n = 20;
    data.d = 2;
    data.features.assign(40, 1.5);
    data.labels.assign(20, 0);
    const KdTree tree(data);
    const std::vector<double> q = {1.5, 1.5};
    const auto ord = tree.query(QueryPoint(q), 20);
    for (std::uint32_t i = 0; i < 20; ++i) { REQUIRE(ord.indices[i] == i); }
    for (double dist : ord.distances) REQUIRE(dist == 0.0);
}
