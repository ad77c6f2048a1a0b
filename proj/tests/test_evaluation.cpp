#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "dwnn/evaluation.hpp"
#include "dwnn/rng.hpp"

using namespace dwnn;
using namespace dwnn::eval;

namespace {

Dataset indexed_data(std::size_t n) {
    Dataset d;
    d.n = n;
    d.d = 1;
    d.features.resize(n);
    d.labels.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) d.features[i] = static_cast<double>(i);
    return d;
}

}  // namespace

TEST_CASE("empirical risk counts disagreements") {
    const std::vector<int> truth{1, 0, 1, 0};
    CHECK(empirical_risk(std::vector<int>{1, 0, 1, 0}, truth) == 0.0);
    CHECK(empirical_risk(std::vector<int>{0, 1, 0, 1}, truth) == 1.0);
    CHECK(empirical_risk(std::vector<int>{1, 1, 1, 0}, truth) == 0.25);
    CHECK(empirical_regret(0.3, 0.1449) == Catch::Approx(0.1551).margin(1e-15));
    CHECK(empirical_regret(0.1, 0.2) == Catch::Approx(-0.1).margin(1e-15));
    CHECK_THROWS_AS(empirical_risk(std::vector<int>{1}, truth), std::invalid_argument);
    CHECK_THROWS_AS(empirical_risk(std::vector<int>{}, std::vector<int>{}),
                    std::invalid_argument);
}

TEST_CASE("pairwise summation matches naive accumulation") {
    SeededRng rng(31);
    std::vector<double> values(10001);
    for (auto& v : values) v = rng.uniform01() - 0.5;
    const double naive = std::accumulate(values.begin(), values.end(), 0.0);
    CHECK(pairwise_sum(values) == Catch::Approx(naive).margin(1e-9));
    CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
    CHECK(pairwise_sum(std::vector<double>{2.5}) == 2.5);
}

TEST_CASE("summarize reports mean and standard error of the mean") {
    const std::vector<double> v{0.0, 1.0, 1.0, 1.0};
    const auto s = summarize(v);
    CHECK(s.count == 4);
    CHECK(s.mean == Catch::Approx(0.75).margin(1e-15));
    CHECK(s.stderr_of_mean == Catch::Approx(0.25).margin(1e-12));

    const auto single = summarize(std::vector<double>{3.0});
    CHECK(single.count == 1);
    CHECK(single.mean == 3.0);
    CHECK(std::isnan(single.stderr_of_mean));

    const auto empty = summarize(std::vector<double>{});
    CHECK(empty.count == 0);
    CHECK(std::isnan(empty.mean));
}

TEST_CASE("instability is zero for a constant classifier") {
    const auto test = indexed_data(50);
    const TrainSetSource source = [](SeededRng& rng, std::size_t) {
        auto d = indexed_data(10);
        for (auto& y : d.labels) y = rng.bernoulli(0.5) ? 1 : 0;
        return d;
    };
    const FitPredict constant = [](const Dataset&, const Dataset& test_set, SeededRng&) {
        return std::vector<int>(test_set.n, 1);
    };
    const auto cis = empirical_cis(source, constant, test, 20, SeededRng(1));
    CHECK(cis.mean == 0.0);
    CHECK(cis.count == 20);
}

TEST_CASE("instability is one when the two sides always disagree") {
    const auto test = indexed_data(50);
    const TrainSetSource source = [](SeededRng&, std::size_t side) {
        auto d = indexed_data(10);
        d.labels.assign(d.n, static_cast<int>(side));
        return d;
    };
    const FitPredict echo_first_label = [](const Dataset& train, const Dataset& test_set,
                                           SeededRng&) {
        return std::vector<int>(test_set.n, train.labels[0]);
    };
    const auto cis = empirical_cis(source, echo_first_label, test, 20, SeededRng(2));
    CHECK(cis.mean == 1.0);
}

TEST_CASE("instability of a coin flip classifier is one half") {
    const auto test = indexed_data(100);
    const TrainSetSource source = [](SeededRng&, std::size_t) { return indexed_data(10); };
    const FitPredict coin = [](const Dataset&, const Dataset& test_set, SeededRng& rng) {
        std::vector<int> out(test_set.n);
        for (auto& y : out) y = rng.bernoulli(0.5) ? 1 : 0;
        return out;
    };
    const std::size_t pairs = 50;
    const auto cis = empirical_cis(source, coin, test, pairs, SeededRng(3));
    // 3 sigma band for the mean of pairs * n_test Bernoulli(1/2) draws.
    const double sigma = std::sqrt(0.25 / static_cast<double>(pairs * test.n));
    CHECK(std::abs(cis.mean - 0.5) < 3.0 * sigma);
}

TEST_CASE("instability is independent of the thread count") {
    const auto test = indexed_data(40);
    const TrainSetSource source = [](SeededRng& rng, std::size_t) {
        auto d = indexed_data(16);
        for (auto& y : d.labels) y = rng.bernoulli(0.4) ? 1 : 0;
        return d;
    };
    const FitPredict noisy = [](const Dataset& train, const Dataset& test_set, SeededRng& rng) {
        std::vector<int> out(test_set.n);
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = (train.labels[i % train.n] + (rng.bernoulli(0.2) ? 1 : 0)) % 2;
        return out;
    };
    const auto serial = empirical_cis(source, noisy, test, 30, SeededRng(4), 1);
    const auto threaded = empirical_cis(source, noisy, test, 30, SeededRng(4), 4);
    CHECK(serial.mean == threaded.mean);
    CHECK(serial.stderr_of_mean == threaded.stderr_of_mean);
}

TEST_CASE("fixed-data instability trains on disjoint halves") {
    const auto data = indexed_data(20);
    const auto test = indexed_data(5);
    std::mutex guard;
    std::vector<std::set<double>> seen;
    const FitPredict record = [&](const Dataset& train, const Dataset& test_set, SeededRng&) {
        std::set<double> ids(train.features.begin(), train.features.end());
        {
            const std::lock_guard<std::mutex> lock(guard);
            seen.push_back(std::move(ids));
        }
        return std::vector<int>(test_set.n, 0);
    };
    const std::size_t pairs = 8;
    const auto cis = empirical_cis_fixed(data, record, test, pairs, SeededRng(5), 1);
    CHECK(cis.mean == 0.0);
    REQUIRE(seen.size() == 2 * pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
        const auto& a = seen[2 * p];
        const auto& b = seen[2 * p + 1];
        REQUIRE(a.size() == 10);
        REQUIRE(b.size() == 10);
        for (const double v : a) REQUIRE_FALSE(b.contains(v));
    }
    CHECK_THROWS_AS(empirical_cis_fixed(indexed_data(1), record, test, 1, SeededRng(6)),
                    std::invalid_argument);
}

TEST_CASE("replicated runs pass the replication index through") {
    const auto out = run_replicated(
        [](std::size_t r, SeededRng&) { return static_cast<double>(r); }, 9, SeededRng(7));
    CHECK(out.count == 9);
    CHECK(out.mean == Catch::Approx(4.0).margin(1e-15));

    const auto serial = run_replicated(
        [](std::size_t, SeededRng& rng) { return rng.uniform01(); }, 16, SeededRng(8), 1);
    const auto threaded = run_replicated(
        [](std::size_t, SeededRng& rng) { return rng.uniform01(); }, 16, SeededRng(8), 4);
    CHECK(serial.mean == threaded.mean);
    CHECK_THROWS_AS(run_replicated([](std::size_t, SeededRng&) { return 0.0; }, 0, SeededRng(9)),
                    std::invalid_argument);
}
