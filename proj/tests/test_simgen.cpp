#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>

#include "dwnn/rng.hpp"
#include "dwnn/simgen.hpp"

using namespace dwnn;
using namespace dwnn::simgen;

TEST_CASE("simulation specs carry the documented mixtures") {
    const auto s1 = simulation_spec(1, 4);
    CHECK(s1.pi1 == Catch::Approx(1.0 / 3.0).margin(1e-15));
    REQUIRE(s1.class1.size() == 1);
    REQUIRE(s1.class0.size() == 1);
    CHECK(s1.class1[0].mean.isZero());
    CHECK(s1.class0[0].mean(0) == Catch::Approx(1.0).margin(1e-15));  // 2/sqrt(4)

    const auto s2 = simulation_spec(2, 3);
    CHECK(s2.pi1 == Catch::Approx(1.0 / 3.0).margin(1e-15));
    REQUIRE(s2.class1.size() == 2);
    CHECK(s2.class1[1].mean(2) == 3.0);
    CHECK(s2.class0[1].cov(0, 0) == 2.0);

    const auto s3 = simulation_spec(3, 5);
    CHECK(s3.pi1 == 0.5);
    CHECK(s3.class1[0].cov(0, 3) == Catch::Approx(std::pow(0.6, 3)).margin(1e-15));
    CHECK(s3.class1[1].cov(1, 2) == Catch::Approx(2.0 * 0.6).margin(1e-15));

    CHECK_THROWS_AS(simulation_spec(4, 2), std::invalid_argument);
    CHECK_THROWS_AS(simulation_spec(1, 0), std::invalid_argument);
}

TEST_CASE("non positive definite covariance is rejected") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(make_component(1.0, Eigen::VectorXd::Zero(2), bad), std::invalid_argument);
}

TEST_CASE("sampling is deterministic and respects the class prior") {
    const auto spec = simulation_spec(1, 4);
    SeededRng rng_a(42);
    SeededRng rng_b(42);
    const auto a = sample(spec, 500, rng_a);
    const auto b = sample(spec, 500, rng_b);
    REQUIRE(a.n == 500);
    REQUIRE(a.d == 4);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);

    SeededRng rng_c(43);
    const auto big = sample(spec, 30000, rng_c);
    double frac = 0.0;
    for (const int y : big.labels) frac += y;
    frac /= static_cast<double>(big.n);
    // 3.5 sigma band around 1/3 with n = 30000
    CHECK(std::abs(frac - 1.0 / 3.0) < 0.0096);
}

TEST_CASE("regression function matches the closed form at the origin") {
    const auto spec = simulation_spec(1, 4);
    const std::vector<double> origin(4, 0.0);
    // pi1 phi(0) vs (1-pi1) phi at squared distance d * (2/sqrt(d))^2 = 4:
    // eta(0) = 1 / (1 + 2 exp(-2)).
    CHECK(eta(spec, origin) == Catch::Approx(1.0 / (1.0 + 2.0 * std::exp(-2.0))).margin(1e-12));
    CHECK(eta(spec, origin) == Catch::Approx(0.786986042161599).margin(1e-12));
    CHECK(bayes_classify(spec, origin) == 1);

    const std::vector<double> deep_zero(4, 1.0);  // the class-0 mean
    CHECK(bayes_classify(spec, deep_zero) == 0);

    const std::vector<double> wrong_dim(3, 0.0);
    CHECK_THROWS_AS(eta(spec, wrong_dim), std::invalid_argument);
}

TEST_CASE("eta saturates far from both classes without overflow") {
    const auto spec = simulation_spec(1, 2);
    const std::vector<double> far_one(2, -400.0);
    const std::vector<double> far_zero(2, 400.0);
    CHECK(eta(spec, far_one) == 1.0);
    CHECK(eta(spec, far_zero) == 0.0);
}

TEST_CASE("Monte Carlo Bayes risk agrees with the closed form") {
    const auto spec = simulation_spec(1, 4);
    SeededRng rng(2026);
    const std::size_t n = 200000;
    const double est = bayes_risk_mc(spec, n, rng);
    const double truth = 0.1449527711;
    const double sigma = std::sqrt(truth * (1.0 - truth) / static_cast<double>(n));
    CHECK(std::abs(est - truth) < 3.0 * sigma);
}

TEST_CASE("bimodal and correlated settings sample cleanly") {
    for (const int id : {2, 3}) {
        const auto spec = simulation_spec(id, 6);
        SeededRng rng(7 + static_cast<std::uint64_t>(id));
        const auto data = sample(spec, 2000, rng);
        REQUIRE(data.n == 2000);
        REQUIRE(data.d == 6);
        for (const double v : data.features) REQUIRE(std::isfinite(v));
        // Both classes present, and eta is a proper probability on samples.
        int ones = 0;
        for (const int y : data.labels) ones += y;
        CHECK(ones > 100);
        CHECK(ones < 1900);
        for (std::size_t i = 0; i < 50; ++i) {
            const double e = eta(spec, data.row(i));
            REQUIRE(e >= 0.0);
            REQUIRE(e <= 1.0);
        }
    }
}
