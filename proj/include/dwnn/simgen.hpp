#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "dwnn/core.hpp"
#include "dwnn/rng.hpp"

namespace dwnn::simgen {

struct GaussianComponent {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd chol;    // lower-triangular factor, cov = chol * chol^T
    double log_norm = 0.0;   // -(d/2) log(2 pi) - (1/2) log det(cov)
};

struct GaussianMixtureSpec {
    int id = 0;  // 1..3 for the built-in simulations, 0 for custom specs
    std::size_t d = 0;
    double pi1 = 0.5;  // prior P(Y = 1)
    std::vector<GaussianComponent> class1;
    std::vector<GaussianComponent> class0;
};

inline GaussianComponent make_component(double weight, const Eigen::VectorXd& mean,
                                        const Eigen::MatrixXd& cov) {
    GaussianComponent c;
    c.weight = weight;
    c.mean = mean;
    c.cov = cov;
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("make_component: covariance is not positive definite");
    c.chol = llt.matrixL();
    const double d = static_cast<double>(mean.size());
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < c.chol.rows(); ++i) log_det += 2.0 * std::log(c.chol(i, i));
    c.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det);
    return c;
}

namespace detail {

inline Eigen::MatrixXd toeplitz_06(std::size_t d) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            m(i, j) = std::pow(0.6, std::abs(static_cast<double>(i - j)));
    return m;
}

}  // namespace detail

// The three benchmark simulation settings:
//   1: P1 = N(0_d, I), P0 = N((2/sqrt(d)) 1_d, I), pi1 = 1/3.
//   2: bimodal, P1 = 0.5 N(0_d, I) + 0.5 N(3 1_d, 2I),
//              P0 = 0.5 N(1.5 1_d, I) + 0.5 N(4.5 1_d, 2I), pi1 = 1/3.
//   3: same means as 2 with Toeplitz covariances Sigma(i,j) = 0.6^{|i-j|}
//      (first component) and 2 Sigma (second component), pi1 = 1/2.
inline GaussianMixtureSpec simulation_spec(int id, std::size_t d) {
    if (d < 1) throw std::invalid_argument("simulation_spec: d must be >= 1");
    const auto di = static_cast<Eigen::Index>(d);
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(di, di);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(di);
    GaussianMixtureSpec spec;
    spec.id = id;
    spec.d = d;
    switch (id) {
        case 1:
            spec.pi1 = 1.0 / 3.0;
            spec.class1 = {make_component(1.0, Eigen::VectorXd::Zero(di), eye)};
            spec.class0 = {make_component(1.0, (2.0 / std::sqrt(static_cast<double>(d))) * ones, eye)};
            break;
        case 2:
            spec.pi1 = 1.0 / 3.0;
            spec.class1 = {make_component(0.5, Eigen::VectorXd::Zero(di), eye),
                           make_component(0.5, 3.0 * ones, 2.0 * eye)};
            spec.class0 = {make_component(0.5, 1.5 * ones, eye),
                           make_component(0.5, 4.5 * ones, 2.0 * eye)};
            break;
        case 3: {
            spec.pi1 = 0.5;
            const Eigen::MatrixXd sigma = detail::toeplitz_06(d);
            spec.class1 = {make_component(0.5, Eigen::VectorXd::Zero(di), sigma),
                           make_component(0.5, 3.0 * ones, 2.0 * sigma)};
            spec.class0 = {make_component(0.5, 1.5 * ones, sigma),
                           make_component(0.5, 4.5 * ones, 2.0 * sigma)};
            break;
        }
        default:
            throw std::invalid_argument("simulation_spec: invalid id " + std::to_string(id) +
                                        " (expected 1, 2 or 3)");
    }
    return spec;
}

namespace detail {

inline const GaussianComponent& pick_component(const std::vector<GaussianComponent>& mix,
                                               SeededRng& rng) {
    if (mix.size() == 1) return mix.front();
    const double u = rng.uniform01();
    double acc = 0.0;
    for (const auto& c : mix) {
        acc += c.weight;
        if (u < acc) return c;
    }
    return mix.back();
}

// Log density of one Gaussian component (without the mixture weight).
inline double log_density(const GaussianComponent& c, QueryPoint x) {
    const auto d = static_cast<Eigen::Index>(x.size());
    Eigen::VectorXd diff(d);
    for (Eigen::Index j = 0; j < d; ++j) diff(j) = x[static_cast<std::size_t>(j)] - c.mean(j);
    // Solve L z = diff; the quadratic form is |z|^2.
    const Eigen::VectorXd z = c.chol.triangularView<Eigen::Lower>().solve(diff);
    return c.log_norm - 0.5 * z.squaredNorm();
}

// log(sum_c weight_c * density_c(x)) via log-sum-exp.
inline double log_mixture_density(const std::vector<GaussianComponent>& mix, QueryPoint x) {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(mix.size());
    for (const auto& c : mix) {
        terms.push_back(std::log(c.weight) + log_density(c, x));
        max_term = std::max(max_term, terms.back());
    }
    double acc = 0.0;
    for (const double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

}  // namespace detail

// Draws n labeled points: Y ~ Bernoulli(pi1), X from the label's mixture.
inline Dataset sample(const GaussianMixtureSpec& spec, std::size_t n, SeededRng& rng) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    Dataset out;
    out.n = n;
    out.d = spec.d;
    out.features.resize(n * spec.d);
    out.labels.resize(n);
    Eigen::VectorXd z(static_cast<Eigen::Index>(spec.d));
    for (std::size_t i = 0; i < n; ++i) {
        const bool one = rng.bernoulli(spec.pi1);
        out.labels[i] = one ? 1 : 0;
        const GaussianComponent& c = detail::pick_component(one ? spec.class1 : spec.class0, rng);
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
        const Eigen::VectorXd x = c.mean + c.chol * z;
        for (std::size_t j = 0; j < spec.d; ++j) out.features[i * spec.d + j] = x(static_cast<Eigen::Index>(j));
    }
    return out;
}

// Exact regression function eta(x) = P(Y=1 | X=x), computed in log space.
inline double eta(const GaussianMixtureSpec& spec, QueryPoint x) {
    if (x.size() != spec.d)
        throw std::invalid_argument("eta: query dimension " + std::to_string(x.size()) +
                                    " does not match spec dimension " + std::to_string(spec.d));
    const double l1 = std::log(spec.pi1) + detail::log_mixture_density(spec.class1, x);
    const double l0 = std::log(1.0 - spec.pi1) + detail::log_mixture_density(spec.class0, x);
    // eta = 1 / (1 + exp(l0 - l1)), saturating cleanly at 0 and 1.
    const double diff = l0 - l1;
    if (diff > 700.0) return 0.0;
    if (diff < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(diff));
}

inline int bayes_classify(const GaussianMixtureSpec& spec, QueryPoint x) {
    return eta(spec, x) >= 0.5 ? 1 : 0;
}

// Monte Carlo estimate of the Bayes risk: P(bayes_classify(X) != Y).
inline double bayes_risk_mc(const GaussianMixtureSpec& spec, std::size_t n, SeededRng& rng) {
    const Dataset mc = sample(spec, n, rng);
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (bayes_classify(spec, mc.row(i)) != mc.labels[i]) ++wrong;
    return static_cast<double>(wrong) / static_cast<double>(n);
}

}  // namespace dwnn::simgen
