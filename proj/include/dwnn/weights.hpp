#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwnn::weights {

namespace detail {

// Ceiling of a positive pow() result with a guard against values landing one
// ulp above an exact integer (e.g. 1024^0.7 = 128 exactly).
inline std::size_t ceil_guarded(double v) {
    return static_cast<std::size_t>(std::ceil(v - 1e-9));
}

inline void check_range(std::size_t value, std::size_t n, const char* who, const char* name) {
    if (value < 1 || value > n)
        throw std::out_of_range(std::string(who) + ": " + name + "=" + std::to_string(value) +
                                " out of range [1, " + std::to_string(n) + "]");
}

}  // namespace detail

// alpha_i = i^{1+2/d} - (i-1)^{1+2/d}, the bias-weighting sequence of the
// regret expansion.
inline double alpha(double i, std::size_t d) {
    if (i < 1.0) throw std::out_of_range("alpha: i must be >= 1");
    if (d < 1) throw std::out_of_range("alpha: d must be >= 1");
    const double p = 1.0 + 2.0 / static_cast<double>(d);
    return std::pow(i, p) - std::pow(i - 1.0, p);
}

// w_i = 1/k for i <= k, else 0.
inline std::vector<double> uniform_k_weights(std::size_t n, std::size_t k) {
    detail::check_range(k, n, "uniform_k_weights", "k");
    std::vector<double> w(n, 0.0);
    const double v = 1.0 / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = v;
    return w;
}

// Optimal weights with cutoff m: w_i = (1/m)[1 + d/2 - d*alpha_i/(2 m^{2/d})]
// for i <= m, zero beyond. For finite m the bracket can dip microscopically
// below zero at i = m; negatives are clamped to zero and the vector is
// renormalized, preserving nonnegativity and the unit sum.
inline std::vector<double> ownn_weights(std::size_t n, std::size_t m, std::size_t d) {
    detail::check_range(m, n, "ownn_weights", "m");
    if (d < 1) throw std::out_of_range("ownn_weights: d must be >= 1");
    std::vector<double> w(n, 0.0);
    const double dd = static_cast<double>(d);
    const double md = static_cast<double>(m);
    const double scale = 2.0 * std::pow(md, 2.0 / dd);
    double sum = 0.0;
    for (std::size_t i = 1; i <= m; ++i) {
        const double v = (1.0 + dd / 2.0 - dd * alpha(static_cast<double>(i), d) / scale) / md;
        w[i - 1] = v > 0.0 ? v : 0.0;
        sum += w[i - 1];
    }
    for (std::size_t i = 0; i < m; ++i) w[i] /= sum;
    return w;
}

// Geometric weights of the infinite-simulation bagged 1-NN:
// w_i = q(1-q)^{i-1} / [1 - (1-q)^N].
inline std::vector<double> bnn_weights(std::size_t n, double q) {
    if (n < 1) throw std::out_of_range("bnn_weights: n must be >= 1");
    if (!(q > 0.0 && q < 1.0))
        throw std::out_of_range("bnn_weights: q=" + std::to_string(q) + " out of (0,1)");
    std::vector<double> w(n);
    double term = q;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = term;
        sum += term;
        term *= 1.0 - q;
    }
    for (auto& v : w) v /= sum;
    return w;
}

// k* = ceil((pi/2)^{d/(d+4)} K/s), truncated at 1.
inline std::size_t bridge_k_majority(std::size_t k_oracle, std::size_t s, std::size_t d) {
    if (k_oracle < 1 || s < 1 || d < 1)
        throw std::out_of_range("bridge_k_majority: arguments must be >= 1");
    const double dd = static_cast<double>(d);
    const double factor = std::pow(std::numbers::pi / 2.0, dd / (dd + 4.0));
    const std::size_t k = detail::ceil_guarded(factor * static_cast<double>(k_oracle) / static_cast<double>(s));
    return k < 1 ? 1 : k;
}

// k_dagger = ceil(K/s), truncated at 1.
inline std::size_t bridge_k_weighted(std::size_t k_oracle, std::size_t s) {
    if (k_oracle < 1 || s < 1) throw std::out_of_range("bridge_k_weighted: arguments must be >= 1");
    const std::size_t k = (k_oracle + s - 1) / s;
    return k < 1 ? 1 : k;
}

inline std::size_t bridge_l_majority(std::size_t m_oracle, std::size_t s, std::size_t d) {
    return bridge_k_majority(m_oracle, s, d);
}

inline std::size_t bridge_l_weighted(std::size_t m_oracle, std::size_t s) {
    return bridge_k_weighted(m_oracle, s);
}

// Literal evaluation of the admissibility conditions (w.1)-(w.5) with
// k2 = ceil(n^{1-beta}), plus the majority-voting side condition ratio
// sum(w^3)/(sum(w^2))^{3/2} against s^{-1/2} (log s)^{-2}. Diagnostic only;
// never blocks training.
struct AdmissibilityReport {
    double beta = 0.0;
    std::size_t n = 0;
    std::size_t k2 = 0;
    bool w1 = false, w2 = false, w3 = false, w4 = false, w5 = false;
    double sum_w2 = 0.0;          // (w.1) lhs, vs n^{-beta}
    double bias_term = 0.0;       // (w.2) lhs: n^{-4/d} (sum alpha_i w_i)^2
    double tail_mass_ratio = 0.0; // (w.3) lhs
    double tail_sq_ratio = 0.0;   // (w.4) lhs
    double third_moment = 0.0;    // (w.5) lhs: sum(w^3)/(sum(w^2))^{3/2}
    double vote_ratio = 0.0;      // third_moment / (s^{-1/2} (log s)^{-2})
    double vote_bound = 0.0;      // s^{-1/2} (log s)^{-2}, +inf when s <= 1
    bool all() const { return w1 && w2 && w3 && w4 && w5; }
};

inline AdmissibilityReport check_admissibility(const std::vector<double>& w, double beta,
                                               std::size_t s, std::size_t d) {
    if (!(beta > 0.0 && beta < 0.5))
        throw std::out_of_range("check_admissibility: beta=" + std::to_string(beta) + " out of (0, 1/2)");
    if (w.empty()) throw std::invalid_argument("check_admissibility: empty weight vector");
    if (d < 1) throw std::out_of_range("check_admissibility: d must be >= 1");
    const std::size_t n = w.size();
    const double nd = static_cast<double>(n);
    const double logn = std::log(nd);

    AdmissibilityReport rep;
    rep.beta = beta;
    rep.n = n;
    rep.k2 = detail::ceil_guarded(std::pow(nd, 1.0 - beta));

    double sum_w2 = 0.0, sum_w3 = 0.0, sum_alpha_w = 0.0;
    double tail_mass = 0.0, tail_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = w[i];
        sum_w2 += wi * wi;
        sum_w3 += wi * wi * wi;
        sum_alpha_w += alpha(static_cast<double>(i + 1), d) * wi;
        if (i + 1 > rep.k2) {
            tail_mass += wi;
            tail_sq += wi * wi;
        }
    }
    rep.sum_w2 = sum_w2;
    rep.bias_term = std::pow(nd, -4.0 / static_cast<double>(d)) * sum_alpha_w * sum_alpha_w;
    rep.tail_mass_ratio = std::pow(nd, 2.0 / static_cast<double>(d)) * tail_mass / sum_alpha_w;
    rep.tail_sq_ratio = tail_sq / sum_w2;
    rep.third_moment = sum_w3 / std::pow(sum_w2, 1.5);

    const double n_beta = std::pow(nd, -beta);
    rep.w1 = sum_w2 <= n_beta;
    rep.w2 = rep.bias_term <= n_beta;
    rep.w3 = rep.tail_mass_ratio <= 1.0 / logn;
    rep.w4 = rep.tail_sq_ratio <= 1.0 / logn;
    rep.w5 = rep.third_moment <= 1.0 / logn;

    if (s > 1) {
        const double sd = static_cast<double>(s);
        rep.vote_bound = 1.0 / (std::sqrt(sd) * std::log(sd) * std::log(sd));
        rep.vote_ratio = rep.third_moment / rep.vote_bound;
    } else {
        rep.vote_bound = std::numeric_limits<double>::infinity();
        rep.vote_ratio = 0.0;
    }
    return rep;
}

}  // namespace dwnn::weights
