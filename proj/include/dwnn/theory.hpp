#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace dwnn::theory {

// Majority-voting constant Q = (pi/2)^{4/(d+4)}.
inline double q_majority(std::size_t d) {
    const double dd = static_cast<double>(d);
    return std::pow(std::numbers::pi / 2.0, 4.0 / (dd + 4.0));
}

// kNN-vs-optimal-weights penalty Q' = 2^{-4/(d+4)} ((d+4)/(d+2))^{(2d+4)/(d+4)}.
inline double q_prime(std::size_t d) {
    const double dd = static_cast<double>(d);
    return std::pow(2.0, -4.0 / (dd + 4.0)) *
           std::pow((dd + 4.0) / (dd + 2.0), (2.0 * dd + 4.0) / (dd + 4.0));
}

// BNN-vs-optimal-weights ratio
// Q'' = 2^{-8/(d+4)} Gamma(2+2/d)^{2d/(d+4)} ((d+4)/(d+2))^{(2d+4)/(d+4)},
// evaluated through lgamma so the large-d sweep cannot overflow.
inline double q_double_prime(std::size_t d) {
    const double dd = static_cast<double>(d);
    const double log_gamma = std::lgamma(2.0 + 2.0 / dd);
    const double log_value = -8.0 / (dd + 4.0) * std::numbers::ln2 +
                             2.0 * dd / (dd + 4.0) * log_gamma +
                             (2.0 * dd + 4.0) / (dd + 4.0) * std::log((dd + 4.0) / (dd + 2.0));
    return std::exp(log_value);
}

// Sharp partition-exponent bounds: gamma* = 2/(d+4) for majority voting,
// gamma^dagger = 4/(d+4) for weighted voting.
inline double gamma_star(std::size_t d) { return 2.0 / (static_cast<double>(d) + 4.0); }
inline double gamma_dagger(std::size_t d) { return 4.0 / (static_cast<double>(d) + 4.0); }

// Largest admissible shard counts in order of magnitude: s* = N^{2/(d+4)}
// (majority) and s^dagger = N^{4/(d+4)} (weighted); s^dagger >= s* always.
inline double s_star(double n_total, std::size_t d) { return std::pow(n_total, gamma_star(d)); }
inline double s_dagger(double n_total, std::size_t d) { return std::pow(n_total, gamma_dagger(d)); }

// One row of the constants table: regret ratios and their CIS counterparts
// (each CIS ratio is the square root of the matching regret ratio).
struct ConstantsRow {
    std::size_t d = 0;
    double q = 0.0;             // regret(M-DNN)/regret(oracle)
    double q_prime = 0.0;       // regret penalty of kNN weights vs optimal
    double q_double_prime = 0.0;// regret(oracle BNN)/regret(oracle OWNN)
    double q_ratio_bnn = 0.0;   // Q/Q'': regret(M-DNN)/regret(oracle BNN)
    double cis_majority = 0.0;      // sqrt(Q)
    double cis_prime = 0.0;         // sqrt(Q')
    double cis_double_prime = 0.0;  // sqrt(Q'')
    double cis_ratio_bnn = 0.0;     // sqrt(Q/Q'')
};

inline ConstantsRow constants_row(std::size_t d) {
    ConstantsRow row;
    row.d = d;
    row.q = q_majority(d);
    row.q_prime = q_prime(d);
    row.q_double_prime = q_double_prime(d);
    row.q_ratio_bnn = row.q / row.q_double_prime;
    row.cis_majority = std::sqrt(row.q);
    row.cis_prime = std::sqrt(row.q_prime);
    row.cis_double_prime = std::sqrt(row.q_double_prime);
    row.cis_ratio_bnn = std::sqrt(row.q_ratio_bnn);
    return row;
}

inline std::vector<ConstantsRow> figure1_table(std::size_t d_min, std::size_t d_max) {
    std::vector<ConstantsRow> rows;
    for (std::size_t d = d_min; d <= d_max; ++d) rows.push_back(constants_row(d));
    return rows;
}

}  // namespace dwnn::theory
