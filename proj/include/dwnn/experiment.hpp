#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dwnn/core.hpp"
#include "dwnn/ensemble.hpp"
#include "dwnn/evaluation.hpp"
#include "dwnn/io.hpp"
#include "dwnn/parallel.hpp"
#include "dwnn/rng.hpp"
#include "dwnn/simgen.hpp"
#include "dwnn/theory.hpp"
#include "dwnn/tuning.hpp"
#include "dwnn/version.hpp"
#include "dwnn/weights.hpp"

namespace dwnn::experiment {

enum class Method {
    oracle_knn,
    oracle_ownn,
    oracle_bnn,
    mdnn_k,
    wdnn_k,
    mdnn_ownn,
    wdnn_ownn,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::oracle_knn: return "oracle-knn";
        case Method::oracle_ownn: return "oracle-ownn";
        case Method::oracle_bnn: return "oracle-bnn";
        case Method::mdnn_k: return "m-dnn-k";
        case Method::wdnn_k: return "w-dnn-k";
        case Method::mdnn_ownn: return "m-dnn-ownn";
        case Method::wdnn_ownn: return "w-dnn-ownn";
    }
    throw std::logic_error("method_name: unknown method");
}

// Accepts both the hyphenated spelling ("m-dnn-k") and the display spelling
// ("M-DNN(k)"), case-insensitively.
inline Method parse_method(const std::string& text) {
    std::string t;
    for (char c : text) {
        if (c == '(' || c == ')' || c == '_' || c == ' ') c = '-';
        t += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    std::string norm;
    for (char c : t)
        if (c != '-' || (!norm.empty() && norm.back() != '-')) norm += c;
    while (!norm.empty() && norm.back() == '-') norm.pop_back();
    while (!norm.empty() && norm.front() == '-') norm.erase(norm.begin());

    static const std::map<std::string, Method> table = {
        {"oracle-knn", Method::oracle_knn},   {"oracle-ownn", Method::oracle_ownn},
        {"oracle-bnn", Method::oracle_bnn},   {"m-dnn-k", Method::mdnn_k},
        {"w-dnn-k", Method::wdnn_k},          {"m-dnn-ownn", Method::mdnn_ownn},
        {"w-dnn-ownn", Method::wdnn_ownn},
    };
    const auto it = table.find(norm);
    if (it == table.end())
        throw std::runtime_error(
            "unknown method '" + text +
            "' (expected one of: oracle-knn, oracle-ownn, oracle-bnn, m-dnn-k, w-dnn-k, "
            "m-dnn-ownn, w-dnn-ownn)");
    return it->second;
}

inline bool is_oracle(Method m) {
    return m == Method::oracle_knn || m == Method::oracle_ownn || m == Method::oracle_bnn;
}

struct ExperimentConfig {
    enum class Source { simulation, csv };

    Source source = Source::simulation;
    int sim_id = 1;
    std::size_t sim_d = 4;
    std::size_t sim_n = 2700;  // training size per replication
    std::string csv_path;
    std::string csv_label;
    std::string csv_label_positive;
    bool standardize = true;

    std::vector<Method> methods;
    std::vector<double> gammas;
    std::size_t replications = 100;
    std::size_t cis_pairs = 0;  // 0 disables the CIS table
    std::size_t test_size = 0;  // 0 = rule default (1000 for simulations, min(1000, N/5) for CSV)

    std::string oracle_k = "auto";  // auto | cv | <integer>
    std::string ownn_m = "cv";      // cv | <integer>
    std::string bnn_q = "cv";       // cv | <value in (0,1]>
    std::size_t cv_folds = 5;
    double grid_c = 4.0;
    std::size_t bayes_mc_samples = 200000;

    std::optional<std::uint64_t> seed;
    unsigned threads = 0;  // 0 = hardware default
    std::string out_dir;

    static ExperimentConfig from_config(const io::Config& c) {
        ExperimentConfig cfg;
        const std::string mode = c.get_string("mode", "simulation");
        if (mode == "simulation") {
            cfg.source = Source::simulation;
            cfg.sim_id = static_cast<int>(c.get_u64("simulation", 1));
            cfg.sim_d = c.get_u64("d", 4);
            cfg.sim_n = c.get_u64("n_train", 2700);
        } else if (mode == "csv") {
            cfg.source = Source::csv;
            cfg.csv_path = c.get_string("csv_path");
            cfg.csv_label = c.get_string("csv_label");
            cfg.csv_label_positive = c.get_string("csv_label_positive", "");
            cfg.standardize = c.get_bool("standardize", true);
        } else {
            throw std::runtime_error(c.origin() + ": mode must be 'simulation' or 'csv', got '" +
                                     mode + "'");
        }
        for (const auto& name : c.get_string_list("methods"))
            cfg.methods.push_back(parse_method(name));
        cfg.gammas = c.get_double_list("gammas");
        cfg.replications = c.get_u64("replications", 100);
        cfg.cis_pairs = c.get_u64("cis_pairs", 0);
        cfg.test_size = c.get_u64("test_size", 0);
        cfg.oracle_k = c.get_string("oracle_k", "auto");
        cfg.ownn_m = c.get_string("ownn_m", "cv");
        cfg.bnn_q = c.get_string("bnn_q", "cv");
        cfg.cv_folds = c.get_u64("cv_folds", 5);
        cfg.grid_c = c.get_double("grid_c", 4.0);
        cfg.bayes_mc_samples = c.get_u64("bayes_mc_samples", 200000);
        if (c.has("seed")) cfg.seed = c.get_u64("seed");
        cfg.threads = static_cast<unsigned>(c.get_u64("threads", 0));
        cfg.out_dir = c.get_string("out", "");
        const auto unread = c.unread_keys();
        if (!unread.empty()) {
            std::string list;
            for (const auto& k : unread) list += (list.empty() ? "'" : ", '") + k + "'";
            throw std::runtime_error(c.origin() + ": unknown key(s) " + list);
        }
        cfg.validate();
        return cfg;
    }

    void validate() const {
        if (methods.empty()) throw std::runtime_error("config: methods list is empty");
        if (gammas.empty()) throw std::runtime_error("config: gammas list is empty");
        for (double g : gammas)
            if (!(g >= 0.0 && g <= 1.0))
                throw std::runtime_error("config: gamma values must lie in [0,1]");
        if (replications < 1) throw std::runtime_error("config: replications must be >= 1");
        if (source == Source::simulation) {
            if (sim_id < 1 || sim_id > 3)
                throw std::runtime_error("config: simulation must be 1, 2, or 3");
            if (sim_n < 2) throw std::runtime_error("config: n_train must be >= 2");
            if (sim_d < 1) throw std::runtime_error("config: d must be >= 1");
        }
        if (cv_folds < 2) throw std::runtime_error("config: cv_folds must be >= 2");
    }
};

// Oracle-level parameters shared by every grid cell.
struct TunedParams {
    std::size_t oracle_k = 0;
    std::size_t ownn_m = 0;
    double bnn_q = 0.0;
    std::size_t bnn_m = 0;  // effective BNN size ceil(1/q), for reporting
    std::optional<tune::TuneResult> cv_k, cv_m, cv_q;
};

// Everything about a grid cell that does not depend on the replication draw.
struct CellPlan {
    Method method = Method::oracle_knn;
    double gamma = 0.0;
    std::size_t gamma_index = 0;
    std::size_t s = 1;
    std::size_t n_shard = 0;
    std::size_t dropped = 0;
    std::size_t param_oracle = 0;
    std::size_t param_local = 0;  // 0 for oracle methods
    ensemble::VoteMode mode = ensemble::VoteMode::weighted;
    std::vector<double> w;
};

inline std::size_t shards_for(double gamma, std::size_t n_train) {
    const double raw = std::pow(static_cast<double>(n_train), gamma);
    const auto s = static_cast<std::size_t>(std::llround(raw));
    return std::clamp<std::size_t>(s, 1, n_train);
}

inline CellPlan plan_cell(Method m, double gamma, std::size_t gamma_index, std::size_t n_train,
                          std::size_t d, const TunedParams& tp) {
    using tune::Family;
    CellPlan p;
    p.method = m;
    p.gamma = gamma;
    p.gamma_index = gamma_index;
    p.s = is_oracle(m) ? 1 : shards_for(gamma, n_train);
    p.n_shard = n_train / p.s;
    p.dropped = n_train - p.s * p.n_shard;
    const auto local = [&](std::size_t bridged) { return std::min(bridged, p.n_shard); };
    switch (m) {
        case Method::oracle_knn:
            p.param_oracle = tp.oracle_k;
            p.w = tune::family_weights(Family::uniform_k, p.n_shard, tp.oracle_k, d);
            break;
        case Method::oracle_ownn:
            p.param_oracle = tp.ownn_m;
            p.w = tune::family_weights(Family::ownn, p.n_shard, tp.ownn_m, d);
            break;
        case Method::oracle_bnn:
            p.param_oracle = tp.bnn_m;
            // q = 1 resamples a single neighbor every time: plain 1-NN.
            p.w = tp.bnn_q >= 1.0 ? weights::uniform_k_weights(p.n_shard, 1)
                                  : weights::bnn_weights(p.n_shard, tp.bnn_q);
            break;
        case Method::mdnn_k:
            p.param_oracle = tp.oracle_k;
            p.param_local = local(weights::bridge_k_majority(tp.oracle_k, p.s, d));
            p.w = tune::family_weights(Family::uniform_k, p.n_shard, p.param_local, d);
            p.mode = ensemble::VoteMode::majority;
            break;
        case Method::wdnn_k:
            p.param_oracle = tp.oracle_k;
            p.param_local = local(weights::bridge_k_weighted(tp.oracle_k, p.s));
            p.w = tune::family_weights(Family::uniform_k, p.n_shard, p.param_local, d);
            break;
        case Method::mdnn_ownn:
            p.param_oracle = tp.ownn_m;
            p.param_local = local(weights::bridge_l_majority(tp.ownn_m, p.s, d));
            p.w = tune::family_weights(Family::ownn, p.n_shard, p.param_local, d);
            p.mode = ensemble::VoteMode::majority;
            break;
        case Method::wdnn_ownn:
            p.param_oracle = tp.ownn_m;
            p.param_local = local(weights::bridge_l_weighted(tp.ownn_m, p.s));
            p.w = tune::family_weights(Family::ownn, p.n_shard, p.param_local, d);
            break;
    }
    return p;
}

// Test split rule: min(1000, floor(N/5)) unless overridden.
inline std::pair<Dataset, Dataset> split_test(const Dataset& data, SeededRng& rng,
                                              std::size_t test_size = 0) {
    if (data.n < 2) throw std::invalid_argument("split_test: need at least 2 rows");
    if (test_size == 0) test_size = std::min<std::size_t>(1000, data.n / 5);
    test_size = std::max<std::size_t>(test_size, 1);
    if (test_size >= data.n) throw std::invalid_argument("split_test: test size leaves no training data");
    const auto order = rng.permutation(static_cast<std::uint32_t>(data.n));
    Dataset train, test;
    train.d = test.d = data.d;
    for (std::size_t i = 0; i < data.n; ++i) {
        Dataset& dst = i < test_size ? test : train;
        const auto row = data.row(order[i]);
        dst.features.insert(dst.features.end(), row.begin(), row.end());
        dst.labels.push_back(data.labels[order[i]]);
        ++dst.n;
    }
    return {std::move(train), std::move(test)};
}

// Builds the CIS fit callback for one cell: the received rng drives the
// partition, so two fits of the same data still disagree through sharding.
inline eval::FitPredict make_fit_predict(Method m, double gamma, const TunedParams& tp,
                                         bool standardize) {
    return [m, gamma, tp, standardize](const Dataset& train, const Dataset& test,
                                       SeededRng& rng) {
        Dataset std_train, std_test;
        const Dataset* tr = &train;
        const Dataset* te = &test;
        if (standardize) {
            std_train = train;
            std_test = test;
            const auto st = io::Standardizer::fit(std_train);
            st.apply(std_train);
            st.apply(std_test);
            tr = &std_train;
            te = &std_test;
        }
        const CellPlan p = plan_cell(m, gamma, 0, tr->n, tr->d, tp);
        const auto part = ensemble::make_partition(tr->n, p.s, rng);
        const auto model = ensemble::DnnModel::fit(*tr, part, p.w, p.mode);
        return model.predict_batch(*te, 1);
    };
}

struct ExperimentResult {
    std::vector<eval::EvalReport> rows;  // grid order, successful cells only
    std::vector<std::string> cell_errors;
    TunedParams tuned;
    double bayes_risk = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_train = 0;
    std::size_t test_size = 0;
    bool all_ok = true;
    std::filesystem::path out_dir;
};

namespace detail {

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long out = std::stoull(v, &pos);
        if (pos != v.size() || out < 1) throw std::invalid_argument("bad");
        return static_cast<std::size_t>(out);
    } catch (...) {
        throw std::runtime_error("config: " + key + " expects 'cv' or a positive integer, got '" +
                                 v + "'");
    }
}

inline bool needs(const std::vector<Method>& ms, std::initializer_list<Method> which) {
    for (Method m : ms)
        for (Method w : which)
            if (m == w) return true;
    return false;
}

inline double ms_between(std::chrono::steady_clock::time_point a,
                         std::chrono::steady_clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace detail

// Resolves oracle parameters once per run; CV uses a dedicated data draw so
// the evaluation replications stay untouched.
inline TunedParams resolve_tuning(const ExperimentConfig& cfg, SeededRng& master,
                                  const std::function<Dataset(SeededRng&)>& draw_train,
                                  std::size_t n_train, std::size_t d, unsigned threads) {
    using tune::Family;
    TunedParams tp;
    const bool need_k = detail::needs(cfg.methods, {Method::oracle_knn, Method::mdnn_k, Method::wdnn_k});
    const bool need_m =
        detail::needs(cfg.methods, {Method::oracle_ownn, Method::mdnn_ownn, Method::wdnn_ownn});
    const bool need_q = detail::needs(cfg.methods, {Method::oracle_bnn});

    const bool any_cv = (need_k && cfg.oracle_k == "cv") || (need_m && cfg.ownn_m == "cv") ||
                        (need_q && cfg.bnn_q == "cv");
    Dataset tune_data;
    if (any_cv) {
        SeededRng rng = master.substream("tune-data");
        tune_data = draw_train(rng);
    }
    const auto grid = [&] { return tune::default_param_grid(n_train, d, cfg.grid_c); };

    if (need_k) {
        if (cfg.oracle_k == "auto") {
            tp.oracle_k = tune::default_oracle_k(n_train);
        } else if (cfg.oracle_k == "cv") {
            tp.cv_k = tune::cv_tune(tune_data, Family::uniform_k, grid(), cfg.cv_folds,
                                      master.substream("tune-k"), threads);
            tp.oracle_k = tp.cv_k->selected;
        } else {
            tp.oracle_k = std::min(detail::parse_count("oracle_k", cfg.oracle_k), n_train);
        }
    }
    if (need_m) {
        if (cfg.ownn_m == "cv") {
            tp.cv_m = tune::cv_tune(tune_data, Family::ownn, grid(), cfg.cv_folds,
                                      master.substream("tune-m"), threads);
            tp.ownn_m = tp.cv_m->selected;
        } else {
            tp.ownn_m = std::min(detail::parse_count("ownn_m", cfg.ownn_m), n_train);
        }
    }
    if (need_q) {
        if (cfg.bnn_q == "cv") {
            tp.cv_q = tune::cv_tune(tune_data, Family::bnn_effective_size, grid(), cfg.cv_folds,
                                      master.substream("tune-q"), threads);
            tp.bnn_m = tp.cv_q->selected;
            tp.bnn_q = 1.0 / static_cast<double>(tp.bnn_m);
        } else {
            double q = 0.0;
            try {
                std::size_t pos = 0;
                q = std::stod(cfg.bnn_q, &pos);
                if (pos != cfg.bnn_q.size()) throw std::invalid_argument("bad");
            } catch (...) {
                throw std::runtime_error("config: bnn_q expects 'cv' or a value in (0,1], got '" +
                                         cfg.bnn_q + "'");
            }
            if (!(q > 0.0 && q <= 1.0))
                throw std::runtime_error("config: bnn_q must lie in (0,1]");
            tp.bnn_q = q;
            tp.bnn_m = weights::detail::ceil_guarded(1.0 / q);
        }
    }
    return tp;
}

inline void write_risk_csv(const std::filesystem::path& path,
                           const std::vector<eval::EvalReport>& rows) {
    io::CsvWriter out(path, {"method", "gamma", "s", "n_total", "n_shard", "d", "param_oracle",
                             "param_local", "replications", "risk", "risk_se", "bayes_risk",
                             "regret", "dropped"});
    using W = io::CsvWriter;
    for (const auto& r : rows)
        out.write_row({r.method, W::num(r.gamma), W::num(r.s), W::num(r.n_total), W::num(r.n),
                       W::num(r.d), W::num(r.param_oracle), W::num(r.param_local),
                       W::num(r.replications), W::num(r.risk.mean), W::num(r.risk.stderr_of_mean),
                       W::num(r.bayes_risk), W::num(r.regret), W::num(r.dropped)});
}

inline void write_time_csv(const std::filesystem::path& path,
                           const std::vector<eval::EvalReport>& rows) {
    io::CsvWriter out(path, {"method", "gamma", "s", "replications", "fit_ms", "fit_ms_se",
                             "predict_ms", "predict_ms_se"});
    using W = io::CsvWriter;
    for (const auto& r : rows)
        out.write_row({r.method, W::num(r.gamma), W::num(r.s), W::num(r.replications),
                       W::num(r.fit_ms.mean), W::num(r.fit_ms.stderr_of_mean),
                       W::num(r.predict_ms.mean), W::num(r.predict_ms.stderr_of_mean)});
}

inline void write_cis_csv(const std::filesystem::path& path,
                          const std::vector<eval::EvalReport>& rows) {
    io::CsvWriter out(path, {"method", "gamma", "s", "pairs", "cis", "cis_se"});
    using W = io::CsvWriter;
    for (const auto& r : rows) {
        if (r.cis.count == 0) continue;
        out.write_row({r.method, W::num(r.gamma), W::num(r.s), W::num(r.cis.count),
                       W::num(r.cis.mean), W::num(r.cis.stderr_of_mean)});
    }
}

inline void write_constants_csv(const std::filesystem::path& path, std::size_t d_min,
                                std::size_t d_max) {
    io::CsvWriter out(path, {"d", "q", "q_prime", "q_double_prime", "q_ratio_bnn", "cis_majority",
                             "cis_prime", "cis_double_prime", "cis_ratio_bnn"});
    using W = io::CsvWriter;
    for (const auto& r : theory::figure1_table(d_min, d_max))
        out.write_row({W::num(r.d), W::num(r.q), W::num(r.q_prime), W::num(r.q_double_prime),
                       W::num(r.q_ratio_bnn), W::num(r.cis_majority), W::num(r.cis_prime),
                       W::num(r.cis_double_prime), W::num(r.cis_ratio_bnn)});
}

inline void write_manifest(const std::filesystem::path& path, const ExperimentConfig& cfg,
                           const io::Config* raw, const ExperimentResult& result,
                           unsigned threads) {
    nlohmann::json j;
    j["tool"] = "dwnn-experiment";
    j["version"] = version;
    j["seed"] = cfg.seed.value();
    j["threads"] = threads;
    j["source"] = cfg.source == ExperimentConfig::Source::simulation ? "simulation" : "csv";
    j["n_train"] = result.n_train;
    j["test_size"] = result.test_size;
    if (raw) {
        nlohmann::json echo;
        for (const auto& [k, v] : raw->entries()) echo[k] = v;
        j["config"] = echo;
    }
    nlohmann::json tuned;
    tuned["oracle_k"] = result.tuned.oracle_k;
    tuned["ownn_m"] = result.tuned.ownn_m;
    tuned["bnn_q"] = result.tuned.bnn_q;
    tuned["bnn_effective_size"] = result.tuned.bnn_m;
    const auto cv_block = [](const tune::TuneResult& t) {
        nlohmann::json b;
        b["grid"] = t.grid;
        b["cv_risk"] = t.cv_risk;
        b["cv_se"] = t.cv_se;
        b["selected"] = t.selected;
        b["folds"] = t.folds;
        return b;
    };
    if (result.tuned.cv_k) tuned["cv_uniform_k"] = cv_block(*result.tuned.cv_k);
    if (result.tuned.cv_m) tuned["cv_ownn"] = cv_block(*result.tuned.cv_m);
    if (result.tuned.cv_q) tuned["cv_bnn"] = cv_block(*result.tuned.cv_q);
    j["tuning"] = tuned;
    if (std::isfinite(result.bayes_risk)) j["bayes_risk_mc"] = result.bayes_risk;
    j["cells_total"] = cfg.methods.size() * cfg.gammas.size();
    j["cell_errors"] = result.cell_errors;
    j["outputs"] = {"risk_vs_gamma.csv", "time_vs_gamma.csv", "cis_table.csv", "manifest.json"};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path.string());
    out << j.dump(2) << '\n';
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const io::Config* raw_config = nullptr) {
    if (!cfg.seed) throw std::runtime_error("config: a seed is required");
    if (cfg.out_dir.empty()) throw std::runtime_error("config: an output directory is required");
    const unsigned threads =
        cfg.threads > 0 ? cfg.threads : static_cast<unsigned>(default_thread_count());
    SeededRng master(*cfg.seed);

    ExperimentResult result;
    result.out_dir = cfg.out_dir;
    std::filesystem::create_directories(result.out_dir);

    // Data provisioning: provision(rng) -> (train, test), already standardized.
    simgen::GaussianMixtureSpec spec;
    Dataset base;
    std::size_t n_train = 0, test_size = 0, d = 0;
    if (cfg.source == ExperimentConfig::Source::simulation) {
        spec = simgen::simulation_spec(cfg.sim_id, cfg.sim_d);
        d = cfg.sim_d;
        n_train = cfg.sim_n;
        test_size = cfg.test_size > 0 ? cfg.test_size : 1000;
    } else {
        base = io::load_csv(cfg.csv_path, cfg.csv_label, cfg.csv_label_positive);
        d = base.d;
        test_size = cfg.test_size > 0 ? cfg.test_size
                                      : std::max<std::size_t>(1, std::min<std::size_t>(1000, base.n / 5));
        if (test_size >= base.n)
            throw std::runtime_error("config: test_size leaves no training data");
        n_train = base.n - test_size;
    }
    result.n_train = n_train;
    result.test_size = test_size;

    const bool simulation = cfg.source == ExperimentConfig::Source::simulation;
    const auto provision = [&](SeededRng& rng) -> std::pair<Dataset, Dataset> {
        if (simulation) {
            Dataset train = simgen::sample(spec, n_train, rng);
            Dataset test = simgen::sample(spec, test_size, rng);
            return {std::move(train), std::move(test)};
        }
        auto [train, test] = split_test(base, rng, test_size);
        if (cfg.standardize) {
            const auto st = io::Standardizer::fit(train);
            st.apply(train);
            st.apply(test);
        }
        return {std::move(train), std::move(test)};
    };
    const auto draw_train = [&](SeededRng& rng) {
        auto [train, test] = provision(rng);
        return std::move(train);
    };

    std::cerr << "[tune] resolving oracle parameters (n_train=" << n_train << ", d=" << d << ")\n";
    result.tuned = resolve_tuning(cfg, master, draw_train, n_train, d, threads);
    if (simulation) {
        SeededRng rng = master.substream("bayes");
        result.bayes_risk = simgen::bayes_risk_mc(spec, cfg.bayes_mc_samples, rng);
        std::cerr << "[bayes] Monte Carlo Bayes risk " << result.bayes_risk << " ("
                  << cfg.bayes_mc_samples << " samples)\n";
    }

    // Unique work cells: oracle methods are gamma-independent, so they are
    // evaluated once and their row is replicated across the gamma grid.
    std::vector<CellPlan> plans;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> cell_of;  // (mi, gi) -> plan idx
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const Method m = cfg.methods[mi];
        if (is_oracle(m)) {
            const std::size_t idx = plans.size();
            plans.push_back(plan_cell(m, 0.0, 0, n_train, d, result.tuned));
            for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) cell_of[{mi, gi}] = idx;
        } else {
            for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
                cell_of[{mi, gi}] = plans.size();
                plans.push_back(plan_cell(m, cfg.gammas[gi], gi, n_train, d, result.tuned));
            }
        }
    }

    const std::size_t R = cfg.replications;
    struct RepSlot {
        double risk = 0.0, fit_ms = 0.0, predict_ms = 0.0;
        bool ok = false;
        std::string error;
    };
    std::vector<std::vector<RepSlot>> slots(plans.size(), std::vector<RepSlot>(R));

    parallel_for(plans.size() * R, threads, [&](std::size_t task) {
        const std::size_t c = task / R;
        const std::size_t r = task % R;
        RepSlot& slot = slots[c][r];
        try {
            const CellPlan& p = plans[c];
            SeededRng data_rng = master.substream("data", r);
            const auto [train, test] = provision(data_rng);
            SeededRng part_rng = master.substream("part", r).substream(p.gamma_index);
            const auto t0 = std::chrono::steady_clock::now();
            const auto partition = ensemble::make_partition(train.n, p.s, part_rng);
            const auto model = ensemble::DnnModel::fit(train, partition, p.w, p.mode);
            const auto t1 = std::chrono::steady_clock::now();
            const auto preds = model.predict_batch(test, 1);
            const auto t2 = std::chrono::steady_clock::now();
            slot.risk = eval::empirical_risk(preds, test.labels);
            slot.fit_ms = detail::ms_between(t0, t1);
            slot.predict_ms = detail::ms_between(t1, t2);
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
    });

    // Aggregate per unique cell.
    struct CellSummary {
        eval::MeanStderr risk, fit_ms, predict_ms, cis;
        bool ok = false;
        std::string error;
    };
    std::vector<CellSummary> summaries(plans.size());
    for (std::size_t c = 0; c < plans.size(); ++c) {
        CellSummary& cs = summaries[c];
        std::vector<double> risks, fits, preds;
        risks.reserve(R);
        for (const RepSlot& slot : slots[c]) {
            if (!slot.ok) {
                if (cs.error.empty()) cs.error = slot.error;
                continue;
            }
            risks.push_back(slot.risk);
            fits.push_back(slot.fit_ms);
            preds.push_back(slot.predict_ms);
        }
        if (!cs.error.empty()) continue;
        cs.risk = eval::summarize(risks);
        cs.fit_ms = eval::summarize(fits);
        cs.predict_ms = eval::summarize(preds);
        cs.ok = true;
    }

    // CIS pass: fresh-draw CIS for simulations, split-half CIS for CSV data.
    if (cfg.cis_pairs > 0) {
        Dataset cis_test, cis_pool;
        if (simulation) {
            SeededRng rng = master.substream("cis-test");
            cis_test = simgen::sample(spec, test_size, rng);
        } else {
            SeededRng rng = master.substream("cis-test");
            auto [pool, test] = split_test(base, rng, test_size);
            cis_pool = std::move(pool);
            cis_test = std::move(test);
        }
        for (std::size_t c = 0; c < plans.size(); ++c) {
            if (!summaries[c].ok) continue;
            const CellPlan& p = plans[c];
            try {
                const auto fit = make_fit_predict(p.method, p.gamma, result.tuned,
                                                  !simulation && cfg.standardize);
                SeededRng rng = master.substream("cis", p.gamma_index);
                if (simulation) {
                    const eval::TrainSetSource source = [&](SeededRng& r, std::size_t) {
                        return simgen::sample(spec, n_train, r);
                    };
                    summaries[c].cis =
                        eval::empirical_cis(source, fit, cis_test, cfg.cis_pairs, rng, threads);
                } else {
                    summaries[c].cis = eval::empirical_cis_fixed(cis_pool, fit, cis_test,
                                                                 cfg.cis_pairs, rng, threads);
                }
            } catch (const std::exception& e) {
                summaries[c].ok = false;
                summaries[c].error = std::string("cis: ") + e.what();
            }
        }
    }

    // Emit rows in grid order.
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        for (std::size_t gi = 0; gi < cfg.gammas.size(); ++gi) {
            const std::size_t c = cell_of[{mi, gi}];
            const CellPlan& p = plans[c];
            const CellSummary& cs = summaries[c];
            std::ostringstream tag;
            tag << "[" << method_name(cfg.methods[mi]) << " gamma=" << cfg.gammas[gi] << "]";
            if (!cs.ok) {
                result.all_ok = false;
                if (gi == 0 || !is_oracle(cfg.methods[mi]))
                    result.cell_errors.push_back(tag.str() + " " + cs.error);
                std::cerr << tag.str() << " FAILED: " << cs.error << "\n";
                continue;
            }
            eval::EvalReport row;
            row.method = method_name(p.method);
            row.gamma = cfg.gammas[gi];
            row.s = p.s;
            row.n = p.n_shard;
            row.d = d;
            row.n_total = n_train;
            row.param_oracle = p.param_oracle;
            row.param_local = p.param_local;
            row.risk = cs.risk;
            row.bayes_risk = result.bayes_risk;
            row.regret = cs.risk.mean - result.bayes_risk;
            row.cis = cs.cis;
            row.fit_ms = cs.fit_ms;
            row.predict_ms = cs.predict_ms;
            row.dropped = p.dropped;
            row.replications = cs.risk.count;
            result.rows.push_back(std::move(row));
            std::cerr << tag.str() << " risk=" << cs.risk.mean << " se=" << cs.risk.stderr_of_mean
                      << " s=" << p.s << "\n";
        }
    }

    write_risk_csv(result.out_dir / "risk_vs_gamma.csv", result.rows);
    write_time_csv(result.out_dir / "time_vs_gamma.csv", result.rows);
    write_cis_csv(result.out_dir / "cis_table.csv", result.rows);
    write_manifest(result.out_dir / "manifest.json", cfg, raw_config, result, threads);
    return result;
}

}  // namespace dwnn::experiment
