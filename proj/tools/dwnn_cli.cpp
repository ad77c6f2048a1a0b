// Experiment driver for the distributed weighted nearest neighbor library.
//
// Subcommands:
//   simulate   sample one of the built-in Gaussian mixture settings to CSV
//   tune       cross-validate a weight-family parameter on the configured data
//   run        execute a full (method x gamma) experiment grid from a config
//   constants  emit the asymptotic constants table over a dimension range
//   report     pretty-print the tables of a previous run directory

#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dwnn/dwnn.hpp"

namespace fs = std::filesystem;
using dwnn::SeededRng;
using dwnn::eval::EvalReport;

namespace {

std::string timestamped_dir(const std::string& cmd) {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
#if defined(_WIN32)
    localtime_s(&tm, &now);
#else
    localtime_r(&now, &tm);
#endif
    std::ostringstream ss;
    ss << "runs/" << cmd << '-' << std::put_time(&tm, "%Y%m%d-%H%M%S");
    return ss.str();
}

struct GlobalOpts {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    std::string out;

    fs::path out_dir(const std::string& cmd) const {
        return out.empty() ? fs::path(timestamped_dir(cmd)) : fs::path(out);
    }
};

void write_small_manifest(const fs::path& dir, nlohmann::json j) {
    j["tool"] = "dwnn-experiment";
    j["version"] = dwnn::version;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    out << j.dump(2) << '\n';
}

std::string fmt(double v, int prec) {
    if (std::isnan(v)) return "-";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(prec) << v;
    return ss.str();
}

void print_summary(const std::vector<EvalReport>& rows, std::ostream& os) {
    os << std::left << std::setw(13) << "method" << std::right << std::setw(7) << "gamma"
       << std::setw(6) << "s" << std::setw(8) << "param" << std::setw(10) << "risk"
       << std::setw(9) << "se" << std::setw(10) << "regret" << std::setw(10) << "cis"
       << std::setw(12) << "predict_ms" << '\n';
    for (const auto& r : rows) {
        const std::size_t param = r.param_local ? r.param_local : r.param_oracle;
        os << std::left << std::setw(13) << r.method << std::right << std::setw(7)
           << fmt(r.gamma, 1) << std::setw(6) << r.s << std::setw(8) << param << std::setw(10)
           << fmt(r.risk.mean, 4) << std::setw(9) << fmt(r.risk.stderr_of_mean, 4) << std::setw(10)
           << fmt(r.regret, 4) << std::setw(10)
           << fmt(r.cis.count ? r.cis.mean : std::numeric_limits<double>::quiet_NaN(), 4)
           << std::setw(12) << fmt(r.predict_ms.mean, 2) << '\n';
    }
}

// Speedup per gamma: oracle kNN predict time over the slower of the
// distributed methods at that gamma.
void print_speedups(const std::vector<EvalReport>& rows, std::ostream& os) {
    double oracle_ms = std::numeric_limits<double>::quiet_NaN();
    for (const auto& r : rows)
        if (r.method == "oracle-knn" && r.predict_ms.count) oracle_ms = r.predict_ms.mean;
    if (std::isnan(oracle_ms)) return;
    std::map<double, double> slower;
    for (const auto& r : rows) {
        if (r.method.rfind("m-dnn", 0) != 0 && r.method.rfind("w-dnn", 0) != 0) continue;
        if (!r.predict_ms.count) continue;
        auto [it, inserted] = slower.emplace(r.gamma, r.predict_ms.mean);
        if (!inserted) it->second = std::max(it->second, r.predict_ms.mean);
    }
    for (const auto& [gamma, ms] : slower)
        os << "speedup gamma=" << fmt(gamma, 1) << ": " << fmt(oracle_ms / ms, 2)
           << "x (oracle " << fmt(oracle_ms, 2) << " ms vs slower distributed " << fmt(ms, 2)
           << " ms)\n";
}

dwnn::experiment::ExperimentConfig load_experiment_config(const GlobalOpts& g,
                                                          const std::string& cmd,
                                                          dwnn::io::Config& raw) {
    if (g.config.empty()) throw std::runtime_error(cmd + ": --config is required");
    raw = dwnn::io::Config::parse_file(g.config);
    auto cfg = dwnn::experiment::ExperimentConfig::from_config(raw);
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads > 0) cfg.threads = g.threads;
    if (!g.out.empty())
        cfg.out_dir = g.out;
    else if (cfg.out_dir.empty())
        cfg.out_dir = timestamped_dir(cmd);
    return cfg;
}

int cmd_simulate(const GlobalOpts& g, int sim_id, std::size_t d, std::size_t n) {
    if (!g.seed) throw std::runtime_error("simulate: --seed is required");
    const fs::path dir = g.out_dir("simulate");
    fs::create_directories(dir);
    const auto spec = dwnn::simgen::simulation_spec(sim_id, d);
    SeededRng rng(*g.seed);
    SeededRng draw = rng.substream("data", 0);
    const auto data = dwnn::simgen::sample(spec, n, draw);

    std::vector<std::string> header;
    for (std::size_t j = 0; j < d; ++j) header.push_back("f" + std::to_string(j));
    header.push_back("label");
    dwnn::io::CsvWriter csv(dir / "data.csv", header);
    for (std::size_t i = 0; i < data.n; ++i) {
        std::vector<std::string> cells;
        for (std::size_t j = 0; j < d; ++j) {
            std::ostringstream ss;
            ss.precision(17);
            ss << data.features[i * d + j];
            cells.push_back(ss.str());
        }
        cells.push_back(std::to_string(data.labels[i]));
        csv.write_row(cells);
    }
    write_small_manifest(dir, {{"subcommand", "simulate"},
                               {"simulation", sim_id},
                               {"d", d},
                               {"n", n},
                               {"seed", *g.seed},
                               {"outputs", {"data.csv"}}});
    std::cout << "wrote " << (dir / "data.csv").string() << " (" << data.n << " rows, d=" << d
              << ")\n";
    return 0;
}

int cmd_tune(const GlobalOpts& g, const std::string& family_name) {
    dwnn::io::Config raw;
    auto cfg = load_experiment_config(g, "tune", raw);
    if (!cfg.seed) throw std::runtime_error("tune: a seed is required (config key or --seed)");
    dwnn::tune::Family family;
    if (family_name == "uniform-k")
        family = dwnn::tune::Family::uniform_k;
    else if (family_name == "ownn")
        family = dwnn::tune::Family::ownn;
    else if (family_name == "bnn")
        family = dwnn::tune::Family::bnn_effective_size;
    else
        throw std::runtime_error("tune: --family must be uniform-k, ownn, or bnn");

    const unsigned threads =
        cfg.threads > 0 ? cfg.threads : static_cast<unsigned>(dwnn::default_thread_count());
    SeededRng master(*cfg.seed);
    dwnn::Dataset data;
    if (cfg.source == dwnn::experiment::ExperimentConfig::Source::simulation) {
        const auto spec = dwnn::simgen::simulation_spec(cfg.sim_id, cfg.sim_d);
        SeededRng rng = master.substream("tune-data");
        data = dwnn::simgen::sample(spec, cfg.sim_n, rng);
    } else {
        data = dwnn::io::load_csv(cfg.csv_path, cfg.csv_label, cfg.csv_label_positive);
        if (cfg.standardize) {
            const auto st = dwnn::io::Standardizer::fit(data);
            st.apply(data);
        }
    }
    const auto grid = dwnn::tune::default_param_grid(data.n, data.d, cfg.grid_c);
    const auto result = dwnn::tune::cv_tune(data, family, grid, cfg.cv_folds,
                                              master.substream("tune-cli"), threads);

    const fs::path dir = cfg.out_dir;
    fs::create_directories(dir);
    dwnn::io::CsvWriter csv(dir / "tune_grid.csv", {"param", "cv_risk", "cv_se"});
    using W = dwnn::io::CsvWriter;
    for (std::size_t i = 0; i < result.grid.size(); ++i)
        csv.write_row({W::num(result.grid[i]), W::num(result.cv_risk[i]), W::num(result.cv_se[i])});
    write_small_manifest(dir, {{"subcommand", "tune"},
                               {"family", family_name},
                               {"n", data.n},
                               {"d", data.d},
                               {"folds", result.folds},
                               {"selected", result.selected},
                               {"cv_risk", result.cv_risk[result.selected_index]},
                               {"seed", *cfg.seed},
                               {"outputs", {"tune_grid.csv"}}});
    std::cout << "family " << family_name << ": selected parameter " << result.selected
              << " (cv risk " << fmt(result.cv_risk[result.selected_index], 4) << ")\n"
              << "wrote " << (dir / "tune_grid.csv").string() << '\n';
    return 0;
}

int cmd_run(const GlobalOpts& g) {
    dwnn::io::Config raw;
    auto cfg = load_experiment_config(g, "run", raw);
    const auto result = dwnn::experiment::run_experiment(cfg, &raw);
    print_summary(result.rows, std::cout);
    print_speedups(result.rows, std::cout);
    std::cout << "wrote " << result.out_dir.string() << '\n';
    if (!result.all_ok) {
        std::cerr << result.cell_errors.size() << " cell(s) failed\n";
        return 1;
    }
    return 0;
}

int cmd_constants(const GlobalOpts& g, std::size_t d_min, std::size_t d_max) {
    const fs::path dir = g.out_dir("constants");
    fs::create_directories(dir);
    dwnn::experiment::write_constants_csv(dir / "constants.csv", d_min, d_max);
    write_small_manifest(dir, {{"subcommand", "constants"},
                               {"d_min", d_min},
                               {"d_max", d_max},
                               {"outputs", {"constants.csv"}}});
    std::cout << std::right << std::setw(4) << "d" << std::setw(10) << "Q" << std::setw(10)
              << "Q'" << std::setw(10) << "Q''" << std::setw(10) << "Q/Q''" << std::setw(10)
              << "sqrt(Q)" << std::setw(12) << "sqrt(Q/Q'')" << '\n';
    for (const auto& r : dwnn::theory::figure1_table(d_min, d_max))
        std::cout << std::setw(4) << r.d << std::setw(10) << fmt(r.q, 4) << std::setw(10)
                  << fmt(r.q_prime, 4) << std::setw(10) << fmt(r.q_double_prime, 4)
                  << std::setw(10) << fmt(r.q_ratio_bnn, 4) << std::setw(10)
                  << fmt(r.cis_majority, 4) << std::setw(12) << fmt(r.cis_ratio_bnn, 4) << '\n';
    std::cout << "wrote " << (dir / "constants.csv").string() << '\n';
    return 0;
}

int cmd_report(const std::string& dir_str) {
    const fs::path dir(dir_str);
    const auto risk = dwnn::io::read_csv(dir / "risk_vs_gamma.csv");
    const auto col = [](const dwnn::io::CsvTable& t, const std::string& name) {
        for (std::size_t i = 0; i < t.header.size(); ++i)
            if (t.header[i] == name) return i;
        throw std::runtime_error("report: missing column '" + name + "'");
    };
    std::vector<EvalReport> rows;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& r : risk.rows) {
        EvalReport row;
        row.method = r[col(risk, "method")];
        row.gamma = std::stod(r[col(risk, "gamma")]);
        row.s = std::stoul(r[col(risk, "s")]);
        row.n_total = std::stoul(r[col(risk, "n_total")]);
        row.n = std::stoul(r[col(risk, "n_shard")]);
        row.d = std::stoul(r[col(risk, "d")]);
        row.param_oracle = std::stoul(r[col(risk, "param_oracle")]);
        row.param_local = std::stoul(r[col(risk, "param_local")]);
        row.replications = std::stoul(r[col(risk, "replications")]);
        row.risk.mean = std::stod(r[col(risk, "risk")]);
        row.risk.stderr_of_mean = std::stod(r[col(risk, "risk_se")]);
        row.risk.count = row.replications;
        row.bayes_risk = std::stod(r[col(risk, "bayes_risk")]);
        row.regret = std::stod(r[col(risk, "regret")]);
        row.dropped = std::stoul(r[col(risk, "dropped")]);
        index[{row.method, r[col(risk, "gamma")]}] = rows.size();
        rows.push_back(std::move(row));
    }
    if (fs::exists(dir / "time_vs_gamma.csv")) {
        const auto time = dwnn::io::read_csv(dir / "time_vs_gamma.csv");
        for (const auto& r : time.rows) {
            const auto it = index.find({r[col(time, "method")], r[col(time, "gamma")]});
            if (it == index.end()) continue;
            rows[it->second].fit_ms.mean = std::stod(r[col(time, "fit_ms")]);
            rows[it->second].fit_ms.count = rows[it->second].replications;
            rows[it->second].predict_ms.mean = std::stod(r[col(time, "predict_ms")]);
            rows[it->second].predict_ms.count = rows[it->second].replications;
        }
    }
    if (fs::exists(dir / "cis_table.csv")) {
        const auto cis = dwnn::io::read_csv(dir / "cis_table.csv");
        for (const auto& r : cis.rows) {
            const auto it = index.find({r[col(cis, "method")], r[col(cis, "gamma")]});
            if (it == index.end()) continue;
            rows[it->second].cis.mean = std::stod(r[col(cis, "cis")]);
            rows[it->second].cis.stderr_of_mean = std::stod(r[col(cis, "cis_se")]);
            rows[it->second].cis.count = std::stoul(r[col(cis, "pairs")]);
        }
    }
    print_summary(rows, std::cout);
    print_speedups(rows, std::cout);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed weighted nearest neighbor experiment driver"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config, "Path to a key=value experiment config file");
    std::uint64_t seed_value = 0;
    const auto* seed_opt = app.add_option("--seed", seed_value, "Master seed (overrides config)");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware default)");
    app.add_option("--out", g.out, "Output directory (default: timestamped under runs/)");

    auto* sim = app.add_subcommand("simulate", "Sample a Gaussian mixture setting to CSV");
    int sim_id = 1;
    std::size_t sim_d = 4, sim_n = 2700;
    sim->add_option("--simulation", sim_id, "Simulation setting (1, 2, or 3)")
        ->check(CLI::Range(1, 3));
    sim->add_option("--d", sim_d, "Dimension");
    sim->add_option("--n", sim_n, "Number of rows");
    sim->fallthrough();

    auto* tune = app.add_subcommand("tune", "Cross-validate a weight-family parameter");
    std::string family = "uniform-k";
    tune->add_option("--family", family, "uniform-k, ownn, or bnn");
    tune->fallthrough();

    auto* run = app.add_subcommand("run", "Run the full experiment grid from --config");
    run->fallthrough();

    auto* constants = app.add_subcommand("constants", "Emit the asymptotic constants table");
    std::size_t d_min = 1, d_max = 30;
    constants->add_option("--d-min", d_min, "Smallest dimension");
    constants->add_option("--d-max", d_max, "Largest dimension");
    constants->fallthrough();

    auto* report = app.add_subcommand("report", "Pretty-print tables from a run directory");
    std::string report_dir;
    report->add_option("dir", report_dir, "Run directory containing risk_vs_gamma.csv")
        ->required();
    report->fallthrough();

    CLI11_PARSE(app, argc, argv);
    if (seed_opt->count() > 0) g.seed = seed_value;

    try {
        if (sim->parsed()) return cmd_simulate(g, sim_id, sim_d, sim_n);
        if (tune->parsed()) return cmd_tune(g, family);
        if (run->parsed()) return cmd_run(g);
        if (constants->parsed()) return cmd_constants(g, d_min, d_max);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
