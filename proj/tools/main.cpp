#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "tscausal/baseline.hpp"
#include "tscausal/eval.hpp"
#include "tscausal/inference.hpp"
#include "tscausal/interventions.hpp"
#include "tscausal/knockoff.hpp"
#include "tscausal/synthgen.hpp"

namespace {

using namespace tscausal;

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << body << '\n';
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void print_adjacency(const CausalGraph& graph, const std::vector<std::string>& names) {
    for (int i = 0; i < graph.n; ++i) {
        for (int j = 0; j < graph.n; ++j) {
            if (!graph.at(i, j)) continue;
            std::cout << "  " << names[static_cast<std::size_t>(i)] << " -> "
                      << names[static_cast<std::size_t>(j)] << '\n';
        }
    }
    if (graph.edge_count() == 0) std::cout << "  (no edges)\n";
}

int run_synth(int nodes, int edges, long length, std::uint64_t seed, const std::string& out_dir) {
    const ScmSpec spec = sample_spec(nodes, edges, RngSeed{seed, "synth"}, length);
    const ScmDataset data = simulate(spec, RngSeed{seed, "synth"});
    save_dataset(data, out_dir);
    std::cout << "wrote " << data.series.rows() << " rows x " << data.series.cols()
              << " variables to " << out_dir << " (" << data.truth.edge_count() << " true edges)\n";
    return 0;
}

int run_knockoff(const std::string& in_csv, const std::string& out_csv, int gmm,
                 std::uint64_t seed) {
    const TimeSeries series = load_csv(in_csv);
    const RngSeed rng_seed{seed, "knockoff"};
    const KnockoffModel model =
        gmm <= 1 ? fit_gaussian(series) : fit_gmm(series, gmm, rng_seed);
    const TimeSeries knockoffs = model.components.empty()
                                     ? sample_knockoffs(model, series, rng_seed)
                                     : sample_gmm_knockoffs(model, series, rng_seed);
    save_csv(knockoffs, out_csv);

    const ExchangeabilityReport report = diagnose_exchangeability(series, knockoffs, model);
    std::cout << "wrote " << knockoffs.rows() << " knockoff rows to " << out_csv << "\n\n";
    std::cout << "variable        self-cov      target\n";
    for (long i = 0; i < series.cols(); ++i) {
        std::cout << std::left << std::setw(12) << series.names[static_cast<std::size_t>(i)]
                  << std::right << std::setw(12) << std::setprecision(4) << std::fixed
                  << report.self_covariance(i) << std::setw(12)
                  << report.self_covariance_target(i) << '\n';
    }
    std::cout << std::defaultfloat << "max covariance deviation:       "
              << report.max_cov_deviation << '\n'
              << "max cross-covariance deviation: " << report.max_cross_deviation << '\n';
    return 0;
}

int run_discover(const std::string& in_csv, const DiscoverConfig& config, std::uint64_t seed,
                 const std::string& out_json) {
    const TimeSeries series = load_csv(in_csv);
    const GraphReport report = discover_graph(series, config, seed);
    write_text(out_json, report_to_json(report));
    std::cout << "discovered graph (" << report.method << " interventions):\n";
    print_adjacency(report.graph, report.names);
    std::cout << "report written to " << out_json << '\n';
    return 0;
}

int run_baseline(const std::string& in_csv, int order, double alpha, const std::string& out_json) {
    const TimeSeries series = load_csv(in_csv);
    const GrangerReport report = granger_graph(series, order, alpha);
    write_text(out_json, granger_to_json(report));
    std::cout << "granger graph (order " << order << ", alpha " << alpha << "):\n";
    print_adjacency(report.graph, report.names);
    std::cout << "report written to " << out_json << '\n';
    return 0;
}

int run_bench(const std::string& config_path, const std::string& out_json, bool no_timing) {
    const BenchConfig config =
        config_path.empty() ? default_bench_config() : parse_bench_config(config_path);
    const BenchmarkReport report = run_benchmark(config);
    write_text(out_json, benchmark_to_json(report, !no_timing));
    std::cout << "method      ok    FPR mean    F mean\n";
    for (const MethodSummary& m : report.methods) {
        std::cout << std::left << std::setw(10) << m.method << std::right << std::setw(4)
                  << m.ok_count << std::setw(12) << std::setprecision(4) << std::fixed
                  << m.fpr_mean << std::setw(10) << m.f_mean << '\n';
    }
    std::cout << std::defaultfloat << "report written to " << out_json << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal discovery for multivariate time series via forecast-residual "
                 "invariance under knockoff and related interventions"};
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset directory");
    int nodes = 5, edges = 5;
    long length = 2000;
    std::uint64_t seed = 1;
    std::string out_dir;
    synth->add_option("--nodes", nodes, "Number of variables")->capture_default_str();
    synth->add_option("--edges", edges, "Number of cross-edges")->capture_default_str();
    synth->add_option("--length", length, "Rows to keep after burn-in")->capture_default_str();
    synth->add_option("--seed", seed, "Master seed")->capture_default_str();
    synth->add_option("--out", out_dir, "Output directory")->required();

    auto* knockoff = app.add_subcommand("knockoff", "Sample a knockoff copy of a CSV");
    std::string in_csv, out_csv;
    int gmm = 1;
    knockoff->add_option("--in", in_csv, "Input CSV")->required();
    knockoff->add_option("--out", out_csv, "Output CSV for the knockoff copy")->required();
    knockoff->add_option("--gmm", gmm, "Mixture components (1 = single Gaussian)")
        ->capture_default_str();
    knockoff->add_option("--seed", seed, "Master seed")->capture_default_str();

    auto* discover = app.add_subcommand("discover", "Discover the causal graph of a CSV");
    DiscoverConfig dconfig;
    std::string kind = "knockoff";
    std::string out_json = "report.json";
    bool pool = false;
    discover->add_option("--in", in_csv, "Input CSV")->required();
    discover->add_option("--kind", kind, "Intervention kind: knockoff|mean|uniform|ood")
        ->capture_default_str();
    discover->add_option("--alpha", dconfig.alpha, "Per-window significance level")
        ->capture_default_str();
    discover->add_option("--q", dconfig.q, "Rejection-fraction threshold for an edge")
        ->capture_default_str();
    discover->add_option("--window", dconfig.scheme.length, "Window length (20..30)")
        ->capture_default_str();
    discover->add_option("--step", dconfig.scheme.step, "Window step (5..10)")
        ->capture_default_str();
    discover->add_option("--train-fraction", dconfig.train_fraction, "Training split fraction")
        ->capture_default_str();
    discover->add_option("--lag", dconfig.forecast.lag_depth, "Forecaster lag depth")
        ->capture_default_str();
    discover->add_option("--hidden", dconfig.forecast.hidden, "Forecaster hidden width")
        ->capture_default_str();
    discover->add_option("--epochs", dconfig.forecast.epochs, "Training epochs")
        ->capture_default_str();
    discover->add_option("--batch", dconfig.forecast.batch, "Training batch size")
        ->capture_default_str();
    discover->add_option("--learning-rate", dconfig.forecast.learning_rate, "Training step size")
        ->capture_default_str();
    discover->add_option("--gmm", dconfig.knockoff_components,
                         "Knockoff mixture components (1 = single Gaussian)")
        ->capture_default_str();
    discover->add_option("--redraws", dconfig.redraws, "Intervention draws per edge")
        ->capture_default_str();
    discover->add_flag("--pool", pool, "Pool residuals into one test instead of window voting");
    discover->add_option("--seed", seed, "Master seed")->capture_default_str();
    discover->add_option("--out", out_json, "Report JSON path")->capture_default_str();

    auto* baseline = app.add_subcommand("baseline", "Linear Granger-causality graph of a CSV");
    int order = 10;
    double alpha = 0.05;
    baseline->add_option("--in", in_csv, "Input CSV")->required();
    baseline->add_option("--order", order, "Autoregression order")->capture_default_str();
    baseline->add_option("--alpha", alpha, "Significance level")->capture_default_str();
    baseline->add_option("--out", out_json, "Report JSON path")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Multi-seed benchmark over synthetic systems");
    std::string config_path;
    bool no_timing = false;
    bench->add_option("--config", config_path, "key = value config file (defaults when omitted)");
    bench->add_option("--out", out_json, "Report JSON path")->capture_default_str();
    bench->add_flag("--no-timing", no_timing, "Omit wall-clock fields from the report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return run_synth(nodes, edges, length, seed, out_dir);
        if (knockoff->parsed()) return run_knockoff(in_csv, out_csv, gmm, seed);
        if (discover->parsed()) {
            dconfig.kind.tag = intervention_from_string(kind);
            dconfig.aggregation = pool ? Aggregation::pool : Aggregation::vote;
            return run_discover(in_csv, dconfig, seed, out_json);
        }
        if (baseline->parsed()) return run_baseline(in_csv, order, alpha, out_json);
        if (bench->parsed()) return run_bench(config_path, out_json, no_timing);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
