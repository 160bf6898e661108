// Acceptance harness: each numbered check exercises one end-to-end guarantee
// of the library and prints a single verdict line. Run with the check number
// as the only argument, or with no arguments to run every check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "tscausal/baseline.hpp"
#include "tscausal/eval.hpp"
#include "tscausal/inference.hpp"
#include "tscausal/knockoff.hpp"
#include "tscausal/synthgen.hpp"

namespace {

using namespace tscausal;

enum class Verdict { pass, fail, skip };

struct Outcome {
    Verdict verdict = Verdict::fail;
    std::string note;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

TimeSeries equicorrelated_series(long r, int n, double rho, std::uint64_t master) {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(n, n, rho);
    sigma.diagonal().setOnes();
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(sigma).matrixL();
    RngStream rng(master, "equicorrelated");
    TimeSeries ts;
    ts.values.resize(r, n);
    Eigen::VectorXd z(n);
    for (long t = 0; t < r; ++t) {
        for (int j = 0; j < n; ++j) z(j) = rng.normal();
        ts.values.row(t) = (chol * z).transpose();
    }
    for (int j = 0; j < n; ++j) ts.names.push_back("z" + std::to_string(j));
    return ts;
}

TimeSeries white_pair(long r, std::uint64_t master) {
    RngStream rng(master, "white-pair");
    TimeSeries ts;
    ts.values.resize(r, 2);
    for (long t = 0; t < r; ++t)
        for (int j = 0; j < 2; ++j) ts.values(t, j) = rng.normal();
    ts.names = {"z0", "z1"};
    return ts;
}

Eigen::MatrixXd empirical_cov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const Eigen::RowVectorXd mean_a = a.colwise().mean();
    const Eigen::RowVectorXd mean_b = b.colwise().mean();
    return (a.rowwise() - mean_a).transpose() * (b.rowwise() - mean_b) /
           static_cast<double>(a.rows() - 1);
}

// 1. Sampled knockoff copies must reproduce the covariance of the originals
// and decorrelate from them by exactly the diagonal shift the model promises.
Outcome check_knockoff_moments() {
    constexpr double kTolerance = 0.05;
    constexpr long kRows = 50000;
    constexpr double kRho = 0.6;

    const TimeSeries series = equicorrelated_series(kRows, 5, kRho, 11001);
    const KnockoffModel model = fit_gaussian(series);
    const TimeSeries knockoffs = sample_knockoffs(model, series, RngSeed{11001, "acc-knockoff"});

    Eigen::MatrixXd sigma_true = Eigen::MatrixXd::Constant(5, 5, kRho);
    sigma_true.diagonal().setOnes();
    Eigen::MatrixXd cross_target = sigma_true;
    cross_target.diagonal() -= model.s;

    const Eigen::MatrixXd cov_kk = empirical_cov(knockoffs.values, knockoffs.values);
    const Eigen::MatrixXd cov_zk = empirical_cov(series.values, knockoffs.values);
    const double dev_cov = (cov_kk - sigma_true).cwiseAbs().maxCoeff();
    const double dev_cross = (cov_zk - cross_target).cwiseAbs().maxCoeff();
    std::printf("  max |Cov(copy) - target|        = %.4f (tolerance %.2f)\n", dev_cov, kTolerance);
    std::printf("  max |Cov(orig, copy) - target|  = %.4f (tolerance %.2f)\n", dev_cross,
                kTolerance);

    const ExchangeabilityReport report = diagnose_exchangeability(series, knockoffs, model);
    std::printf("  model-relative deviations: cov %.4f, cross %.4f\n", report.max_cov_deviation,
                report.max_cross_deviation);

    const bool ok = dev_cov < kTolerance && dev_cross < kTolerance &&
                    report.max_cov_deviation < kTolerance &&
                    report.max_cross_deviation < kTolerance;
    return {ok ? Verdict::pass : Verdict::fail, ""};
}

// 2. On a 2x2 correlation input the decorrelation scale has a closed form.
Outcome check_equicorrelated_scale() {
    constexpr double kSlack = 1.0 - 1e-6;
    constexpr double kTolerance = 1e-12;
    bool ok = true;
    for (double rho : {0.3, 0.5, 0.8}) {
        Eigen::MatrixXd sigma(2, 2);
        sigma << 1.0, rho, rho, 1.0;
        const Eigen::VectorXd s = compute_equicorrelated_s(sigma);
        const double expected = std::min(1.0, 2.0 * (1.0 - rho)) * kSlack;
        const double err = std::max(std::abs(s(0) - expected), std::abs(s(1) - expected));
        std::printf("  rho %.1f: s = %.9f, expected %.9f, |err| = %.2e\n", rho, s(0), expected, err);
        ok = ok && err <= kTolerance;
    }
    return {ok ? Verdict::pass : Verdict::fail, ""};
}

double brute_force_d(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::vector<double> points(a.data(), a.data() + a.size());
    points.insert(points.end(), b.data(), b.data() + b.size());
    double best = 0.0;
    for (double x : points) {
        const double fa = static_cast<double>((a.array() <= x).count()) /
                          static_cast<double>(a.size());
        const double fb = static_cast<double>((b.array() <= x).count()) /
                          static_cast<double>(b.size());
        best = std::max(best, std::abs(fa - fb));
    }
    return best;
}

// 3. The two-sample distribution test: brute-force agreement on small inputs,
// a pinned tail value at scaled statistic 1, and null calibration.
Outcome check_two_sample_test() {
    constexpr double kOracleTolerance = 1e-12;
    constexpr double kTailTarget = 0.2700;
    constexpr double kTailTolerance = 0.0005;
    constexpr double kRateLo = 0.02, kRateHi = 0.09;

    RngStream rng(33003, "ks-oracle");
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const long n = rng.uniform_int(1, 6);
        const long m = rng.uniform_int(1, 6);
        Eigen::VectorXd a(n), b(m);
        const bool discrete = trial % 2 == 0;
        for (long i = 0; i < n; ++i)
            a(i) = discrete ? 0.5 * static_cast<double>(rng.uniform_int(0, 4)) : rng.normal();
        for (long i = 0; i < m; ++i)
            b(i) = discrete ? 0.5 * static_cast<double>(rng.uniform_int(0, 4)) : rng.normal();
        worst = std::max(worst, std::abs(ks_two_sample(a, b).d - brute_force_d(a, b)));
    }
    std::printf("  max |D - brute force| over 500 small instances = %.2e\n", worst);

    // Two-point samples tuned so the size-corrected statistic lands on 1.
    Eigen::VectorXd a27(27), b28(28);
    for (long i = 0; i < 27; ++i) a27(i) = i < 7 ? 0.0 : 2.0;
    b28.setConstant(2.0);
    const KsResult at_one = ks_two_sample(a27, b28);
    const double en = std::sqrt(27.0 * 28.0 / 55.0);
    const double corrected = (en + 0.12 + 0.11 / en) * at_one.d;
    std::printf("  corrected statistic %.7f -> p = %.6f (target %.4f +- %.4f)\n", corrected,
                at_one.p, kTailTarget, kTailTolerance);

    long rejected = 0;
    const int trials = 2000;
    for (int trial = 0; trial < trials; ++trial) {
        RngStream draw(44000 + static_cast<std::uint64_t>(trial), "ks-null");
        Eigen::VectorXd a(100), b(100);
        for (long i = 0; i < 100; ++i) a(i) = draw.normal();
        for (long i = 0; i < 100; ++i) b(i) = draw.normal();
        if (ks_two_sample(a, b).p < 0.05) ++rejected;
    }
    const double rate = static_cast<double>(rejected) / trials;
    std::printf("  null rejection rate = %.4f (band [%.2f, %.2f])\n", rate, kRateLo, kRateHi);

    const bool ok = worst <= kOracleTolerance && std::abs(at_one.p - kTailTarget) <= kTailTolerance &&
                    rate > kRateLo && rate < kRateHi;
    return {ok ? Verdict::pass : Verdict::fail, ""};
}

// 4. Backpropagated gradients against central finite differences.
Outcome check_gradients() {
    constexpr double kTolerance = 1e-4;
    RngStream rng(55005, "gradient-instances");
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n_vars = static_cast<int>(rng.uniform_int(1, 4));
        const int lag = static_cast<int>(rng.uniform_int(1, 5));
        const int hidden = static_cast<int>(rng.uniform_int(1, 8));
        const int samples = static_cast<int>(rng.uniform_int(4, 16));
        worst = std::max(worst, gradient_check(n_vars, lag, hidden, samples,
                                               static_cast<std::uint64_t>(trial)));
    }
    std::printf("  max relative gradient error over 50 instances = %.2e (tolerance %.0e)\n", worst,
                kTolerance);
    return {worst < kTolerance ? Verdict::pass : Verdict::fail, ""};
}

std::vector<std::uint64_t> admitted_seeds(const BenchConfig& config, int count) {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t seed = 1; static_cast<int>(seeds.size()) < count && seed < 10000; ++seed) {
        try {
            const ScmDataset data =
                simulate(sample_spec(config.nodes, config.edges, RngSeed{seed, "synth"},
                                     config.length, config.ranges),
                         RngSeed{seed, "synth"});
            if (admissible_draw(data.series.values)) seeds.push_back(seed);
        } catch (const std::exception&) {
        }
    }
    return seeds;
}

// 5. End-to-end recovery on 5-node, 5-edge linear systems: the knockoff kind
// should combine a usable F-score with the lowest false positive rate.
Outcome check_synthetic_recovery() {
    constexpr double kMinF = 0.75;
    constexpr double kMaxFpr = 0.2;
    constexpr double kTieTolerance = 1e-12;

    BenchConfig config = default_bench_config();
    config.methods = {"knockoff", "mean", "uniform", "ood"};
    config.seeds = admitted_seeds(config, 10);
    std::printf("  admitted seeds:");
    for (std::uint64_t seed : config.seeds) std::printf(" %llu", (unsigned long long)seed);
    std::printf("\n");

    const BenchmarkReport report = run_benchmark(config);
    double knockoff_f = 0.0, knockoff_fpr = 1.0, other_min_fpr = 1.0;
    int knockoff_ok = 0;
    for (const MethodSummary& m : report.methods) {
        std::printf("  %-9s ok %2d/10, FPR mean %.4f, F mean %.4f\n", m.method.c_str(), m.ok_count,
                    m.fpr_mean, m.f_mean);
        if (m.method == "knockoff") {
            knockoff_f = m.f_mean;
            knockoff_fpr = m.fpr_mean;
            knockoff_ok = m.ok_count;
        } else {
            other_min_fpr = std::min(other_min_fpr, m.fpr_mean);
        }
    }

    const bool f_ok = knockoff_f >= kMinF;
    const bool fpr_ok = knockoff_fpr <= kMaxFpr;
    const bool min_ok = knockoff_fpr <= other_min_fpr + kTieTolerance;
    std::printf("  knockoff F >= %.2f: %s; knockoff FPR <= %.2f: %s; lowest FPR: %s\n", kMinF,
                f_ok ? "yes" : "no", kMaxFpr, fpr_ok ? "yes" : "no", min_ok ? "yes" : "no");
    const bool ok = knockoff_ok == 10 && f_ok && fpr_ok && min_ok;
    return {ok ? Verdict::pass : Verdict::fail, ""};
}

// 6. Systems with no cross-edges should come back empty almost always.
Outcome check_null_soundness() {
    constexpr int kNeeded = 8;
    BenchConfig config = default_bench_config();
    config.edges = 0;
    config.methods = {"knockoff"};
    config.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

    const BenchmarkReport report = run_benchmark(config);
    int empty = 0;
    for (const BenchCell& cell : report.cells) {
        if (!cell.ok) {
            std::printf("  seed %llu failed: %s\n", (unsigned long long)cell.seed,
                        cell.error.c_str());
            continue;
        }
        if (cell.metrics.fp == 0) ++empty;
        else
            std::printf("  seed %llu discovered %d spurious edge(s)\n",
                        (unsigned long long)cell.seed, cell.metrics.fp);
    }
    std::printf("  empty graphs: %d/10 (need >= %d)\n", empty, kNeeded);
    return {empty >= kNeeded ? Verdict::pass : Verdict::fail, ""};
}

// 7. The linear baseline must find a strong linear link and stay calibrated
// on independent noise.
Outcome check_baseline_sanity() {
    constexpr double kDetectP = 0.001;
    constexpr double kRateLo = 0.02, kRateHi = 0.09;

    bool detected = true;
    for (std::uint64_t master : {61001ULL, 61002ULL, 61003ULL}) {
        RngStream rng(master, "driven-pair");
        TimeSeries ts;
        ts.values.resize(2000, 2);
        double prev = 0.0;
        for (long t = 0; t < 2000; ++t) {
            const double z0 = rng.normal();
            ts.values(t, 0) = z0;
            ts.values(t, 1) = 0.8 * prev + rng.normal();
            prev = z0;
        }
        ts.names = {"z0", "z1"};
        const GrangerReport report = granger_graph(ts, 1, 0.05);
        std::printf("  seed %llu: p(z0 -> z1) = %.3g\n", (unsigned long long)master,
                    report.p_value(0, 1));
        detected = detected && report.p_value(0, 1) < kDetectP && report.graph.at(0, 1);
    }

    long rejected = 0, total = 0;
    for (std::uint64_t trial = 0; trial < 2000; ++trial) {
        const GrangerReport report = granger_graph(white_pair(200, 70000 + trial), 1, 0.05);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                if (i == j) continue;
                ++total;
                if (report.p_value(i, j) < 0.05) ++rejected;
            }
    }
    const double rate = static_cast<double>(rejected) / static_cast<double>(total);
    std::printf("  null false-edge rate = %.4f (band [%.2f, %.2f])\n", rate, kRateLo, kRateHi);

    const bool ok = detected && rate > kRateLo && rate < kRateHi;
    return {ok ? Verdict::pass : Verdict::fail, ""};
}

// 8. Optional real-data check on daily river discharges. Expects a CSV with
// the gauge columns ordered Kempten, Dillingen, Lenggries; the physical link
// is first -> second and every other ordered pair should be rejected.
Outcome check_river_case() {
    std::string path = "data/river.csv";
    if (const char* env = std::getenv("RIVER_CSV")) path = env;
    if (!std::filesystem::exists(path))
        return {Verdict::skip, "river discharge CSV not provided (set RIVER_CSV or place "
                               "data/river.csv); nothing to check"};

    const TimeSeries series = load_csv(path);
    if (series.cols() != 3) {
        std::printf("  expected 3 gauge columns, found %ld\n", series.cols());
        return {Verdict::fail, ""};
    }
    DiscoverConfig config;
    const GraphReport report = discover_graph(series, config, 1);
    bool ok = true;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const bool expected = i == 0 && j == 1;
            const bool got = report.graph.at(i, j);
            std::printf("  %s -> %s: %s (expected %s)\n",
                        report.names[static_cast<std::size_t>(i)].c_str(),
                        report.names[static_cast<std::size_t>(j)].c_str(),
                        got ? "detected" : "rejected", expected ? "detected" : "rejected");
            ok = ok && got == expected;
        }
    }
    return {ok ? Verdict::pass : Verdict::fail, ""};
}

// 9. The same sweep run twice must serialize identically once wall-clock
// fields are stripped.
Outcome check_determinism() {
    BenchConfig config = default_bench_config();
    config.nodes = 3;
    config.edges = 2;
    config.length = 600;
    config.seeds = {1, 2};
    config.methods = {"knockoff", "var-gc"};
    config.discover.forecast.epochs = 8;
    config.var_order = 3;

    const std::string first = benchmark_to_json(run_benchmark(config), false);
    const std::string second = benchmark_to_json(run_benchmark(config), false);
    std::printf("  report bodies: %zu bytes, identical: %s\n", first.size(),
                first == second ? "yes" : "no");
    return {first == second && !first.empty() ? Verdict::pass : Verdict::fail, ""};
}

struct Check {
    int number;
    const char* label;
    Outcome (*run)();
};

const Check kChecks[] = {
    {1, "knockoff moment agreement", check_knockoff_moments},
    {2, "equicorrelated scale closed form", check_equicorrelated_scale},
    {3, "two-sample test correctness", check_two_sample_test},
    {4, "forecaster gradients", check_gradients},
    {5, "synthetic recovery", check_synthetic_recovery},
    {6, "null soundness", check_null_soundness},
    {7, "linear baseline sanity", check_baseline_sanity},
    {8, "river discharge case", check_river_case},
    {9, "benchmark determinism", check_determinism},
};

int run_check(const Check& check) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
        outcome = check.run();
    } catch (const std::exception& e) {
        std::printf("  unexpected error: %s\n", e.what());
        outcome = {Verdict::fail, ""};
    }
    const double elapsed = seconds_since(start);
    const char* word = outcome.verdict == Verdict::pass ? "PASS"
                       : outcome.verdict == Verdict::fail ? "FAIL"
                                                          : "SKIP";
    std::printf("acceptance %d (%s): %s%s%s [%.1f s]\n", check.number, check.label, word,
                outcome.note.empty() ? "" : " - ", outcome.note.c_str(), elapsed);
    std::fflush(stdout);
    return outcome.verdict == Verdict::fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc > 2) {
        std::fprintf(stderr, "usage: %s [1-9]\n", argv[0]);
        return 2;
    }
    if (argc == 2) {
        const int wanted = std::atoi(argv[1]);
        for (const Check& check : kChecks)
            if (check.number == wanted) return run_check(check);
        std::fprintf(stderr, "usage: %s [1-9]\n", argv[0]);
        return 2;
    }
    int failures = 0;
    for (const Check& check : kChecks) failures += run_check(check);
    return failures == 0 ? 0 : 1;
}
