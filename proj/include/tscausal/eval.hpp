#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tscausal/core.hpp"
#include "tscausal/inference.hpp"
#include "tscausal/synthgen.hpp"

namespace tscausal {

struct GraphMetrics {
    int tp = 0, fp = 0, tn = 0, fn = 0;
    double fpr = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

/// Counts over the ordered off-diagonal pairs; zero-denominator rates are 0.
GraphMetrics score(const CausalGraph& predicted, const CausalGraph& truth);

struct BenchConfig {
    int nodes = 5;
    int edges = 5;
    long length = 2000;
    std::vector<std::string> methods{"knockoff", "mean", "uniform", "ood", "var-gc"};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    DiscoverConfig discover;
    ScmRanges ranges;
    int var_order = 10;
    double var_alpha = 0.05;
};

/// The stock sweep: linear couplings fixed at 0.8 and noise variance at 0.3.
BenchConfig default_bench_config();

/// "key = value" lines, '#' comments; unknown keys are rejected.
BenchConfig parse_bench_config(const std::string& path);

struct SeedPrep {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double seconds = 0.0;  // simulation plus shared model fits
};

struct BenchCell {
    std::uint64_t seed = 0;
    std::string method;
    bool ok = false;
    std::string error;
    GraphMetrics metrics;
    double seconds = 0.0;
};

struct MethodSummary {
    std::string method;
    int ok_count = 0;
    double fpr_mean = 0.0, fpr_sd = 0.0;
    double f_mean = 0.0, f_sd = 0.0;
    double seconds_total = 0.0;
};

struct BenchmarkReport {
    BenchConfig config;
    std::vector<SeedPrep> preps;
    std::vector<BenchCell> cells;
    std::vector<MethodSummary> methods;
};

/// Per seed: draw a system, simulate, fit the forecaster (and knockoff model
/// when needed) once, then run every method on the identical data. Failures
/// are recorded per cell and do not abort the sweep.
BenchmarkReport run_benchmark(const BenchConfig& config);

std::string benchmark_to_json(const BenchmarkReport& report, bool include_timing = true);

}  // namespace tscausal
