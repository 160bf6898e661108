#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tscausal/core.hpp"
#include "tscausal/forecaster.hpp"
#include "tscausal/interventions.hpp"
#include "tscausal/knockoff.hpp"

namespace tscausal {

struct KsResult {
    double d = 0.0;       // supremum empirical-CDF distance
    double scaled = 0.0;  // sqrt(nm/(n+m)) * d
    double p = 1.0;
    long n = 0;
    long m = 0;
};

/// Exact D by merging sorted samples (ties consumed across both sides before
/// the gap is read); asymptotic p-value with the small-sample size correction.
KsResult ks_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct WindowScheme {
    int length = 25;  // admissible 20..30
    int step = 10;    // admissible 5..10
};

/// Number of windows the scheme yields over `count` residuals.
long window_count(const WindowScheme& scheme, long count);

enum class Aggregation {
    vote,  // per-window tests, edge when the rejecting fraction exceeds q
    pool   // one test over the whole residual series
};

struct EdgeTestReport {
    int source = -1;
    int target = -1;
    InterventionKind kind;
    std::vector<KsResult> windows;
    double rejection_fraction = 0.0;
    bool decision = false;
    double alpha = 0.05;
    double q = 0.5;
};

/// Invariance test for the ordered edge source→target: compares residuals of
/// the target with and without the source replaced by the intervention kind.
/// With redraws > 1 the rejection fraction is averaged over fresh intervention
/// draws; the reported window list comes from the first draw.
EdgeTestReport test_edge(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                         long fc_end, int source, int target, const InterventionKind& kind,
                         const KnockoffModel* knockoff_model, const WindowScheme& scheme,
                         double alpha, double q, const RngSeed& seed, int redraws = 1,
                         Aggregation aggregation = Aggregation::vote);

struct DiscoverConfig {
    ForecastConfig forecast;
    WindowScheme scheme;
    InterventionKind kind;
    double alpha = 0.05;
    double q = 0.5;
    double train_fraction = 0.8;
    int knockoff_components = 1;  // >1 fits a Gaussian mixture
    int redraws = 1;
    Aggregation aggregation = Aggregation::vote;
};

struct GraphReport {
    std::string method;
    CausalGraph graph;
    std::vector<std::string> names;
    std::vector<EdgeTestReport> edges;
};

/// Full-graph discovery: one forecaster fit, then test_edge per ordered pair
/// with a per-edge seed stream derived from the master seed.
GraphReport discover_graph(const TimeSeries& series, const DiscoverConfig& config,
                           std::uint64_t master_seed);

/// Same edge sweep against an already fitted forecaster (and knockoff model
/// when the kind needs one); lets callers reuse one fit across kinds.
GraphReport discover_with_model(const ForecastModel& model, const TimeSeries& series,
                                const DiscoverConfig& config, const KnockoffModel* knockoff_model,
                                std::uint64_t master_seed);

std::string report_to_json(const GraphReport& report);

}  // namespace tscausal
