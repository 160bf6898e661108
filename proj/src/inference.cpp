#include "tscausal/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace tscausal {

namespace {

double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
        if (term < 1e-12) return std::clamp(sum, 0.0, 1.0);
        sum += sign * term;
        sign = -sign;
    }
    return 1.0;
}

void check_scheme(const WindowScheme& scheme) {
    if (scheme.length < 20 || scheme.length > 30)
        throw std::invalid_argument("window length must lie in [20, 30]");
    if (scheme.step < 5 || scheme.step > 10)
        throw std::invalid_argument("window step must lie in [5, 10]");
}

TimeSeries head_rows(const TimeSeries& series, long rows) {
    TimeSeries out = series;
    out.values = series.values.topRows(rows);
    return out;
}

double windowed_rejection_fraction(const Eigen::VectorXd& base, const Eigen::VectorXd& intervened,
                                   const WindowScheme& scheme, double alpha,
                                   std::vector<KsResult>* collect) {
    const long w_count = window_count(scheme, base.size());
    long rejected = 0;
    for (long w = 0; w < w_count; ++w) {
        const long start = w * scheme.step;
        const KsResult ks =
            ks_two_sample(base.segment(start, scheme.length), intervened.segment(start, scheme.length));
        if (ks.p < alpha) ++rejected;
        if (collect) collect->push_back(ks);
    }
    return static_cast<double>(rejected) / static_cast<double>(w_count);
}

}  // namespace

KsResult ks_two_sample(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const long n = a.size();
    const long m = b.size();
    if (n < 1 || m < 1) throw std::invalid_argument("two-sample test requires nonempty samples");
    if (!a.allFinite() || !b.allFinite())
        throw std::invalid_argument("two-sample test requires finite samples");

    std::vector<double> x(a.data(), a.data() + n);
    std::vector<double> y(b.data(), b.data() + m);
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());

    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        const double gap = std::abs(static_cast<double>(i) / static_cast<double>(n) -
                                    static_cast<double>(j) / static_cast<double>(m));
        d = std::max(d, gap);
    }

    KsResult out;
    out.n = n;
    out.m = m;
    out.d = d;
    const double en = std::sqrt(static_cast<double>(n) * static_cast<double>(m) /
                                static_cast<double>(n + m));
    out.scaled = en * d;
    out.p = kolmogorov_tail((en + 0.12 + 0.11 / en) * d);
    return out;
}

long window_count(const WindowScheme& scheme, long count) {
    if (count < scheme.length) return 0;
    return (count - scheme.length) / scheme.step + 1;
}

EdgeTestReport test_edge(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                         long fc_end, int source, int target, const InterventionKind& kind,
                         const KnockoffModel* knockoff_model, const WindowScheme& scheme,
                         double alpha, double q, const RngSeed& seed, int redraws,
                         Aggregation aggregation) {
    if (source == target) throw std::invalid_argument("cannot test a variable against itself");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (q < 0.0 || q >= 1.0) throw std::invalid_argument("majority threshold must lie in [0, 1)");
    if (redraws < 1) throw std::invalid_argument("redraw count must be at least 1");
    check_scheme(scheme);

    const ResidualSeries base = target_residuals(model, series, fc_begin, fc_end, target);
    if (aggregation == Aggregation::vote && window_count(scheme, base.residuals.size()) < 3)
        throw std::invalid_argument("forecast segment admits fewer than 3 windows");

    EdgeTestReport report;
    report.source = source;
    report.target = target;
    report.kind = kind;
    report.alpha = alpha;
    report.q = q;

    const long fc_len = fc_end - fc_begin;
    const TimeSeries history = head_rows(series, fc_end);
    double fraction_sum = 0.0;
    for (int draw = 0; draw < redraws; ++draw) {
        RngSeed draw_seed = seed;
        if (draw > 0) draw_seed.label += "-redraw-" + std::to_string(draw);
        Substitution sub;
        sub.variable = source;
        sub.kind = to_string(kind.tag);
        sub.replacement = generate(kind, source, history, knockoff_model, draw_seed, fc_len);
        const ResidualSeries intervened =
            target_residuals(model, series, fc_begin, fc_end, target, sub);

        double fraction = 0.0;
        if (aggregation == Aggregation::vote) {
            fraction = windowed_rejection_fraction(base.residuals, intervened.residuals, scheme,
                                                   alpha, draw == 0 ? &report.windows : nullptr);
        } else {
            const KsResult ks = ks_two_sample(base.residuals, intervened.residuals);
            fraction = ks.p < alpha ? 1.0 : 0.0;
            if (draw == 0) report.windows.push_back(ks);
        }
        fraction_sum += fraction;
    }
    report.rejection_fraction = fraction_sum / static_cast<double>(redraws);
    report.decision = report.rejection_fraction > q;
    return report;
}

GraphReport discover_with_model(const ForecastModel& model, const TimeSeries& series,
                                const DiscoverConfig& config, const KnockoffModel* knockoff_model,
                                std::uint64_t master_seed) {
    const int n = static_cast<int>(series.cols());
    const long fc_begin = static_cast<long>(std::floor(static_cast<double>(series.rows()) *
                                                       config.train_fraction));
    const long fc_end = series.rows();

    GraphReport report;
    report.method = to_string(config.kind.tag);
    report.names = series.names;
    report.graph = CausalGraph(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const RngSeed edge_seed{master_seed,
                                    "edge-" + std::to_string(i) + "-" + std::to_string(j)};
            EdgeTestReport edge =
                test_edge(model, series, fc_begin, fc_end, i, j, config.kind, knockoff_model,
                          config.scheme, config.alpha, config.q, edge_seed, config.redraws,
                          config.aggregation);
            report.graph.set(i, j, edge.decision);
            report.edges.push_back(std::move(edge));
        }
    }
    return report;
}

GraphReport discover_graph(const TimeSeries& series, const DiscoverConfig& config,
                           std::uint64_t master_seed) {
    if (series.cols() < 2) throw std::invalid_argument("discovery needs at least two variables");
    auto [train, forecast] = split_train_forecast(series, config.train_fraction,
                                                  config.forecast.lag_depth, config.scheme.length);
    ForecastConfig fc = config.forecast;
    fc.seed = master_seed;
    const ForecastModel model = fit(train, fc);

    KnockoffModel km;
    const KnockoffModel* km_ptr = nullptr;
    if (config.kind.tag == InterventionTag::knockoff) {
        km = config.knockoff_components <= 1
                 ? fit_gaussian(series)
                 : fit_gmm(series, config.knockoff_components, RngSeed{master_seed, "knockoff"});
        km_ptr = &km;
    }
    return discover_with_model(model, series, config, km_ptr, master_seed);
}

std::string report_to_json(const GraphReport& report) {
    nlohmann::json doc;
    doc["method"] = report.method;
    doc["names"] = report.names;
    nlohmann::json adjacency = nlohmann::json::array();
    for (int i = 0; i < report.graph.n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < report.graph.n; ++j) row.push_back(report.graph.at(i, j) ? 1 : 0);
        adjacency.push_back(std::move(row));
    }
    doc["adjacency"] = std::move(adjacency);
    nlohmann::json edges = nlohmann::json::array();
    for (const EdgeTestReport& edge : report.edges) {
        nlohmann::json e;
        e["source"] = edge.source;
        e["target"] = edge.target;
        e["source_name"] = report.names[static_cast<std::size_t>(edge.source)];
        e["target_name"] = report.names[static_cast<std::size_t>(edge.target)];
        e["kind"] = to_string(edge.kind.tag);
        e["alpha"] = edge.alpha;
        e["q"] = edge.q;
        e["rejection_fraction"] = edge.rejection_fraction;
        e["decision"] = edge.decision;
        nlohmann::json windows = nlohmann::json::array();
        for (const KsResult& ks : edge.windows) {
            windows.push_back({{"d", ks.d},
                               {"scaled", ks.scaled},
                               {"p", ks.p},
                               {"n", ks.n},
                               {"m", ks.m}});
        }
        e["windows"] = std::move(windows);
        edges.push_back(std::move(e));
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2);
}

}  // namespace tscausal
