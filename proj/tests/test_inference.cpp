#include "doctest.h"

#include "tscausal/inference.hpp"
#include "tscausal/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace tscausal;
using doctest::Approx;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<long>(values.size()));
    long i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

Eigen::VectorXd two_point(int at_zero, int total) {
    Eigen::VectorXd v(total);
    for (int i = 0; i < total; ++i) v(i) = i < at_zero ? 0.0 : 2.0;
    return v;
}

// Independent evaluation of D: scan the empirical CDF gap at every value that
// appears in either sample.
double brute_force_d(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    std::vector<double> points(a.data(), a.data() + a.size());
    points.insert(points.end(), b.data(), b.data() + b.size());
    double d = 0.0;
    for (double x : points) {
        const double fa =
            static_cast<double>((a.array() <= x).count()) / static_cast<double>(a.size());
        const double fb =
            static_cast<double>((b.array() <= x).count()) / static_cast<double>(b.size());
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

struct FittedSystem {
    ScmDataset data;
    ForecastModel model;
    long fc_begin = 0;
    long fc_end = 0;
};

FittedSystem small_system(unsigned long seed, int epochs = 8, long length = 600) {
    FittedSystem sys;
    sys.data = simulate(sample_spec(3, 3, RngSeed{seed, "spec"}, length), RngSeed{seed, "sim"});
    sys.fc_begin = (length * 4) / 5;
    sys.fc_end = length;
    TimeSeries train;
    train.values = sys.data.series.values.topRows(sys.fc_begin);
    train.names = sys.data.series.names;
    ForecastConfig fc;
    fc.epochs = epochs;
    fc.seed = seed;
    sys.model = fit(train, fc);
    return sys;
}

InterventionKind mean_kind() {
    InterventionKind kind;
    kind.tag = InterventionTag::mean;
    return kind;
}

}  // namespace

TEST_CASE("identical samples give zero distance and unit p") {
    const KsResult ks = ks_two_sample(vec({1, 2, 3}), vec({1, 2, 3}));
    CHECK(ks.d == 0.0);
    CHECK(ks.scaled == 0.0);
    CHECK(ks.p == 1.0);
    CHECK(ks.n == 3);
    CHECK(ks.m == 3);
}

TEST_CASE("disjoint supports give the maximal distance") {
    const KsResult ks = ks_two_sample(vec({0.0, 0.5}), vec({1.0, 1.5}));
    CHECK(ks.d == 1.0);
    CHECK(ks.scaled == Approx(1.0).epsilon(1e-12));
    const double lambda = 1.23;
    const double expected =
        2.0 * (std::exp(-2.0 * lambda * lambda) - std::exp(-8.0 * lambda * lambda) +
               std::exp(-18.0 * lambda * lambda));
    CHECK(ks.p == Approx(expected).epsilon(1e-9));
}

TEST_CASE("the kolmogorov tail matches its partial sums at unit argument") {
    const KsResult ks = ks_two_sample(two_point(7, 27), two_point(0, 28));
    CHECK(ks.d == Approx(7.0 / 27.0).epsilon(1e-12));
    CHECK(ks.scaled == Approx(std::sqrt(27.0 * 28.0 / 55.0) * 7.0 / 27.0).epsilon(1e-12));
    CHECK(std::abs(ks.p - 0.2700) < 0.0005);
}

TEST_CASE("ties are consumed before the gap is read") {
    const KsResult ks = ks_two_sample(vec({1, 1, 2}), vec({1, 2, 2}));
    CHECK(ks.d == Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("the merge statistic matches a brute-force scan on small samples") {
    RngStream rng(401, "brute");
    for (int trial = 0; trial < 500; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform_int(0, 5));
        const int m = 1 + static_cast<int>(rng.uniform_int(0, 5));
        Eigen::VectorXd a(n);
        Eigen::VectorXd b(m);
        const bool discrete = rng.uniform() < 0.5;
        for (int i = 0; i < n; ++i)
            a(i) = discrete ? 0.5 * static_cast<double>(rng.uniform_int(0, 4)) : rng.normal();
        for (int i = 0; i < m; ++i)
            b(i) = discrete ? 0.5 * static_cast<double>(rng.uniform_int(0, 4)) : rng.normal();
        const KsResult ks = ks_two_sample(a, b);
        CHECK(ks.d == Approx(brute_force_d(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("the statistic is symmetric and affine equivariant") {
    RngStream rng(403, "sym");
    Eigen::VectorXd a(40);
    Eigen::VectorXd b(60);
    for (long i = 0; i < 40; ++i) a(i) = rng.normal();
    for (long i = 0; i < 60; ++i) b(i) = 0.5 + rng.normal();

    const KsResult fwd = ks_two_sample(a, b);
    const KsResult rev = ks_two_sample(b, a);
    CHECK(fwd.d == rev.d);
    CHECK(fwd.scaled == rev.scaled);
    CHECK(fwd.p == rev.p);
    CHECK(fwd.n == rev.m);

    const KsResult mapped = ks_two_sample(3.0 * a.array() - 7.0, 3.0 * b.array() - 7.0);
    CHECK(mapped.d == fwd.d);
    CHECK(mapped.p == fwd.p);
}

TEST_CASE("p decreases as the distance grows") {
    const KsResult small = ks_two_sample(two_point(5, 30), two_point(0, 30));
    const KsResult large = ks_two_sample(two_point(10, 30), two_point(0, 30));
    CHECK(small.d < large.d);
    CHECK(small.p > large.p);
}

TEST_CASE("ks_two_sample validates its inputs") {
    CHECK_THROWS_AS(ks_two_sample(Eigen::VectorXd(), vec({1.0})), std::invalid_argument);
    CHECK_THROWS_AS(ks_two_sample(vec({1.0}), Eigen::VectorXd()), std::invalid_argument);
    Eigen::VectorXd bad = vec({1.0, 2.0});
    bad(1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ks_two_sample(vec({1.0, 2.0}), bad), std::invalid_argument);
}

TEST_CASE("the test keeps its size under the null") {
    RngStream rng(405, "null-cal");
    int rejections = 0;
    const int trials = 2000;
    Eigen::VectorXd a(100);
    Eigen::VectorXd b(100);
    for (int trial = 0; trial < trials; ++trial) {
        for (long i = 0; i < 100; ++i) a(i) = rng.normal();
        for (long i = 0; i < 100; ++i) b(i) = rng.normal();
        if (ks_two_sample(a, b).p < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / static_cast<double>(trials);
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.09);
}

TEST_CASE("window_count matches the stride arithmetic") {
    const WindowScheme scheme;
    CHECK(window_count(scheme, 100) == 8);
    CHECK(window_count(scheme, 25) == 1);
    CHECK(window_count(scheme, 24) == 0);
    CHECK(window_count(scheme, 35) == 2);
    CHECK(window_count(WindowScheme{30, 5}, 110) == 17);
}

TEST_CASE("edge tests fill the report invariants") {
    const FittedSystem sys = small_system(407);
    const EdgeTestReport report =
        test_edge(sys.model, sys.data.series, sys.fc_begin, sys.fc_end, 0, 2, mean_kind(), nullptr,
                  WindowScheme{}, 0.05, 0.5, RngSeed{407, "edge"});

    CHECK(report.source == 0);
    CHECK(report.target == 2);
    CHECK(report.kind.tag == InterventionTag::mean);
    CHECK(report.alpha == 0.05);
    CHECK(report.q == 0.5);

    const long resid_len = (sys.fc_end - sys.fc_begin) - sys.model.config.lag_depth;
    REQUIRE(static_cast<long>(report.windows.size()) == window_count(WindowScheme{}, resid_len));
    int rejecting = 0;
    for (const KsResult& ks : report.windows) {
        CHECK(ks.n == 25);
        CHECK(ks.m == 25);
        if (ks.p < report.alpha) ++rejecting;
    }
    CHECK(report.rejection_fraction ==
          Approx(static_cast<double>(rejecting) / static_cast<double>(report.windows.size())));
    CHECK(report.decision == (report.rejection_fraction > report.q));
}

TEST_CASE("pooled aggregation runs one test over the whole residual series") {
    const FittedSystem sys = small_system(409);
    const EdgeTestReport report =
        test_edge(sys.model, sys.data.series, sys.fc_begin, sys.fc_end, 1, 0, mean_kind(), nullptr,
                  WindowScheme{}, 0.05, 0.5, RngSeed{409, "edge"}, 1, Aggregation::pool);
    REQUIRE(report.windows.size() == 1);
    const long resid_len = (sys.fc_end - sys.fc_begin) - sys.model.config.lag_depth;
    CHECK(report.windows[0].n == resid_len);
    CHECK(report.windows[0].m == resid_len);
    const bool rejected = report.windows[0].p < report.alpha;
    CHECK(report.rejection_fraction == (rejected ? 1.0 : 0.0));
    CHECK(report.decision == (report.rejection_fraction > report.q));
}

TEST_CASE("redraws average the per-draw rejection fractions") {
    const FittedSystem sys = small_system(411);
    const RngSeed seed{411, "edge"};
    const EdgeTestReport averaged =
        test_edge(sys.model, sys.data.series, sys.fc_begin, sys.fc_end, 0, 1, mean_kind(), nullptr,
                  WindowScheme{}, 0.05, 0.5, seed, 3);

    double sum = 0.0;
    for (int draw = 0; draw < 3; ++draw) {
        RngSeed draw_seed = seed;
        if (draw > 0) draw_seed.label += "-redraw-" + std::to_string(draw);
        const EdgeTestReport single =
            test_edge(sys.model, sys.data.series, sys.fc_begin, sys.fc_end, 0, 1, mean_kind(),
                      nullptr, WindowScheme{}, 0.05, 0.5, draw_seed, 1);
        sum += single.rejection_fraction;
        if (draw == 0) {
            REQUIRE(single.windows.size() == averaged.windows.size());
            for (std::size_t w = 0; w < single.windows.size(); ++w)
                CHECK(single.windows[w].p == averaged.windows[w].p);
        }
    }
    CHECK(averaged.rejection_fraction == Approx(sum / 3.0).epsilon(1e-12));
}

TEST_CASE("edge tests validate their arguments") {
    const FittedSystem sys = small_system(413);
    const auto run = [&](int src, int tgt, const WindowScheme& scheme, double alpha, double q,
                         int redraws, long fc_begin) {
        return test_edge(sys.model, sys.data.series, fc_begin, sys.fc_end, src, tgt, mean_kind(),
                         nullptr, scheme, alpha, q, RngSeed{413, "edge"}, redraws);
    };
    CHECK_THROWS_AS(run(1, 1, WindowScheme{}, 0.05, 0.5, 1, sys.fc_begin), std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{19, 10}, 0.05, 0.5, 1, sys.fc_begin),
                    std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{31, 10}, 0.05, 0.5, 1, sys.fc_begin),
                    std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{25, 4}, 0.05, 0.5, 1, sys.fc_begin),
                    std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{25, 11}, 0.05, 0.5, 1, sys.fc_begin),
                    std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{}, 0.0, 0.5, 1, sys.fc_begin), std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{}, 1.0, 0.5, 1, sys.fc_begin), std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{}, 0.05, 1.0, 1, sys.fc_begin), std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{}, 0.05, -0.1, 1, sys.fc_begin), std::invalid_argument);
    CHECK_THROWS_AS(run(0, 1, WindowScheme{}, 0.05, 0.5, 0, sys.fc_begin), std::invalid_argument);
    // 50 segment rows leave 40 residuals: only 2 windows.
    CHECK_THROWS_AS(run(0, 1, WindowScheme{}, 0.05, 0.5, 1, sys.fc_end - 50),
                    std::invalid_argument);
}

TEST_CASE("a pooled knockoff test separates a driven edge from its reverse") {
    for (unsigned long seed : {1UL, 8UL}) {
        ScmSpec spec;
        spec.n = 5;
        spec.length = 2000;
        spec.a.assign(5, 0.0);
        spec.noise_var.assign(5, 0.3);
        spec.edges.push_back(ScmEdge{1, 4, 0.8, 2, FunctionTag::linear});
        const ScmDataset ds = simulate(spec, RngSeed{seed, "probe-sim"});

        TimeSeries train;
        train.values = ds.series.values.topRows(1600);
        train.names = ds.series.names;
        ForecastConfig fc;
        fc.epochs = 150;
        fc.seed = seed;
        const ForecastModel model = fit(train, fc);
        const KnockoffModel km = fit_gaussian(ds.series);

        const InterventionKind kind;
        const EdgeTestReport fwd =
            test_edge(model, ds.series, 1600, 2000, 1, 4, kind, &km, WindowScheme{}, 0.05, 0.5,
                      RngSeed{seed, "edge-f"}, 1, Aggregation::pool);
        const EdgeTestReport rev =
            test_edge(model, ds.series, 1600, 2000, 4, 1, kind, &km, WindowScheme{}, 0.05, 0.5,
                      RngSeed{seed, "edge-r"}, 1, Aggregation::pool);
        CHECK(fwd.decision);
        CHECK_FALSE(rev.decision);
    }
}

TEST_CASE("graph discovery assembles the adjacency from edge decisions") {
    const ScmDataset ds =
        simulate(sample_spec(3, 3, RngSeed{415, "spec"}, 600), RngSeed{415, "sim"});
    DiscoverConfig config;
    config.forecast.epochs = 8;
    config.kind = mean_kind();
    const GraphReport report = discover_graph(ds.series, config, 415);

    CHECK(report.method == "mean");
    CHECK(report.names == ds.series.names);
    REQUIRE(report.edges.size() == 6);
    for (const EdgeTestReport& edge : report.edges) {
        CHECK(edge.source != edge.target);
        CHECK(report.graph.at(edge.source, edge.target) == edge.decision);
    }
    for (int i = 0; i < 3; ++i) CHECK_FALSE(report.graph.at(i, i));

    const GraphReport again = discover_graph(ds.series, config, 415);
    CHECK(report_to_json(report) == report_to_json(again));
}

TEST_CASE("a prefitted model reproduces the end-to-end discovery") {
    const ScmDataset ds =
        simulate(sample_spec(3, 2, RngSeed{417, "spec"}, 600), RngSeed{417, "sim"});
    DiscoverConfig config;
    config.forecast.epochs = 8;
    config.kind.tag = InterventionTag::knockoff;
    const GraphReport direct = discover_graph(ds.series, config, 417);

    auto [train, forecast] = split_train_forecast(ds.series, config.train_fraction,
                                                  config.forecast.lag_depth, config.scheme.length);
    ForecastConfig fc = config.forecast;
    fc.seed = 417;
    const ForecastModel model = fit(train, fc);
    const KnockoffModel km = fit_gaussian(ds.series);
    const GraphReport reused = discover_with_model(model, ds.series, config, &km, 417);

    CHECK(report_to_json(direct) == report_to_json(reused));
}

TEST_CASE("discovery reports serialize with their evidence") {
    const ScmDataset ds =
        simulate(sample_spec(3, 3, RngSeed{419, "spec"}, 600), RngSeed{419, "sim"});
    DiscoverConfig config;
    config.forecast.epochs = 8;
    config.kind = mean_kind();
    const GraphReport report = discover_graph(ds.series, config, 419);

    const nlohmann::json doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["method"].get<std::string>() == "mean");
    CHECK(doc["names"].get<std::vector<std::string>>() == ds.series.names);
    REQUIRE(doc["adjacency"].size() == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(doc["adjacency"][i][j].get<int>() == (report.graph.at(i, j) ? 1 : 0));

    REQUIRE(doc["edges"].size() == 6);
    for (std::size_t k = 0; k < 6; ++k) {
        const auto& e = doc["edges"][k];
        const EdgeTestReport& src = report.edges[k];
        CHECK(e["source"].get<int>() == src.source);
        CHECK(e["target"].get<int>() == src.target);
        CHECK(e["source_name"].get<std::string>() ==
              ds.series.names[static_cast<std::size_t>(src.source)]);
        CHECK(e["kind"].get<std::string>() == "mean");
        CHECK(e["alpha"].get<double>() == src.alpha);
        CHECK(e["rejection_fraction"].get<double>() == src.rejection_fraction);
        CHECK(e["decision"].get<bool>() == src.decision);
        REQUIRE(e["windows"].size() == src.windows.size());
        CHECK(e["windows"][0]["p"].get<double>() == src.windows[0].p);
        CHECK(e["windows"][0]["d"].get<double>() == src.windows[0].d);
        CHECK(e["windows"][0]["n"].get<long>() == src.windows[0].n);
    }
}

TEST_CASE("discovery needs at least two variables") {
    TimeSeries single;
    single.names = {"only"};
    single.values = Eigen::MatrixXd::Zero(600, 1);
    DiscoverConfig config;
    CHECK_THROWS_AS(discover_graph(single, config, 1), std::invalid_argument);
}
