#include "tscausal/synthgen.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tscausal {

std::string to_string(FunctionTag tag) {
    return tag == FunctionTag::linear ? "linear" : "exponential";
}

FunctionTag function_tag_from_string(const std::string& s) {
    if (s == "linear") return FunctionTag::linear;
    if (s == "exponential") return FunctionTag::exponential;
    throw std::invalid_argument("unknown function tag: " + s);
}

ScmSpec sample_spec(int n, int edge_count, const RngSeed& seed, long length,
                    const ScmRanges& ranges) {
    if (n < 2) throw std::invalid_argument("need at least 2 nodes");
    if (edge_count > n * (n - 1))
        throw std::invalid_argument("edge count exceeds ordered off-diagonal pairs");

    RngStream rng(seed.master, seed.label);

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(static_cast<std::size_t>(n) * (n - 1));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) pairs.emplace_back(i, j);

    ScmSpec spec;
    spec.n = n;
    spec.length = length;

    const std::vector<int> chosen = rng.sample_without_replacement(static_cast<int>(pairs.size()), edge_count);
    for (int idx : chosen) {
        ScmEdge e;
        e.src = pairs[static_cast<std::size_t>(idx)].first;
        e.tgt = pairs[static_cast<std::size_t>(idx)].second;
        e.coupling = rng.uniform(ranges.coupling_lo, ranges.coupling_hi);
        e.lag = static_cast<int>(rng.uniform_int(ranges.lag_lo, ranges.lag_hi));
        e.fn = rng.uniform() < ranges.linear_prob ? FunctionTag::linear : FunctionTag::exponential;
        spec.edges.push_back(e);
    }
    spec.a.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) spec.a[static_cast<std::size_t>(j)] = rng.uniform(ranges.a_lo, ranges.a_hi);
    spec.noise_var.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j)
        spec.noise_var[static_cast<std::size_t>(j)] = rng.uniform(ranges.noise_lo, ranges.noise_hi);
    return spec;
}

ScmDataset simulate(const ScmSpec& spec, const RngSeed& seed) {
    if (spec.length < 100) throw std::invalid_argument("series length must be at least 100");
    int max_lag = 1;
    for (const auto& e : spec.edges) max_lag = std::max(max_lag, e.lag);
    if (spec.burn_in < max_lag) throw std::invalid_argument("burn-in shorter than maximum lag");
    for (const auto& e : spec.edges)
        if (e.src == e.tgt) throw std::invalid_argument("self-edge in spec");

    RngStream rng(seed.master, seed.label);
    const int n = spec.n;
    const long total = spec.length + spec.burn_in;

    // Edges grouped by target for the per-step update.
    std::vector<std::vector<ScmEdge>> incoming(static_cast<std::size_t>(n));
    for (const auto& e : spec.edges) incoming[static_cast<std::size_t>(e.tgt)].push_back(e);

    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(total, n);
    std::vector<double> noise_sd(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) noise_sd[static_cast<std::size_t>(j)] = std::sqrt(spec.noise_var[static_cast<std::size_t>(j)]);

    for (long t = 1; t < total; ++t) {
        // Nodes update in index order; a lag-0 edge reads the source's
        // current-step value when the source was already updated this step.
        for (int j = 0; j < n; ++j) {
            double v = spec.a[static_cast<std::size_t>(j)] * z(t - 1, j);
            for (const auto& e : incoming[static_cast<std::size_t>(j)]) {
                long ts = t - e.lag;
                if (e.lag == 0 && e.src >= j) ts = t - 1;
                if (ts < 0) ts = 0;
                const double src = z(ts, e.src);
                v += e.coupling * (e.fn == FunctionTag::linear ? src : std::exp(-src * src));
            }
            v += noise_sd[static_cast<std::size_t>(j)] * rng.normal();
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite value at node " + std::to_string(j) +
                                         ", time " + std::to_string(t) + ": explosive spec");
            z(t, j) = v;
        }
    }

    ScmDataset out;
    out.series.values = z.bottomRows(spec.length);
    out.series.names.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) out.series.names.push_back("z" + std::to_string(j));
    out.series.sampling = "synthetic";
    out.truth = CausalGraph(n);
    for (const auto& e : spec.edges) out.truth.set(e.src, e.tgt, true);
    out.spec = spec;
    return out;
}

bool halves_stationary(const Eigen::MatrixXd& values) {
    if (!values.allFinite()) return false;
    const long r = values.rows();
    const long h = r / 2;
    if (h < 2) return false;
    for (long c = 0; c < values.cols(); ++c) {
        const double scale = values.col(c).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        const Eigen::VectorXd col = values.col(c) / scale;
        const double mean = col.mean();
        const Eigen::VectorXd centered = col.array() - mean;
        const double ss = centered.squaredNorm();
        const double sd = std::sqrt(ss / static_cast<double>(r - 1));
        if (sd == 0.0) continue;
        double rho = centered.head(r - 1).dot(centered.tail(r - 1)) / ss;
        rho = std::min(0.99, std::max(0.0, rho));
        const double se = sd * std::sqrt((1.0 + rho) / (1.0 - rho)) / std::sqrt(static_cast<double>(h));
        const double m1 = col.head(h).mean();
        const double m2 = col.tail(r - h).mean();
        if (std::abs(m1 - m2) >= 5.0 * se) return false;
    }
    return true;
}

bool admissible_draw(const Eigen::MatrixXd& values, double max_sd_ratio) {
    if (!halves_stationary(values)) return false;
    const long r = values.rows();
    const long h = r / 2;
    for (long c = 0; c < values.cols(); ++c) {
        const double scale = values.col(c).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        const Eigen::VectorXd col = values.col(c) / scale;
        const auto half_sd = [](const Eigen::VectorXd& v) {
            const double m = v.mean();
            return std::sqrt((v.array() - m).square().sum() / static_cast<double>(v.size() - 1));
        };
        const double s1 = half_sd(col.head(h));
        const double s2 = half_sd(col.tail(r - h));
        const double lo = std::min(s1, s2);
        if (lo == 0.0 || std::max(s1, s2) / lo > max_sd_ratio) return false;
    }
    return true;
}

void save_dataset(const ScmDataset& dataset, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::ofstream csv(fs::path(dir) / "series.csv");
    for (std::size_t c = 0; c < dataset.series.names.size(); ++c)
        csv << (c ? "," : "") << dataset.series.names[c];
    csv << "\n";
    csv.precision(17);
    for (long t = 0; t < dataset.series.rows(); ++t) {
        for (long c = 0; c < dataset.series.cols(); ++c) csv << (c ? "," : "") << dataset.series.values(t, c);
        csv << "\n";
    }

    nlohmann::json spec_json;
    spec_json["n"] = dataset.spec.n;
    spec_json["a"] = dataset.spec.a;
    spec_json["noise_var"] = dataset.spec.noise_var;
    spec_json["length"] = dataset.spec.length;
    spec_json["burn_in"] = dataset.spec.burn_in;
    spec_json["edges"] = nlohmann::json::array();
    for (const auto& e : dataset.spec.edges) {
        spec_json["edges"].push_back({{"src", e.src},
                                      {"tgt", e.tgt},
                                      {"coupling", e.coupling},
                                      {"lag", e.lag},
                                      {"fn", to_string(e.fn)}});
    }
    std::ofstream(fs::path(dir) / "spec.json") << spec_json.dump(2) << "\n";

    nlohmann::json truth_json;
    truth_json["adjacency"] = nlohmann::json::array();
    for (int i = 0; i < dataset.truth.n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < dataset.truth.n; ++j) row.push_back(dataset.truth.at(i, j) ? 1 : 0);
        truth_json["adjacency"].push_back(row);
    }
    std::ofstream(fs::path(dir) / "truth.json") << truth_json.dump(2) << "\n";
}

}  // namespace tscausal
