#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tscausal {

/// Multivariate time series: rows are time steps, columns are variables.
/// Column order is the canonical variable index used by every module.
struct TimeSeries {
    Eigen::MatrixXd values;
    std::vector<std::string> names;
    std::string sampling;

    long rows() const { return values.rows(); }
    long cols() const { return values.cols(); }
};

/// Directed graph over variables; entry (i, j) true means edge i -> j.
/// The diagonal is always false: self-links are not represented here.
struct CausalGraph {
    int n = 0;
    std::vector<std::uint8_t> adj;

    CausalGraph() = default;
    explicit CausalGraph(int nodes) : n(nodes), adj(static_cast<std::size_t>(nodes) * nodes, 0) {}

    bool at(int i, int j) const { return adj[static_cast<std::size_t>(i) * n + j] != 0; }
    void set(int i, int j, bool present) {
        if (i == j) return;
        adj[static_cast<std::size_t>(i) * n + j] = present ? 1 : 0;
    }
    int edge_count() const {
        int c = 0;
        for (auto v : adj) c += (v != 0);
        return c;
    }
    bool operator==(const CausalGraph& other) const { return n == other.n && adj == other.adj; }
};

/// Per-column affine scaling. Constant columns are flagged and left unscaled
/// (mean 0, sd 1) so that the round trip is exact for them too.
struct StandardizationParams {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
    std::vector<std::uint8_t> constant;
};

/// A master seed plus a stream label. Identical (master, label) pairs yield
/// identical streams across runs and platforms.
struct RngSeed {
    std::uint64_t master = 0;
    std::string label;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);

/// Deterministic labeled random stream. The uniform and normal transforms are
/// implemented directly on the 64-bit engine output so that draws are
/// bit-identical across standard library implementations.
class RngStream {
  public:
    RngStream(std::uint64_t master, std::string_view label)
        : eng_(splitmix64(master ^ fnv1a(label))) {}
    explicit RngStream(const RngSeed& seed) : RngStream(seed.master, seed.label) {}

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform draw in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Uniform integer in [lo, hi], inclusive, without modulo bias.
    long uniform_int(long lo, long hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t v = 0;
        do {
            v = next_u64();
        } while (v >= limit);
        return lo + static_cast<long>(v % span);
    }

    /// k distinct values from {0, ..., n-1}, in draw order.
    std::vector<int> sample_without_replacement(int n, int k);

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct CsvOptions {
    /// Columns to load, by header name. Empty selects every numeric column.
    std::vector<std::string> columns;
};

/// Load a comma-separated file: first row is the header, a leading
/// non-numeric column is treated as a date/index column and skipped, rows
/// containing missing values (empty, NA, NaN) are dropped with the count
/// reported on standard error.
TimeSeries load_csv(const std::string& path, const CsvOptions& options = {});

/// Header row plus full-precision values.
void save_csv(const TimeSeries& series, const std::string& path);

/// Column-wise z-scoring; constant columns are flagged, centered, and left
/// unscaled so the transform stays invertible.
std::pair<TimeSeries, StandardizationParams> standardize(const TimeSeries& series);

TimeSeries unstandardize(const TimeSeries& series, const StandardizationParams& params);

Eigen::MatrixXd standardize_matrix(const Eigen::MatrixXd& values, const StandardizationParams& params);

StandardizationParams fit_standardization(const Eigen::MatrixXd& values);

/// Contiguous split into train and forecast segments. Both segments must hold
/// at least lag_depth + window_length rows.
std::pair<TimeSeries, TimeSeries> split_train_forecast(const TimeSeries& series,
                                                       double train_fraction,
                                                       int lag_depth = 10,
                                                       int window_length = 25);

}  // namespace tscausal
