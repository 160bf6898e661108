#include "tscausal/baseline.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace tscausal {

namespace {

double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-30;
    constexpr double eps = 1e-14;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

/// Lagged design matrix: intercept, then for each lag l = 1..q the values of
/// all variables at t - l.
Eigen::MatrixXd lagged_design(const Eigen::MatrixXd& values, int order) {
    const long n = values.cols();
    const long t_eff = values.rows() - order;
    Eigen::MatrixXd x(t_eff, 1 + static_cast<long>(order) * n);
    x.col(0).setOnes();
    for (int lag = 1; lag <= order; ++lag)
        x.middleCols(1 + static_cast<long>(lag - 1) * n, n) =
            values.middleRows(order - lag, t_eff);
    return x;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                  a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double fisher_f_tail(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    return regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
}

VarModel fit_var(const TimeSeries& series, int order) {
    if (order < 1) throw std::invalid_argument("order must be at least 1");
    const long r = series.rows();
    const long n = series.cols();
    if (r <= static_cast<long>(order) * n + order + 1)
        throw std::invalid_argument("series too short for the requested order");

    const Eigen::MatrixXd x = lagged_design(series.values, order);
    const Eigen::MatrixXd y = series.values.bottomRows(r - order);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw std::runtime_error("rank-deficient design matrix");
    const Eigen::MatrixXd b = qr.solve(y);
    const Eigen::MatrixXd resid = y - x * b;

    VarModel model;
    model.order = order;
    model.t_effective = x.rows();
    model.intercept = b.row(0);
    for (int lag = 1; lag <= order; ++lag) {
        Eigen::MatrixXd a(n, n);
        for (long j = 0; j < n; ++j)
            for (long v = 0; v < n; ++v)
                a(j, v) = b(1 + static_cast<long>(lag - 1) * n + v, j);
        model.coeffs.push_back(std::move(a));
    }
    model.rss = resid.colwise().squaredNorm();
    model.residual_cov =
        resid.transpose() * resid / static_cast<double>(x.rows() - x.cols());
    return model;
}

GrangerReport granger_graph(const TimeSeries& series, int order, double alpha) {
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must lie in (0, 1)");
    const long n = series.cols();
    if (n < 2) throw std::invalid_argument("need at least two variables");

    const VarModel full = fit_var(series, order);
    const Eigen::MatrixXd y = series.values.bottomRows(series.rows() - order);
    const Eigen::MatrixXd x = lagged_design(series.values, order);
    const double dof2 = static_cast<double>(full.t_effective) -
                        static_cast<double>(order) * static_cast<double>(n) - 1.0;

    GrangerReport report;
    report.names = series.names;
    report.order = order;
    report.alpha = alpha;
    report.graph = CausalGraph(static_cast<int>(n));
    report.f_stat = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    report.p_value = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());

    for (long i = 0; i < n; ++i) {
        Eigen::MatrixXd restricted(x.rows(), x.cols() - order);
        restricted.col(0) = x.col(0);
        long col = 1;
        for (int lag = 1; lag <= order; ++lag) {
            for (long v = 0; v < n; ++v) {
                if (v == i) continue;
                restricted.col(col++) = x.col(1 + static_cast<long>(lag - 1) * n + v);
            }
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(restricted);
        if (qr.rank() < restricted.cols()) throw std::runtime_error("rank-deficient design matrix");
        const Eigen::MatrixXd b = qr.solve(y);
        const Eigen::MatrixXd resid = y - restricted * b;

        for (long j = 0; j < n; ++j) {
            if (i == j) continue;
            const double rss_r = resid.col(j).squaredNorm();
            const double rss_f = full.rss(j);
            const double f =
                std::max(0.0, (rss_r - rss_f) / static_cast<double>(order) / (rss_f / dof2));
            const double p = fisher_f_tail(f, static_cast<double>(order), dof2);
            report.f_stat(i, j) = f;
            report.p_value(i, j) = p;
            report.graph.set(static_cast<int>(i), static_cast<int>(j), p < alpha);
        }
    }
    return report;
}

std::string granger_to_json(const GrangerReport& report) {
    nlohmann::json doc;
    doc["method"] = "var-gc";
    doc["names"] = report.names;
    doc["order"] = report.order;
    doc["alpha"] = report.alpha;
    nlohmann::json adjacency = nlohmann::json::array();
    for (int i = 0; i < report.graph.n; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < report.graph.n; ++j) row.push_back(report.graph.at(i, j) ? 1 : 0);
        adjacency.push_back(std::move(row));
    }
    doc["adjacency"] = std::move(adjacency);
    nlohmann::json edges = nlohmann::json::array();
    for (int i = 0; i < report.graph.n; ++i) {
        for (int j = 0; j < report.graph.n; ++j) {
            if (i == j) continue;
            edges.push_back({{"source", i},
                             {"target", j},
                             {"source_name", report.names[static_cast<std::size_t>(i)]},
                             {"target_name", report.names[static_cast<std::size_t>(j)]},
                             {"f", report.f_stat(i, j)},
                             {"p", report.p_value(i, j)},
                             {"decision", report.graph.at(i, j)}});
        }
    }
    doc["edges"] = std::move(edges);
    return doc.dump(2);
}

}  // namespace tscausal
