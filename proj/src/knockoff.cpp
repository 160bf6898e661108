#include "tscausal/knockoff.hpp"

#include <cmath>
#include <stdexcept>

namespace tscausal {

namespace {

constexpr double kSlack = 1e-6;

Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& x) {
    const long r = x.rows();
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    return centered.transpose() * centered / static_cast<double>(r - 1);
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

Eigen::MatrixXd ridge_if_needed(Eigen::MatrixXd sigma) {
    if (min_eigenvalue(sigma) < 1e-8) {
        const double lambda = 1e-6 * sigma.trace() / static_cast<double>(sigma.rows());
        sigma += lambda * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
        if (min_eigenvalue(sigma) < 1e-8)
            throw std::runtime_error("covariance singular even after regularization");
    }
    return sigma;
}

/// Cholesky with escalating jitter from 1e-8 to 1e-4.
Eigen::MatrixXd robust_cholesky(Eigen::MatrixXd m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    for (double jitter = 1e-8; jitter <= 1e-4 + 1e-12; jitter *= 10.0) {
        Eigen::MatrixXd jittered = m + jitter * Eigen::MatrixXd::Identity(m.rows(), m.cols());
        llt.compute(jittered);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw std::runtime_error("conditional covariance is not positive definite");
}

struct Conditionals {
    Eigen::MatrixXd cond_mean_factor;
    Eigen::MatrixXd cond_cov;
    Eigen::MatrixXd chol_cond_cov;
    Eigen::MatrixXd sigma_inv;
    double log_det_sigma = 0.0;
};

Conditionals build_conditionals(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& s) {
    const long n = sigma.rows();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) throw std::runtime_error("covariance is not positive definite");

    Conditionals out;
    out.sigma_inv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out.log_det_sigma = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();

    const Eigen::MatrixXd s_sigma_inv = s.asDiagonal() * out.sigma_inv;
    out.cond_mean_factor = Eigen::MatrixXd::Identity(n, n) - s_sigma_inv;
    Eigen::MatrixXd v = 2.0 * Eigen::MatrixXd(s.asDiagonal()) - s_sigma_inv * s.asDiagonal();
    v = 0.5 * (v + v.transpose()).eval();
    if (min_eigenvalue(v) < -1e-8)
        throw std::runtime_error("conditional covariance has a significantly negative eigenvalue");
    out.cond_cov = v;
    out.chol_cond_cov = robust_cholesky(v);
    return out;
}

Eigen::VectorXd knockoff_row(const Eigen::VectorXd& z, const Eigen::VectorXd& mu,
                             const Eigen::MatrixXd& factor, const Eigen::MatrixXd& chol,
                             RngStream& rng) {
    const long n = z.size();
    Eigen::VectorXd g(n);
    for (long i = 0; i < n; ++i) g(i) = rng.normal();
    return mu + factor * (z - mu) + chol * g;
}

double log_gaussian_density(const Eigen::VectorXd& z, const Eigen::VectorXd& mu,
                            const Eigen::MatrixXd& sigma_inv, double log_det_sigma) {
    const Eigen::VectorXd d = z - mu;
    const double quad = d.dot(sigma_inv * d);
    const double n = static_cast<double>(z.size());
    return -0.5 * (quad + log_det_sigma + n * std::log(6.28318530717958647692));
}

}  // namespace

Eigen::VectorXd compute_equicorrelated_s(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != sigma.cols()) throw std::invalid_argument("covariance must be square");
    const Eigen::VectorXd d = sigma.diagonal();
    if ((d.array() <= 0.0).any()) throw std::invalid_argument("covariance diagonal must be positive");
    const Eigen::VectorXd d_isqrt = d.array().rsqrt();
    const Eigen::MatrixXd corr = d_isqrt.asDiagonal() * sigma * d_isqrt.asDiagonal();
    const double lambda_min = min_eigenvalue(corr);
    if (lambda_min <= 0.0) throw std::invalid_argument("covariance is not positive definite");
    const double s = std::min(1.0, 2.0 * lambda_min) * (1.0 - kSlack);
    return s * d;
}

KnockoffModel fit_gaussian(const TimeSeries& series) {
    const long r = series.rows();
    const long n = series.cols();
    if (r <= n) throw std::invalid_argument("need more rows than variables to fit a covariance");

    KnockoffModel model;
    model.mu = series.values.colwise().mean();
    model.sigma = ridge_if_needed(sample_covariance(series.values));
    model.s = compute_equicorrelated_s(model.sigma);
    Conditionals cond = build_conditionals(model.sigma, model.s);
    model.cond_mean_factor = std::move(cond.cond_mean_factor);
    model.cond_cov = std::move(cond.cond_cov);
    model.chol_cond_cov = std::move(cond.chol_cond_cov);
    return model;
}

TimeSeries sample_knockoffs(const KnockoffModel& model, const TimeSeries& series, const RngSeed& seed) {
    if (series.cols() != model.dim()) throw std::invalid_argument("series dimension does not match model");
    RngStream rng(seed.master, seed.label);
    TimeSeries out = series;
    for (long t = 0; t < series.rows(); ++t) {
        out.values.row(t) =
            knockoff_row(series.values.row(t), model.mu, model.cond_mean_factor, model.chol_cond_cov, rng)
                .transpose();
    }
    return out;
}

KnockoffModel fit_gmm(const TimeSeries& series, int k, const RngSeed& seed) {
    if (k < 1) throw std::invalid_argument("component count must be at least 1");
    const long r = series.rows();
    const long n = series.cols();
    if (r <= static_cast<long>(k) * n) throw std::invalid_argument("too few rows for the requested components");

    const Eigen::MatrixXd& x = series.values;
    RngStream rng(seed.master, seed.label);

    // Seeded center draw, then one nearest-center assignment pass.
    const std::vector<int> centers = rng.sample_without_replacement(static_cast<int>(r), k);
    std::vector<int> assign(static_cast<std::size_t>(r), 0);
    for (long t = 0; t < r; ++t) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c) {
            const double dist = (x.row(t) - x.row(centers[static_cast<std::size_t>(c)])).squaredNorm();
            if (dist < best) {
                best = dist;
                assign[static_cast<std::size_t>(t)] = c;
            }
        }
    }

    std::vector<double> weights(static_cast<std::size_t>(k), 0.0);
    std::vector<Eigen::VectorXd> means(static_cast<std::size_t>(k));
    std::vector<Eigen::MatrixXd> covs(static_cast<std::size_t>(k));
    const Eigen::MatrixXd global_cov = ridge_if_needed(sample_covariance(x));
    for (int c = 0; c < k; ++c) {
        std::vector<long> rows;
        for (long t = 0; t < r; ++t)
            if (assign[static_cast<std::size_t>(t)] == c) rows.push_back(t);
        weights[static_cast<std::size_t>(c)] = static_cast<double>(rows.size()) / static_cast<double>(r);
        if (rows.size() < static_cast<std::size_t>(n + 1)) {
            means[static_cast<std::size_t>(c)] = x.row(centers[static_cast<std::size_t>(c)]);
            covs[static_cast<std::size_t>(c)] = global_cov;
            continue;
        }
        Eigen::MatrixXd sub(static_cast<long>(rows.size()), n);
        for (std::size_t i = 0; i < rows.size(); ++i) sub.row(static_cast<long>(i)) = x.row(rows[i]);
        means[static_cast<std::size_t>(c)] = sub.colwise().mean();
        covs[static_cast<std::size_t>(c)] = ridge_if_needed(sample_covariance(sub));
    }

    Eigen::MatrixXd resp(r, k);
    double prev_loglik = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<Eigen::LLT<Eigen::MatrixXd>> llts;
        std::vector<double> log_dets;
        std::vector<Eigen::MatrixXd> invs;
        for (int c = 0; c < k; ++c) {
            Eigen::LLT<Eigen::MatrixXd> llt(covs[static_cast<std::size_t>(c)]);
            if (llt.info() != Eigen::Success) throw std::runtime_error("component covariance lost positive definiteness");
            log_dets.push_back(2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum());
            invs.push_back(llt.solve(Eigen::MatrixXd::Identity(n, n)));
        }

        double loglik = 0.0;
        for (long t = 0; t < r; ++t) {
            Eigen::VectorXd logs(k);
            for (int c = 0; c < k; ++c) {
                logs(c) = std::log(std::max(weights[static_cast<std::size_t>(c)], 1e-300)) +
                          log_gaussian_density(x.row(t), means[static_cast<std::size_t>(c)],
                                               invs[static_cast<std::size_t>(c)],
                                               log_dets[static_cast<std::size_t>(c)]);
            }
            const double mx = logs.maxCoeff();
            const double lse = mx + std::log((logs.array() - mx).exp().sum());
            loglik += lse;
            resp.row(t) = (logs.array() - lse).exp();
        }
        loglik /= static_cast<double>(r);

        for (int c = 0; c < k; ++c) {
            const double nk = resp.col(c).sum();
            if (nk < 1.5) throw std::runtime_error("mixture component collapsed during fitting");
            weights[static_cast<std::size_t>(c)] = nk / static_cast<double>(r);
            const Eigen::VectorXd mu = (x.transpose() * resp.col(c)) / nk;
            Eigen::MatrixXd centered = x.rowwise() - mu.transpose();
            Eigen::MatrixXd cov =
                centered.transpose() * resp.col(c).asDiagonal() * centered / (nk - 1.0);
            means[static_cast<std::size_t>(c)] = mu;
            covs[static_cast<std::size_t>(c)] = ridge_if_needed(std::move(cov));
        }

        if (std::abs(loglik - prev_loglik) < 1e-6) break;
        prev_loglik = loglik;
    }

    KnockoffModel model;
    for (int c = 0; c < k; ++c) {
        KnockoffComponent comp;
        comp.weight = weights[static_cast<std::size_t>(c)];
        comp.mu = means[static_cast<std::size_t>(c)];
        comp.sigma = covs[static_cast<std::size_t>(c)];
        comp.s = compute_equicorrelated_s(comp.sigma);
        Conditionals cond = build_conditionals(comp.sigma, comp.s);
        comp.cond_mean_factor = std::move(cond.cond_mean_factor);
        comp.cond_cov = std::move(cond.cond_cov);
        comp.chol_cond_cov = std::move(cond.chol_cond_cov);
        comp.sigma_inv = std::move(cond.sigma_inv);
        comp.log_det_sigma = cond.log_det_sigma;
        model.components.push_back(std::move(comp));
    }

    // Moment-matched single Gaussian at the top level.
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    for (const auto& comp : model.components) mu += comp.weight * comp.mu;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, n);
    for (const auto& comp : model.components) {
        const Eigen::VectorXd d = comp.mu - mu;
        sigma += comp.weight * (comp.sigma + d * d.transpose());
    }
    model.mu = std::move(mu);
    model.sigma = ridge_if_needed(std::move(sigma));
    model.s = compute_equicorrelated_s(model.sigma);
    Conditionals cond = build_conditionals(model.sigma, model.s);
    model.cond_mean_factor = std::move(cond.cond_mean_factor);
    model.cond_cov = std::move(cond.cond_cov);
    model.chol_cond_cov = std::move(cond.chol_cond_cov);
    return model;
}

TimeSeries sample_gmm_knockoffs(const KnockoffModel& model, const TimeSeries& series, const RngSeed& seed) {
    if (model.components.empty()) throw std::invalid_argument("model has no mixture components");
    if (series.cols() != model.dim()) throw std::invalid_argument("series dimension does not match model");
    const int k = static_cast<int>(model.components.size());
    RngStream rng(seed.master, seed.label);
    TimeSeries out = series;
    for (long t = 0; t < series.rows(); ++t) {
        const Eigen::VectorXd z = series.values.row(t);
        Eigen::VectorXd logs(k);
        for (int c = 0; c < k; ++c) {
            const auto& comp = model.components[static_cast<std::size_t>(c)];
            logs(c) = std::log(std::max(comp.weight, 1e-300)) +
                      log_gaussian_density(z, comp.mu, comp.sigma_inv, comp.log_det_sigma);
        }
        const double mx = logs.maxCoeff();
        Eigen::VectorXd post = (logs.array() - mx).exp();
        post /= post.sum();

        const double u = rng.uniform();
        int pick = k - 1;
        double cum = 0.0;
        for (int c = 0; c < k; ++c) {
            cum += post(c);
            if (u < cum) {
                pick = c;
                break;
            }
        }
        const auto& comp = model.components[static_cast<std::size_t>(pick)];
        out.values.row(t) =
            knockoff_row(z, comp.mu, comp.cond_mean_factor, comp.chol_cond_cov, rng).transpose();
    }
    return out;
}

ExchangeabilityReport diagnose_exchangeability(const TimeSeries& series, const TimeSeries& knockoffs,
                                               const KnockoffModel& model) {
    if (series.rows() != knockoffs.rows() || series.cols() != knockoffs.cols())
        throw std::invalid_argument("series and knockoffs must have matching shapes");
    const long r = series.rows();
    const long n = series.cols();

    const Eigen::MatrixXd zc = series.values.rowwise() - series.values.colwise().mean();
    const Eigen::MatrixXd kc = knockoffs.values.rowwise() - knockoffs.values.colwise().mean();
    const Eigen::MatrixXd cov_k = kc.transpose() * kc / static_cast<double>(r - 1);
    const Eigen::MatrixXd cross = zc.transpose() * kc / static_cast<double>(r - 1);

    const Eigen::VectorXd d = model.sigma.diagonal();
    ExchangeabilityReport report;
    report.samples = r;
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < n; ++j) {
            const double scale = std::sqrt(d(i) * d(j));
            const double dev_cov = std::abs(cov_k(i, j) - model.sigma(i, j)) / scale;
            report.max_cov_deviation = std::max(report.max_cov_deviation, dev_cov);
            if (i != j) {
                const double dev_cross = std::abs(cross(i, j) - model.sigma(i, j)) / scale;
                report.max_cross_deviation = std::max(report.max_cross_deviation, dev_cross);
            }
        }
    }
    report.self_covariance = cross.diagonal();
    report.self_covariance_target = d - model.s;
    return report;
}

}  // namespace tscausal
