#pragma once

#include "tscausal/core.hpp"

#include <vector>

namespace tscausal {

struct KnockoffComponent {
    double weight = 1.0;
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd s;
    Eigen::MatrixXd cond_mean_factor;
    Eigen::MatrixXd cond_cov;
    Eigen::MatrixXd chol_cond_cov;
    Eigen::MatrixXd sigma_inv;
    double log_det_sigma = 0.0;
};

/// Second-order knockoff sampler: given the fitted mean and covariance, a
/// knockoff row is drawn from the Gaussian conditional with mean
/// mu + (I - S Sigma^-1)(z - mu) and covariance 2S - S Sigma^-1 S, where S is
/// the equicorrelated diagonal. The mixture variant holds one parameter set
/// per component.
struct KnockoffModel {
    Eigen::VectorXd mu;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd s;
    Eigen::MatrixXd cond_mean_factor;
    Eigen::MatrixXd cond_cov;
    Eigen::MatrixXd chol_cond_cov;
    std::vector<KnockoffComponent> components;

    int dim() const { return static_cast<int>(mu.size()); }
};

/// Diagonal S on the scale of the input covariance: with C the correlation
/// matrix of sigma, s = min(1, 2 lambda_min(C)) (1 - 1e-6) and S_ii =
/// s sigma_ii. Guarantees 2 sigma - S positive definite.
Eigen::VectorXd compute_equicorrelated_s(const Eigen::MatrixXd& sigma);

KnockoffModel fit_gaussian(const TimeSeries& series);

/// Gaussian-mixture variant fitted by EM; K = 1 reproduces fit_gaussian.
KnockoffModel fit_gmm(const TimeSeries& series, int k, const RngSeed& seed);

/// Row-wise independent conditional draws, one knockoff row per input row.
TimeSeries sample_knockoffs(const KnockoffModel& model, const TimeSeries& series, const RngSeed& seed);

/// Mixture sampling: per row, draw the component from its posterior given the
/// row, then apply that component's conditional.
TimeSeries sample_gmm_knockoffs(const KnockoffModel& model, const TimeSeries& series, const RngSeed& seed);

struct ExchangeabilityReport {
    /// max_ij |Cov(knockoff)_ij - sigma_ij| / sqrt(sigma_ii sigma_jj)
    double max_cov_deviation = 0.0;
    /// max_{i != j} |Cov(z, knockoff)_ij - sigma_ij| / sqrt(sigma_ii sigma_jj)
    double max_cross_deviation = 0.0;
    Eigen::VectorXd self_covariance;
    Eigen::VectorXd self_covariance_target;
    long samples = 0;
};

ExchangeabilityReport diagnose_exchangeability(const TimeSeries& series, const TimeSeries& knockoffs,
                                               const KnockoffModel& model);

}  // namespace tscausal
