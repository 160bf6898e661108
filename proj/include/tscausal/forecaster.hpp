#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tscausal/core.hpp"

namespace tscausal {

struct ForecastConfig {
    int lag_depth = 10;
    int hidden = 32;
    int epochs = 300;
    double learning_rate = 1e-3;
    int batch = 64;
    std::uint64_t seed = 0;
};

/// One-hidden-layer tanh network predicting a single target one step ahead
/// from the lagged values of all variables (standardized units).
struct TargetNet {
    Eigen::MatrixXd w1;  // hidden x (lag_depth * n)
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;
    double b2 = 0.0;
    std::vector<double> loss_trace;  // mean squared training error per epoch
};

/// Per-target networks plus the standardization fitted on the training
/// segment. Initialization is keyed by variable names, so renaming and
/// reordering columns consistently relabels the model without changing it.
struct ForecastModel {
    ForecastConfig config;
    StandardizationParams standardization;
    std::vector<std::string> names;
    std::vector<TargetNet> nets;

    int dim() const { return static_cast<int>(nets.size()); }
    double final_rmse(int target) const;
};

struct Substitution {
    int variable = -1;
    Eigen::VectorXd replacement;  // raw units, one value per forecast-segment row
    std::string kind;
};

struct ResidualSeries {
    int target = -1;
    Eigen::VectorXd residuals;  // raw units; segment length minus lag_depth entries
    int intervened_variable = -1;
    std::string intervention;
};

ForecastModel fit(const TimeSeries& train, const ForecastConfig& config);

/// One-step teacher-forced predictions (raw units) for rows
/// [fc_begin + lag_depth, fc_end); lag windows stay inside the segment.
Eigen::MatrixXd predict(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                        long fc_end);

/// Residuals for one target over the forecast segment. The substitution, when
/// present, replaces variable `substitution->variable` in every lag window;
/// the target's own lags and the compared observation are never substituted.
ResidualSeries target_residuals(const ForecastModel& model, const TimeSeries& series, long fc_begin,
                                long fc_end, int target,
                                const std::optional<Substitution>& substitution = std::nullopt);

/// Residuals for every target. With a substitution, the substituted variable
/// itself is omitted from the result.
std::vector<ResidualSeries> residuals(const ForecastModel& model, const TimeSeries& series,
                                      long fc_begin, long fc_end,
                                      const std::optional<Substitution>& substitution = std::nullopt);

/// Flat key-value text format, one "name=value(s)" line per entry.
void save_model(const ForecastModel& model, const std::string& path);
ForecastModel load_model(const std::string& path);

/// Diagnostic: max relative error between analytic and central
/// finite-difference gradients (step 1e-5) on one random instance.
double gradient_check(int n_vars, int lag_depth, int hidden, int samples, std::uint64_t seed);

}  // namespace tscausal
