#pragma once

#include <string>
#include <vector>

#include "tscausal/core.hpp"

namespace tscausal {

struct VarModel {
    int order = 0;
    long t_effective = 0;  // rows entering the regression
    Eigen::VectorXd intercept;
    std::vector<Eigen::MatrixXd> coeffs;  // coeffs[l](j, v): lag l+1 of variable v in equation j
    Eigen::MatrixXd residual_cov;
    Eigen::VectorXd rss;
};

/// Per-equation ordinary least squares on an intercept plus `order` lags of
/// every variable.
VarModel fit_var(const TimeSeries& series, int order);

struct GrangerReport {
    CausalGraph graph;
    std::vector<std::string> names;
    Eigen::MatrixXd f_stat;   // (i, j): statistic for edge i -> j; NaN on diagonal
    Eigen::MatrixXd p_value;  // same layout
    int order = 0;
    double alpha = 0.05;
};

/// Edge i -> j present when removing all lags of i from j's equation raises
/// the residual sum of squares significantly under the F reference law.
GrangerReport granger_graph(const TimeSeries& series, int order, double alpha);

std::string granger_to_json(const GrangerReport& report);

/// I_x(a, b), computed by continued fraction.
double regularized_incomplete_beta(double a, double b, double x);

/// P(F > f) for the F(d1, d2) law.
double fisher_f_tail(double f, double d1, double d2);

}  // namespace tscausal
