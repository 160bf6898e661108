#include "tscausal/interventions.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace tscausal {

std::string to_string(InterventionTag tag) {
    switch (tag) {
        case InterventionTag::knockoff: return "knockoff";
        case InterventionTag::mean: return "mean";
        case InterventionTag::uniform: return "uniform";
        case InterventionTag::ood: return "ood";
    }
    throw std::logic_error("unhandled intervention tag");
}

InterventionTag intervention_from_string(const std::string& text) {
    if (text == "knockoff") return InterventionTag::knockoff;
    if (text == "mean") return InterventionTag::mean;
    if (text == "uniform") return InterventionTag::uniform;
    if (text == "ood") return InterventionTag::ood;
    throw std::invalid_argument("unknown intervention kind '" + text + "'");
}

Eigen::VectorXd generate(const InterventionKind& kind, int variable, const TimeSeries& series,
                         const KnockoffModel* model, const RngSeed& seed, long length) {
    const long r = series.rows();
    if (variable < 0 || variable >= static_cast<int>(series.cols()))
        throw std::invalid_argument("variable index out of range");
    if (length < 1) throw std::invalid_argument("replacement length must be positive");
    if (!std::isfinite(kind.ood_mean_shift) || !std::isfinite(kind.ood_sd_scale))
        throw std::invalid_argument("intervention multipliers must be finite");

    if (kind.tag == InterventionTag::knockoff) {
        if (!model) throw std::invalid_argument("knockoff intervention requires a fitted model");
        if (length > r) throw std::invalid_argument("replacement longer than the series");
        const TimeSeries sample = model->components.empty()
                                      ? sample_knockoffs(*model, series, seed)
                                      : sample_gmm_knockoffs(*model, series, seed);
        return sample.values.col(variable).tail(length);
    }

    const Eigen::VectorXd& col = series.values.col(variable);
    const double mu = col.mean();
    const double var = (col.array() - mu).square().sum() / static_cast<double>(r - 1);
    const double sigma = std::sqrt(var);

    RngStream rng(seed.master, seed.label);
    Eigen::VectorXd out(length);
    switch (kind.tag) {
        case InterventionTag::mean: {
            const double noise_sd =
                kind.mean_noise_var < 0.0 ? sigma : std::sqrt(kind.mean_noise_var);
            for (long t = 0; t < length; ++t) out(t) = mu + noise_sd * rng.normal();
            break;
        }
        case InterventionTag::uniform: {
            const double lo = col.minCoeff();
            const double hi = col.maxCoeff();
            if (lo == hi) {
                std::cerr << "warning: variable " << variable
                          << " is degenerate; uniform intervention falls back to the constant "
                          << lo << "\n";
                out.setConstant(lo);
                break;
            }
            for (long t = 0; t < length; ++t) out(t) = lo + (hi - lo) * rng.uniform();
            break;
        }
        case InterventionTag::ood: {
            const double shifted_mu = mu + kind.ood_mean_shift * sigma;
            const double scaled_sd = kind.ood_sd_scale * sigma;
            for (long t = 0; t < length; ++t) out(t) = shifted_mu + scaled_sd * rng.normal();
            break;
        }
        case InterventionTag::knockoff: break;  // handled above
    }
    return out;
}

}  // namespace tscausal
