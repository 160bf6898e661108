#pragma once

#include <string>

#include "tscausal/core.hpp"
#include "tscausal/knockoff.hpp"

namespace tscausal {

enum class InterventionTag { knockoff, mean, uniform, ood };

std::string to_string(InterventionTag tag);
InterventionTag intervention_from_string(const std::string& text);

struct InterventionKind {
    InterventionTag tag = InterventionTag::knockoff;
    double ood_mean_shift = 3.0;   // multiples of sigma added to the mean
    double ood_sd_scale = 2.0;     // multiples of sigma
    double mean_noise_var = -1.0;  // negative: use the variable's own variance
};

/// Replacement series for one variable. The knockoff kind samples a knockoff
/// copy of the whole series and returns the last `length` rows of column
/// `variable`, so the values line up with the series tail regardless of
/// `length`. The other kinds draw `length` i.i.d. values from the kind's law.
Eigen::VectorXd generate(const InterventionKind& kind, int variable, const TimeSeries& series,
                         const KnockoffModel* model, const RngSeed& seed, long length);

}  // namespace tscausal
