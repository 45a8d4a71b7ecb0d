#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gex/distortion.hpp"
#include "gex/distribution.hpp"
#include "gex/empirical.hpp"
#include "gex/estimators.hpp"
#include "gex/loss.hpp"

namespace gex {

enum class EstimatorTag { SquareL, SquareLM, SquareM, MRoot, Grid, Km };

// One simulation cell: a sampling model, an estimation target, and a
// replication budget. Setting censor_pc builds an exponential censoring law
// calibrated so the censoring fraction of a unit-rate exponential is pc.
struct StudyConfig {
    DistributionSpec dist;
    DistortionSpec distortion;
    LossSpec loss;
    std::optional<DistributionSpec> censor;
    std::optional<double> censor_pc;
    EstimatorTag estimator = EstimatorTag::MRoot;
    int n = 100;
    int reps = 500;
    std::uint64_t seed = 0;
};

// Replication summary. Failed replications (breakdowns, numeric errors) are
// excluded from the moments and counted. variance divides by the number of
// successful replications; mse is literally bias^2 + variance.
struct McReport {
    double t0 = 0.0;
    double bias = 0.0;
    double variance = 0.0;
    double mse = 0.0;
    int failures = 0;
    std::vector<double> scaled_errors;  // sqrt(n) * (estimate - t0)
};

McReport run_study(const StudyConfig& cfg);

// n pairs (min(X,C), 1{X<=C}) with X ~ dist and C ~ censor, drawn
// interleaved from one stream.
Sample generate_censored(const DistributionSpec& dist,
                         const DistributionSpec& censor, int n,
                         std::uint64_t seed);

// Kernel density of the scaled errors on an equispaced grid spanning the
// errors plus a bandwidth margin; needs at least 30 successes.
std::vector<std::pair<double, double>> density_of_scaled_errors(
    const McReport& report, int grid_points = 101);

}  // namespace gex
