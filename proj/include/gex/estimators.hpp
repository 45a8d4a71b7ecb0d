#pragma once

#include "gex/distortion.hpp"
#include "gex/empirical.hpp"
#include "gex/loss.hpp"

namespace gex {

// Bracketed root search controls for the derivative-based estimator.
struct RootConfig {
    double pad = 0.5;      // initial bracket margin, as a fraction of the range
    double tol = 1e-10;    // relative bracket width at termination
    int max_iter = 200;
};

struct RootResult {
    double value = 0.0;
    bool bracket_expanded = false;  // the initial bracket missed the root
    bool no_sign_change = false;    // fell back to the better endpoint
};

// Grid-scan controls for non-convex losses.
struct GridConfig {
    double step = 0.01;
    int lookahead = 20;
    double slope_threshold = 0.01;
};

// Weighted order-statistic estimator: sum of X_(k) times the D-increment
// D(k/(n+1)) - D((k-1)/(n+1)).
double estimate_square_L(const Sample& sample, const DistortionSpec& spec);

// Density-weighted average (1/n) sum d(i/(n+1)) X_(i).
double estimate_square_LM(const Sample& sample, const DistortionSpec& spec);

// Self-normalized variant of estimate_square_LM; raises breakdown_error when
// the weight mass vanishes.
double estimate_square_M(const Sample& sample, const DistortionSpec& spec);

// Sample moment (1/n) sum d(Fhat(X_i)) l'(X_i, c), with Fhat(X_i) = k/(n+1)
// at the last index k of X_i's tie group, summed in ascending data order.
double lambda_star(const Sample& sample, const DistortionSpec& spec,
                   const LossSpec& loss, double c);

// Root of c -> lambda_star(c) for convex losses. Piecewise-constant
// derivatives resolve to the data point whose lambda_star is smallest in
// magnitude (ties prefer the non-negative side, then the smaller point);
// losses with linear derivative solve in closed form; the rest bisect.
// Non-convex losses raise std::invalid_argument.
RootResult estimate_mroot_detail(const Sample& sample, const DistortionSpec& spec,
                                 const LossSpec& loss, const RootConfig& cfg = {});
double estimate_mroot(const Sample& sample, const DistortionSpec& spec,
                      const LossSpec& loss, const RootConfig& cfg = {});

// Equispaced scan over [min(Y), max(Y)]: returns the smallest grid point
// whose forward difference quotients of the weighted objective clear the
// slope threshold for every step in the lookahead window.
double estimate_grid(const Sample& sample, const DistortionSpec& spec,
                     const LossSpec& loss, const GridConfig& cfg = {});

}  // namespace gex
