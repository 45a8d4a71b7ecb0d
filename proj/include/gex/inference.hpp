#pragma once

#include <utility>

#include "gex/distortion.hpp"
#include "gex/empirical.hpp"
#include "gex/loss.hpp"

namespace gex {

// Controls for the two-dimensional covariance quadrature. grid_points caps
// the Gauss-Legendre evaluations per axis; endpoint_clip trims the unit
// interval where the integrand may blow up.
struct QuadratureConfig {
    int grid_points = 1200;
    double endpoint_clip = 1e-7;
};

// Asymptotic variance of the square-loss weighted estimators:
// the double integral of d(u) d(v) (min(u,v) - u v) / (f(F^-1(u)) f(F^-1(v))).
double avar_square(const DistortionSpec& spec, const DistributionSpec& dist,
                   const QuadratureConfig& cfg = {});

// Asymptotic variance of the derivative-root estimator at the population
// point t0: the covariance functional of the monotone split of l'(., t0)
// divided by the squared population derivative slope.
double avar_general(const DistortionSpec& spec, const DistributionSpec& dist,
                    const LossSpec& loss, double t0,
                    const QuadratureConfig& cfg = {});

// Closed-form asymptotic variances for the distorted median / quantile and
// for the two censored-data estimators (derivative-based and product-limit).
double avar_closed_distorted_median(const DistortionSpec& spec,
                                    const DistributionSpec& dist);
double avar_closed_distorted_quantile(const DistortionSpec& spec,
                                      const DistributionSpec& dist, double delta);
double avar_closed_censored_loss(const DistributionSpec& dist,
                                 const DistributionSpec* censor, double delta);
double avar_closed_censored_km(const DistributionSpec& dist,
                               const DistributionSpec* censor, double delta);

// Data-driven variance for the square loss (order-statistic gap form) and
// the quantile/absolute losses (density-free ratio with a kernel density).
double plugin_variance(const Sample& sample, const DistortionSpec& spec,
                       const LossSpec& loss, double point);

// Population lambda: the d-weighted mean of l'(X, c) under dist.
double lambda_pop(const DistortionSpec& spec, const DistributionSpec& dist,
                  const LossSpec& loss, double c);

// Population target: the root of c -> lambda_pop(c), in closed form for the
// square/absolute/quantile/G2 losses and by bisection otherwise.
double population_value(const DistortionSpec& spec, const DistributionSpec& dist,
                        const LossSpec& loss);

// Normal-approximation interval point +- z sqrt(var/n).
std::pair<double, double> confidence_interval(double point, double var, int n,
                                              double level);

}  // namespace gex
