#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gex/distribution.hpp"
#include "gex/empirical.hpp"

namespace gex {

enum class DistortionKind {
    Uniform,        // identity weight
    ExtremileK,     // median-matching power family, parameter tau in (0,1)
    Beta,           // regularized incomplete beta, parameters a, b > 0
    Kumaraswamy,    // 1 - (1 - u^a)^b, parameters a, b > 0
    ExpectedShortfall,  // mass above level tau in [0,1)
    Wang,           // normal shift, any real tau
    PropHazard,     // 1 - (1-u)^(1/tau), tau >= 1
    MinVar,         // u^(tau+1), tau >= 0
    MaxVar,         // 1 - (1-u)^(1/(tau+1)), tau >= 0
    MinMaxVar,      // (1 - (1-u)^(1/(tau+1)))^(tau+1), tau >= 0
    MaxMinVar,      // 1 - (1 - u^(tau+1))^(1/(tau+1)), tau >= 0
    UserDensity,    // piecewise-linear density from knots, renormalized
};

// A concave-or-general distortion D on [0,1] plus an optional dual flip.
// With `dual` set, the function evaluated is 1 - D(1-u) and the density is
// d(1-u); flipping twice restores the original bitwise.
struct DistortionSpec {
    DistortionKind kind = DistortionKind::Uniform;
    double a = 0.0;  // tau, or first shape parameter
    double b = 0.0;  // second shape parameter where applicable
    std::vector<std::pair<double, double>> knots;  // UserDensity: (u, weight)
    bool dual_flag = false;

    static DistortionSpec uniform();
    static DistortionSpec extremile(double tau);
    static DistortionSpec beta(double a, double b);
    static DistortionSpec kumaraswamy(double a, double b);
    static DistortionSpec expected_shortfall(double tau);
    static DistortionSpec wang(double tau);
    static DistortionSpec prop_hazard(double tau);
    static DistortionSpec min_var(double tau);
    static DistortionSpec max_var(double tau);
    static DistortionSpec min_max_var(double tau);
    static DistortionSpec max_min_var(double tau);
    static DistortionSpec user_density(std::vector<std::pair<double, double>> knots);
};

// D(u) for u in [0,1]; exact 0 and 1 at the endpoints for every kind.
double eval_cdf(const DistortionSpec& spec, double u);

// dD/du for u strictly inside (0,1).
double eval_density(const DistortionSpec& spec, double u);

// The flipped distortion 1 - D(1-u); an involution on the spec.
DistortionSpec dual(const DistortionSpec& spec);

// Generalized inverse inf{u : D(u) >= p}. Closed form where the family
// admits one, bisection to 1e-10 otherwise.
double distortion_inverse(const DistortionSpec& spec, double p);

// Quantile of the reweighted law D(F(.)): dist.quantile(distortion_inverse(p)).
double distorted_quantile(const DistortionSpec& spec, const DistributionSpec& dist,
                          double p);

// Mean of the reweighted law, computed as the weighted quantile integral and
// cross-checked against the tail-integral form; disagreement raises.
double distortion_risk_mean(const DistortionSpec& spec, const DistributionSpec& dist);

// Interior points where the density jumps or kinks (integration breakpoints).
std::vector<double> density_breakpoints(const DistortionSpec& spec);

// n inverse-transform draws from the reweighted law.
Sample sample_distorted(const DistortionSpec& spec, const DistributionSpec& dist,
                        int n, std::uint64_t seed);

// Token forms: "uniform", "extremile:0.9", "es:0.95", "beta:2:5",
// "kumaraswamy:2:3", "wang:0.5", "prophazard:2", "minvar:1", "maxvar:1",
// "minmaxvar:1", "maxminvar:1". A "dual:" prefix flips any of them.
DistortionSpec parse_distortion(const std::string& token);
std::string distortion_token(const DistortionSpec& spec);

}  // namespace gex
