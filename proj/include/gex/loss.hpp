#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gex/distribution.hpp"

namespace gex {

enum class LossKind {
    AbsoluteValue,
    PowerP,            // |x-c|^p, p > 0
    Quantile,          // |delta - 1{x<=c}| |x-c|
    Expectile,         // |delta - 1{x<=c}| (x-c)^2
    Huber,             // quadratic core, linear tails of slope delta
    Esscher,           // (c-x)^2 exp(delta x)
    Square,
    G1,                // -c(x^2-x) + c^2/2
    G2,                // -c|x-b|^delta + c^2/2
    G3,                // 1{c<x}(x-c) + c x
    G4,                // c^2/2 - (1+delta) c x
    CensoredQuantile,  // quantile loss with an additive censoring correction
    TrimmedMean,       // (x-c)^2 capped at delta^2
    MomentRatio,       // x (c-x)^2
    SignedMeanRatio,   // (1-c)^2 x 1{x>=0} - c^2 x 1{x<0}
};

struct LossSpec {
    LossKind kind = LossKind::Square;
    double delta = 0.0;  // level, power, or scale depending on the kind
    double b = 0.0;      // G2 center
    std::optional<DistributionSpec> censor;  // CensoredQuantile: censoring law

    static LossSpec absolute();
    static LossSpec power(double p);
    static LossSpec quantile(double delta);
    static LossSpec expectile(double delta);
    static LossSpec huber(double delta);
    static LossSpec esscher(double delta);
    static LossSpec square();
    static LossSpec g1();
    static LossSpec g2(double delta, double b);
    static LossSpec g3();
    static LossSpec g4(double delta);
    static LossSpec censored_quantile(double delta, DistributionSpec censor);
    static LossSpec trimmed_mean(double delta);
    static LossSpec moment_ratio();
    static LossSpec signed_mean_ratio();
};

// Structural traits of a loss used by dispatch logic and tests.
struct PropertyFlags {
    bool sign_symmetric = false;     // l(-x,-c) == l(x,c)
    bool shift_invariant = false;    // l(x+s,c+s) == l(x,c)
    std::optional<double> homogeneous_degree;  // l(ax,ac) == a^k l(x,c), a>0
    bool convex = false;             // convex in c for every fixed x
};

// Signed measure nu = d(-l'(x,c)) in x: point masses plus a density away
// from them; breakpoints mark density kinks/jumps for quadrature splitting.
struct DerivativeMeasure {
    std::vector<std::pair<double, double>> atoms;  // (location, mass)
    bool has_density = false;
    std::function<double(double)> density;
    std::vector<double> breakpoints;
};

// l'(x,c) written as h1(x) - h2(x) with both h nondecreasing and
// left-continuous, plus the derivative measure of -l'.
struct MonotoneDecomposition {
    std::function<double(double)> h1;
    std::function<double(double)> h2;
    DerivativeMeasure measure;
};

double eval(const LossSpec& spec, double x, double c);

// Partial derivative in c; right-hand at kinks in c, left-continuous in x.
double eval_deriv(const LossSpec& spec, double x, double c);

// Monotone split of x -> l'(x,c) at fixed c. Convex losses only; the
// non-convex kinds raise std::invalid_argument.
MonotoneDecomposition decompose(const LossSpec& spec, double c);

PropertyFlags classify(const LossSpec& spec);

// x-locations where x -> l'(x,c) kinks or jumps, for integration splitting.
std::vector<double> derivative_kinks(const LossSpec& spec, double c);

// Integral of the censoring CDF from 0 to c (signed when c < 0).
double censor_cdf_integral(const DistributionSpec& censor, double c);

// Token forms: "abs", "square", "power:1.5", "quantile:0.5",
// "expectile:0.9", "huber:1.0", "esscher:0.1", "g1", "g2:0.5:0", "g3",
// "g4:0.2", "cens-quantile:0.5:expo:0.111", "trimmed:1.0", "moment-ratio",
// "signed-mean-ratio".
LossSpec parse_loss(const std::string& token);
std::string loss_token(const LossSpec& spec);

}  // namespace gex
