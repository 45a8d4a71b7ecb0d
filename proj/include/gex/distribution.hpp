#pragma once

#include <string>
#include <vector>

namespace gex {

enum class DistKind { Normal, Exponential, Uniform, Empirical };

// Sampling model for observations. Continuous families expose cdf/pdf and an
// exact quantile; the empirical kind (a fixed support list) is quantile-only.
struct DistributionSpec {
    DistKind kind = DistKind::Normal;
    double a = 0.0;  // Normal mean, Exponential rate, Uniform lower bound
    double b = 1.0;  // Normal sd, Uniform upper bound
    std::vector<double> values;  // Empirical support, sorted ascending

    static DistributionSpec normal(double mu, double sigma);
    static DistributionSpec exponential(double rate);
    static DistributionSpec uniform(double lo, double hi);
    static DistributionSpec empirical(std::vector<double> vals);

    // Token forms: "normal:mu:sigma", "expo:rate", "uniform:lo:hi".
    // Bare "normal" means normal:0:1 and bare "expo" means expo:1.
    static DistributionSpec parse(const std::string& token);
    std::string token() const;

    double cdf(double x) const;
    double pdf(double x) const;
    double quantile(double p) const;
};

}  // namespace gex
