#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gex {

// Observations sorted ascending; `events` marks uncensored entries (1) when
// the sample carries censoring indicators. Ties keep their indicator pairing.
struct Sample {
    std::vector<double> values;
    std::optional<std::vector<std::uint8_t>> events;

    int n() const { return static_cast<int>(values.size()); }
    bool censored() const { return events.has_value(); }

    static Sample from_values(std::vector<double> v);
    static Sample from_censored(std::vector<double> v, std::vector<std::uint8_t> ev);
};

// Right-continuous step function: value is vs[i] on [xs[i], xs[i+1]) and 0
// before xs[0].
struct StepFunction {
    std::vector<double> xs;
    std::vector<double> vs;

    double operator()(double x) const;
};

// Empirical CDF with the (n+1)-denominator convention: height k/(n+1) after
// the k-th order statistic, ties taking the last index of their group.
StepFunction ecdf(const Sample& sample);

// Smallest order statistic whose (n+1)-scaled rank reaches p; levels above
// n/(n+1) clamp to the maximum. Inverts ecdf exactly at attained levels.
double empirical_quantile(const Sample& sample, double p);

// Kaplan-Meier product-limit CDF estimate. Events precede censorings at tied
// times; jumps occur at event times only. Throws breakdown_error when the
// sample holds no events at all.
StepFunction km_cdf(const Sample& sample);

// First time at which km_cdf reaches delta; breakdown_error when the curve
// never gets there.
double km_quantile(const Sample& sample, double delta);

// Gaussian kernel density at x. Bandwidth is the Silverman reference rule,
// widened to the distance of the ceil(0.10 n)-th nearest neighbour of x so
// the window is never empty. Needs n >= 5.
double kde(const Sample& sample, double x);

// Reads "value" or "value,event" CSV (header required). Raises
// std::invalid_argument naming the offending row on malformed input.
Sample load_csv(const std::string& path);

}  // namespace gex
