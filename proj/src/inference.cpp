#include "gex/inference.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "gex/common.hpp"
#include "gex/quadrature.hpp"

namespace gex {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

int side_panels_for(const QuadratureConfig& cfg) {
    if (cfg.grid_points < 16)
        throw std::invalid_argument("quadrature config: grid_points must be >= 16");
    return std::clamp(cfg.grid_points / 32, 8, 40);
}

std::vector<double> clamp_breaks(std::vector<double> breaks, double lo, double hi) {
    std::vector<double> out;
    for (double t : breaks)
        if (t > lo && t < hi) out.push_back(t);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Quantile-space weight d(u) / f(F^-1(u)) shared by both variance forms so
// that the square loss reduces to the square-estimator formula exactly.
double du_weight(const DistortionSpec& spec, const DistributionSpec& dist,
                 double u) {
    return eval_density(spec, u) / dist.pdf(dist.quantile(u));
}

double interval_integral(const std::function<double(double)>& f, double lo,
                         double hi, const std::vector<double>& breaks,
                         int side_panels) {
    if (!(hi > lo)) return 0.0;
    const auto edges =
        quad::graded_edges(lo, hi, clamp_breaks(breaks, lo, hi), side_panels);
    return quad::over_edges(f, edges);
}

double central_diff_slope(const DistortionSpec& spec, const DistributionSpec& dist,
                          const LossSpec& loss, double t0) {
    const double h = std::max(1e-5, 1e-5 * std::abs(t0));
    return (lambda_pop(spec, dist, loss, t0 + h) -
            lambda_pop(spec, dist, loss, t0 - h)) /
           (2.0 * h);
}

double pop_slope(const DistortionSpec& spec, const DistributionSpec& dist,
                 const LossSpec& loss, double t0) {
    switch (loss.kind) {
        case LossKind::Square:
            return 2.0;
        case LossKind::AbsoluteValue:
            return 2.0 * dist.pdf(t0) * eval_density(spec, dist.cdf(t0));
        case LossKind::Quantile:
            return dist.pdf(t0) * eval_density(spec, dist.cdf(t0));
        case LossKind::G2:
            return 1.0;
        default:
            return central_diff_slope(spec, dist, loss, t0);
    }
}

}  // namespace

double avar_square(const DistortionSpec& spec, const DistributionSpec& dist,
                   const QuadratureConfig& cfg) {
    const int side = side_panels_for(cfg);
    const double clip = cfg.endpoint_clip;
    const auto edges = quad::graded_edges(
        clip, 1.0 - clip, clamp_breaks(density_breakpoints(spec), clip, 1.0 - clip),
        side);
    return quad::min_cov_square(
        [&](double u) { return du_weight(spec, dist, u); }, edges);
}

double avar_general(const DistortionSpec& spec, const DistributionSpec& dist,
                    const LossSpec& loss, double t0, const QuadratureConfig& cfg) {
    const MonotoneDecomposition dec = decompose(loss, t0);
    const double slope = pop_slope(spec, dist, loss, t0);
    if (std::abs(slope) < 1e-10)
        throw std::runtime_error(
            "avar_general: population derivative slope is degenerate at t0 = " +
            std::to_string(t0));

    const int side = side_panels_for(cfg);
    const double clip = cfg.endpoint_clip;
    std::vector<double> breaks_u = density_breakpoints(spec);
    for (double x : dec.measure.breakpoints) breaks_u.push_back(dist.cdf(x));
    breaks_u = clamp_breaks(std::move(breaks_u), clip, 1.0 - clip);

    double sigma = 0.0;
    std::function<double(double)> m;
    if (dec.measure.has_density) {
        m = [&](double u) {
            return dec.measure.density(dist.quantile(u)) * du_weight(spec, dist, u);
        };
        const auto edges = quad::graded_edges(clip, 1.0 - clip, breaks_u, side);
        sigma += quad::min_cov_square(m, edges);
    }

    std::vector<std::pair<double, double>> atoms;  // (p, weighted mass)
    for (const auto& [x, mass] : dec.measure.atoms) {
        double p = dist.cdf(x);
        p = std::clamp(p, clip, 1.0 - clip);
        atoms.emplace_back(p, mass * eval_density(spec, p));
    }
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        const auto [pj, bj] = atoms[j];
        sigma += bj * bj * pj * (1.0 - pj);
        for (std::size_t k = j + 1; k < atoms.size(); ++k) {
            const auto [pk, bk] = atoms[k];
            sigma += 2.0 * bj * bk * (std::min(pj, pk) - pj * pk);
        }
        if (dec.measure.has_density) {
            const double left = interval_integral(
                [&](double u) { return u * m(u); }, clip, pj, breaks_u, side);
            const double right = interval_integral(
                [&](double u) { return (1.0 - u) * m(u); }, pj, 1.0 - clip,
                breaks_u, side);
            sigma += 2.0 * bj * ((1.0 - pj) * left + pj * right);
        }
    }
    return sigma / (slope * slope);
}

double avar_closed_distorted_median(const DistortionSpec& spec,
                                    const DistributionSpec& dist) {
    const double p = distortion_inverse(spec, 0.5);
    const double f = dist.pdf(dist.quantile(p));
    if (f <= 0.0)
        throw std::runtime_error(
            "avar_closed_distorted_median: density vanishes at the target");
    return p * (1.0 - p) / (f * f);
}

double avar_closed_distorted_quantile(const DistortionSpec& spec,
                                      const DistributionSpec& dist, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("avar_closed_distorted_quantile: level must be in "
                                "(0,1), got " + std::to_string(delta));
    const double p = distortion_inverse(spec, delta);
    const double f = dist.pdf(dist.quantile(p));
    if (f <= 0.0)
        throw std::runtime_error(
            "avar_closed_distorted_quantile: density vanishes at the target");
    return p * (1.0 - p) / (f * f);
}

double avar_closed_censored_loss(const DistributionSpec& dist,
                                 const DistributionSpec* censor, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("avar_closed_censored_loss: level must be in "
                                "(0,1), got " + std::to_string(delta));
    const double t0 = dist.quantile(delta);
    const double fx = dist.pdf(t0);
    const double fc = censor ? censor->pdf(t0) : 0.0;
    const double den = fx - (1.0 - delta) * fc;
    if (den == 0.0)
        throw std::runtime_error(
            "avar_closed_censored_loss: denominator vanishes at the target");
    return delta * (1.0 - delta) / (den * den);
}

double avar_closed_censored_km(const DistributionSpec& dist,
                               const DistributionSpec* censor, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("avar_closed_censored_km: level must be in "
                                "(0,1), got " + std::to_string(delta));
    const double t0 = dist.quantile(delta);
    const double fx = dist.pdf(t0);
    if (fx <= 0.0)
        throw std::runtime_error(
            "avar_closed_censored_km: density vanishes at the target");
    auto integrand = [&](double s) {
        const double surv_x = 1.0 - dist.cdf(s);
        const double surv_c = censor ? 1.0 - censor->cdf(s) : 1.0;
        return dist.pdf(s) / (surv_x * surv_x * surv_c);
    };
    const auto edges = quad::graded_edges(0.0, t0, {}, 8);
    const double integral = quad::over_edges(integrand, edges);
    const double ratio = (1.0 - delta) / fx;
    return ratio * ratio * integral;
}

double plugin_variance(const Sample& sample, const DistortionSpec& spec,
                       const LossSpec& loss, double point) {
    switch (loss.kind) {
        case LossKind::Quantile:
        case LossKind::AbsoluteValue: {
            const double fn = ecdf(sample)(point);
            const double f = kde(sample, point);
            if (f <= 0.0)
                throw std::runtime_error(
                    "plugin_variance: kernel density vanishes at the point");
            return (fn - fn * fn) / (f * f);
        }
        case LossKind::Square: {
            const auto& v = sample.values;
            const std::size_t n = v.size();
            if (n < 2)
                throw std::invalid_argument(
                    "plugin_variance: square loss needs at least 2 observations");
            const double denom = static_cast<double>(n) + 1.0;
            // Gap form: sum over i,j of (min(i,j)/(n+1) - ij/(n+1)^2) a_i a_j
            // with a_i = d(i/(n+1)) (X_(i+1) - X_(i)); accumulated via suffix
            // sums, which is the same bilinear form expanded in O(n).
            std::vector<double> a(n - 1);
            for (std::size_t i = 0; i + 1 < n; ++i)
                a[i] = eval_density(spec, static_cast<double>(i + 1) / denom) *
                       (v[i + 1] - v[i]);
            double mean_term = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i)
                mean_term += (static_cast<double>(i + 1) / denom) * a[i];
            double suffix = 0.0, square_term = 0.0;
            for (std::size_t k = n - 1; k-- > 0;) {
                suffix += a[k];
                square_term += suffix * suffix;
            }
            return square_term / denom - mean_term * mean_term;
        }
        default:
            throw std::invalid_argument(
                "plugin_variance: no plug-in form for loss '" + loss_token(loss) +
                "'; use avar_general with estimated inputs instead");
    }
}

double lambda_pop(const DistortionSpec& spec, const DistributionSpec& dist,
                  const LossSpec& loss, double c) {
    const double clip = 1e-10;
    std::vector<double> breaks = density_breakpoints(spec);
    for (double x : derivative_kinks(loss, c)) breaks.push_back(dist.cdf(x));
    breaks = clamp_breaks(std::move(breaks), clip, 1.0 - clip);
    const auto edges = quad::graded_edges(clip, 1.0 - clip, breaks, 34);
    return quad::over_edges(
        [&](double u) {
            return eval_density(spec, u) * eval_deriv(loss, dist.quantile(u), c);
        },
        edges);
}

double population_value(const DistortionSpec& spec, const DistributionSpec& dist,
                        const LossSpec& loss) {
    switch (loss.kind) {
        case LossKind::Square:
            return distortion_risk_mean(spec, dist);
        case LossKind::AbsoluteValue:
            return distorted_quantile(spec, dist, 0.5);
        case LossKind::Quantile:
            return distorted_quantile(spec, dist, loss.delta);
        case LossKind::G2: {
            const double clip = 1e-12;
            std::vector<double> breaks = density_breakpoints(spec);
            breaks.push_back(dist.cdf(loss.b));
            breaks = clamp_breaks(std::move(breaks), clip, 1.0 - clip);
            const auto edges = quad::graded_edges(clip, 1.0 - clip, breaks, 37);
            return quad::over_edges(
                [&](double u) {
                    return eval_density(spec, u) *
                           std::pow(std::abs(dist.quantile(u) - loss.b), loss.delta);
                },
                edges);
        }
        default:
            break;
    }
    if (!classify(loss).convex)
        throw std::invalid_argument(
            "population_value: loss '" + loss_token(loss) +
            "' is not convex; the population derivative may cross zero more "
            "than once, supply the target directly");
    double eps = 1e-9;
    double lo = dist.quantile(eps);
    double hi = dist.quantile(1.0 - eps);
    double f_lo = lambda_pop(spec, dist, loss, lo);
    double f_hi = lambda_pop(spec, dist, loss, hi);
    if (f_lo > 0.0 || f_hi < 0.0) {
        eps = 1e-12;
        lo = dist.quantile(eps);
        hi = dist.quantile(1.0 - eps);
        f_lo = lambda_pop(spec, dist, loss, lo);
        f_hi = lambda_pop(spec, dist, loss, hi);
    }
    if (f_lo > 0.0 || f_hi < 0.0)
        throw std::runtime_error(
            "population_value: population derivative has no sign change over the "
            "support (lambda(" + std::to_string(lo) + ") = " + std::to_string(f_lo) +
            ", lambda(" + std::to_string(hi) + ") = " + std::to_string(f_hi) + ")");
    for (int it = 0; it < 200; ++it) {
        const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
        if (hi - lo <= 1e-12 * scale) break;
        const double mid = 0.5 * (lo + hi);
        if (lambda_pop(spec, dist, loss, mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::pair<double, double> confidence_interval(double point, double var, int n,
                                              double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::domain_error("confidence_interval: level must be in (0,1), got " +
                                std::to_string(level));
    if (var < 0.0)
        throw std::domain_error("confidence_interval: variance must be >= 0");
    if (n < 1)
        throw std::domain_error("confidence_interval: n must be >= 1");
    const double z = boost::math::quantile(kStdNormal, 0.5 * (1.0 + level));
    const double half = z * std::sqrt(var / static_cast<double>(n));
    return {point - half, point + half};
}

}  // namespace gex
