#include "gex/estimators.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gex/common.hpp"

namespace gex {

namespace {

// Density weights d(Fhat(X_i)) with the tie rule: every member of a tie
// group carries the rank of the group's last element.
struct Weights {
    std::vector<double> w;
    double total = 0.0;
};

Weights tie_weights(const std::vector<double>& v, const DistortionSpec& spec) {
    const std::size_t n = v.size();
    const double denom = static_cast<double>(n) + 1.0;
    Weights out;
    out.w.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        const double u = static_cast<double>(j + 1) / denom;
        const double wi = eval_density(spec, u);
        for (std::size_t k = i; k <= j; ++k) out.w[k] = wi;
        i = j + 1;
    }
    for (double wi : out.w) out.total += wi;
    return out;
}

void check_sample(const Sample& sample) {
    if (sample.values.empty())
        throw std::invalid_argument("estimator: sample must be non-empty");
}

// Linear l'(x,c) = slope_c * c + g(x): the root is a ratio of weighted sums.
struct LinearTerms {
    double numerator = 0.0;
    double denominator = 0.0;
};

// Largest group index with v <= 0 plus the segment solve for the expectile
// derivative, which is piecewise linear and increasing in c.
double expectile_root(const std::vector<double>& v, const Weights& wt,
                      double delta) {
    const std::size_t n = v.size();
    const double nn = static_cast<double>(n);
    double s_all = 0.0;
    for (std::size_t i = 0; i < n; ++i) s_all += wt.w[i] * v[i];

    double wlow = 0.0, slow = 0.0;
    double prev_x = v.front();
    double prev_v = 0.0, prev_wlow = 0.0;
    bool have_prev = false;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        for (std::size_t k = i; k <= j; ++k) {
            wlow += wt.w[k];
            slow += wt.w[k] * v[k];
        }
        const double x = v[i];
        const double whigh = wt.total - wlow;
        const double shigh = s_all - slow;
        const double vk = (2.0 / nn) * ((1.0 - delta) * (x * wlow - slow) -
                                        delta * (shigh - x * whigh));
        if (vk == 0.0) return x;
        if (vk > 0.0) {
            if (!have_prev) return x;  // cannot happen for n > 1 with spread data
            const double slope =
                (2.0 / nn) * ((1.0 - delta) * prev_wlow + delta * (wt.total - prev_wlow));
            return prev_x - prev_v / slope;
        }
        prev_x = x;
        prev_v = vk;
        prev_wlow = wlow;
        have_prev = true;
        i = j + 1;
    }
    // v stays negative right up to the maximum: root sits at the top point.
    return v.back();
}

}  // namespace

double estimate_square_L(const Sample& sample, const DistortionSpec& spec) {
    check_sample(sample);
    const auto& v = sample.values;
    const double denom = static_cast<double>(v.size()) + 1.0;
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double cur = eval_cdf(spec, static_cast<double>(k + 1) / denom);
        acc += (cur - prev) * v[k];
        prev = cur;
    }
    return acc;
}

double estimate_square_LM(const Sample& sample, const DistortionSpec& spec) {
    check_sample(sample);
    const auto& v = sample.values;
    const double denom = static_cast<double>(v.size()) + 1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += eval_density(spec, static_cast<double>(i + 1) / denom) * v[i];
    return acc / static_cast<double>(v.size());
}

double estimate_square_M(const Sample& sample, const DistortionSpec& spec) {
    check_sample(sample);
    const auto& v = sample.values;
    const double denom = static_cast<double>(v.size()) + 1.0;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double wi = eval_density(spec, static_cast<double>(i + 1) / denom);
        num += wi * v[i];
        den += wi;
    }
    if (den == 0.0)
        throw breakdown_error(
            "estimate_square_M: distortion density weights sum to zero on this "
            "sample (all ranks fall in a zero-density region)");
    return num / den;
}

double lambda_star(const Sample& sample, const DistortionSpec& spec,
                   const LossSpec& loss, double c) {
    check_sample(sample);
    const auto& v = sample.values;
    const Weights wt = tie_weights(v, spec);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        acc += wt.w[i] * eval_deriv(loss, v[i], c);
    return acc / static_cast<double>(v.size());
}

RootResult estimate_mroot_detail(const Sample& sample, const DistortionSpec& spec,
                                 const LossSpec& loss, const RootConfig& cfg) {
    check_sample(sample);
    if (!classify(loss).convex)
        throw std::invalid_argument(
            "estimate_mroot: loss '" + loss_token(loss) +
            "' is not convex in c; use estimate_grid instead");
    const auto& v = sample.values;
    const std::size_t n = v.size();
    const double nn = static_cast<double>(n);
    const Weights wt = tie_weights(v, spec);
    RootResult res;

    const LossKind kind = loss.kind;
    const bool step_loss = kind == LossKind::AbsoluteValue ||
                           kind == LossKind::Quantile || kind == LossKind::G3 ||
                           (kind == LossKind::PowerP && loss.delta == 1.0);
    if (step_loss) {
        // lambda_star is a step function of c jumping at the data points:
        // take the point with the smallest |lambda_star|, preferring the
        // non-negative side and then the smaller point on exact ties.
        double s_all = 0.0;
        if (kind == LossKind::G3)
            for (std::size_t i = 0; i < n; ++i) s_all += wt.w[i] * v[i];
        double best_abs = 0.0;
        bool best_neg = false;
        std::size_t best_k = 0;
        bool first = true;
        double wlow = 0.0;
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && v[j + 1] == v[i]) ++j;
            for (std::size_t k = i; k <= j; ++k) wlow += wt.w[k];
            double vk;
            if (kind == LossKind::Quantile)
                vk = (wlow - loss.delta * wt.total) / nn;
            else if (kind == LossKind::G3)
                vk = (s_all - (wt.total - wlow)) / nn;
            else
                vk = (2.0 * wlow - wt.total) / nn;
            const double a = std::abs(vk);
            const bool neg = vk < 0.0;
            if (first || a < best_abs || (a == best_abs && best_neg && !neg)) {
                best_abs = a;
                best_neg = neg;
                best_k = i;
                first = false;
            }
            i = j + 1;
        }
        res.value = v[best_k];
        return res;
    }

    if (kind == LossKind::Expectile) {
        res.value = expectile_root(v, wt, loss.delta);
        return res;
    }

    // Losses whose derivative is linear in c solve as weighted-sum ratios.
    {
        bool linear = true;
        double num = 0.0, den = 0.0;
        switch (kind) {
            case LossKind::Square:
                for (std::size_t i = 0; i < n; ++i) {
                    num += wt.w[i] * v[i];
                    den += wt.w[i];
                }
                break;
            case LossKind::PowerP:
                if (loss.delta == 2.0) {
                    for (std::size_t i = 0; i < n; ++i) {
                        num += wt.w[i] * v[i];
                        den += wt.w[i];
                    }
                } else {
                    linear = false;
                }
                break;
            case LossKind::Esscher:
                for (std::size_t i = 0; i < n; ++i) {
                    const double e = wt.w[i] * std::exp(loss.delta * v[i]);
                    num += e * v[i];
                    den += e;
                }
                break;
            case LossKind::G1:
                for (std::size_t i = 0; i < n; ++i) {
                    num += wt.w[i] * (v[i] * v[i] - v[i]);
                    den += wt.w[i];
                }
                break;
            case LossKind::G2:
                for (std::size_t i = 0; i < n; ++i) {
                    num += wt.w[i] * std::pow(std::abs(v[i] - loss.b), loss.delta);
                    den += wt.w[i];
                }
                break;
            case LossKind::G4:
                for (std::size_t i = 0; i < n; ++i) {
                    num += wt.w[i] * v[i];
                    den += wt.w[i];
                }
                num *= 1.0 + loss.delta;
                break;
            case LossKind::MomentRatio:
                for (std::size_t i = 0; i < n; ++i) {
                    num += wt.w[i] * v[i] * v[i];
                    den += wt.w[i] * v[i];
                }
                if (den <= 0.0)
                    throw breakdown_error(
                        "estimate_mroot: moment-ratio denominator is not positive "
                        "(loss needs positively weighted data)");
                break;
            case LossKind::SignedMeanRatio: {
                double pos = 0.0, absmass = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (v[i] >= 0.0) pos += wt.w[i] * v[i];
                    absmass += wt.w[i] * std::abs(v[i]);
                }
                if (absmass == 0.0)
                    throw breakdown_error(
                        "estimate_mroot: signed-mean-ratio denominator vanishes "
                        "(weighted data mass is zero)");
                num = pos;
                den = absmass;
                break;
            }
            default:
                linear = false;
                break;
        }
        if (linear) {
            if (den == 0.0)
                throw breakdown_error(
                    "estimate_mroot: weight mass vanishes on this sample");
            res.value = num / den;
            return res;
        }
    }

    // Remaining convex losses (huber, power with p > 1): bisect lambda_star.
    const double range = v.back() - v.front();
    if (range == 0.0) {
        res.value = v.front();
        return res;
    }
    auto lam = [&](double c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            acc += wt.w[i] * eval_deriv(loss, v[i], c);
        return acc / nn;
    };
    double pad = cfg.pad;
    double lo = v.front() - pad * range;
    double hi = v.back() + pad * range;
    double f_lo = lam(lo), f_hi = lam(hi);
    for (int retry = 0; retry < 2 && (f_lo > 0.0 || f_hi < 0.0); ++retry) {
        pad *= 2.0;
        lo = v.front() - pad * range;
        hi = v.back() + pad * range;
        f_lo = lam(lo);
        f_hi = lam(hi);
        res.bracket_expanded = true;
    }
    if (f_lo > 0.0 || f_hi < 0.0) {
        res.no_sign_change = true;
        res.value = std::abs(f_lo) <= std::abs(f_hi) ? lo : hi;
        return res;
    }
    for (int it = 0; it < cfg.max_iter; ++it) {
        const double scale = std::max({1.0, std::abs(lo), std::abs(hi)});
        if (hi - lo <= cfg.tol * scale) break;
        const double mid = 0.5 * (lo + hi);
        if (lam(mid) >= 0.0)
            hi = mid;
        else
            lo = mid;
    }
    res.value = 0.5 * (lo + hi);
    return res;
}

double estimate_mroot(const Sample& sample, const DistortionSpec& spec,
                      const LossSpec& loss, const RootConfig& cfg) {
    return estimate_mroot_detail(sample, spec, loss, cfg).value;
}

double estimate_grid(const Sample& sample, const DistortionSpec& spec,
                     const LossSpec& loss, const GridConfig& cfg) {
    check_sample(sample);
    if (!(cfg.step > 0.0) || cfg.lookahead < 1)
        throw std::invalid_argument("estimate_grid: step must be positive and "
                                    "lookahead at least 1");
    const auto& v = sample.values;
    const std::size_t n = v.size();
    const double nn = static_cast<double>(n);
    const Weights wt = tie_weights(v, spec);

    std::vector<double> grid;
    for (std::size_t k = 0;; ++k) {
        const double c = v.front() + static_cast<double>(k) * cfg.step;
        if (c > v.back()) break;
        grid.push_back(c);
    }
    const std::size_t m = grid.size();

    // Weighted objective on the grid, up to a constant shift: the reference
    // term at c = 0 is the same for every grid point and cancels out of the
    // forward slopes below.
    std::vector<double> obj(m);
    if (loss.kind == LossKind::CensoredQuantile) {
        // Prefix sums make the pinball part O(1) per grid point; the censor
        // correction does not depend on the observations.
        std::vector<double> wprefix(n + 1, 0.0), sprefix(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            wprefix[i + 1] = wprefix[i] + wt.w[i];
            sprefix[i + 1] = sprefix[i] + wt.w[i] * v[i];
        }
        const double delta = loss.delta;
        std::size_t k = 0;
        for (std::size_t g = 0; g < m; ++g) {
            const double c = grid[g];
            while (k < n && v[k] <= c) ++k;
            const double wlow = wprefix[k], slow = sprefix[k];
            const double pinball = delta * (sprefix[n] - slow - c * (wt.total - wlow)) +
                                   (1.0 - delta) * (c * wlow - slow);
            obj[g] = (pinball -
                      (1.0 - delta) * censor_cdf_integral(*loss.censor, c) *
                          wt.total) /
                     nn;
        }
    } else {
        for (std::size_t g = 0; g < m; ++g) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                acc += wt.w[i] * eval(loss, v[i], grid[g]);
            obj[g] = acc / nn;
        }
    }

    const auto look = static_cast<std::size_t>(cfg.lookahead);
    for (std::size_t g = 0; g + look < m; ++g) {
        bool ok = true;
        for (std::size_t j = 1; j <= look; ++j) {
            const double slope =
                (obj[g + j] - obj[g]) / (static_cast<double>(j) * cfg.step);
            if (!(slope > cfg.slope_threshold)) {
                ok = false;
                break;
            }
        }
        if (ok) return grid[g];
    }
    throw breakdown_error(
        "estimate_grid: no grid point clears the slope threshold over the "
        "lookahead window (sample range " +
        std::to_string(v.back() - v.front()) + ", step " + std::to_string(cfg.step) +
        ")");
}

}  // namespace gex
