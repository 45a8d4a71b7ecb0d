#include "gex/distortion.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "gex/quadrature.hpp"
#include "gex/rng.hpp"

namespace gex {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::domain_error(msg);
}

// Exponent making the median of the power family sit at tau.
double extremile_r(double tau) { return std::log(0.5) / std::log(tau); }
double extremile_s(double tau) { return std::log(0.5) / std::log(1.0 - tau); }

struct UserDensityTable {
    std::vector<double> u;     // knot locations, u.front()==0, u.back()==1
    std::vector<double> w;     // normalized density at the knots
    std::vector<double> cum;   // CDF at the knots, cum.front()==0, back()==1
};

UserDensityTable user_table(const DistortionSpec& spec) {
    UserDensityTable t;
    const auto& knots = spec.knots;
    t.u.reserve(knots.size());
    t.w.reserve(knots.size());
    for (const auto& [u, w] : knots) {
        t.u.push_back(u);
        t.w.push_back(w);
    }
    double mass = 0.0;
    std::vector<double> cum(t.u.size(), 0.0);
    for (std::size_t i = 0; i + 1 < t.u.size(); ++i) {
        mass += 0.5 * (t.w[i] + t.w[i + 1]) * (t.u[i + 1] - t.u[i]);
        cum[i + 1] = mass;
    }
    for (auto& w : t.w) w /= mass;
    for (auto& c : cum) c /= mass;
    cum.back() = 1.0;
    t.cum = std::move(cum);
    return t;
}

double user_cdf(const DistortionSpec& spec, double u) {
    const UserDensityTable t = user_table(spec);
    auto it = std::upper_bound(t.u.begin(), t.u.end(), u);
    if (it == t.u.begin()) return 0.0;
    const auto i = static_cast<std::size_t>(it - t.u.begin()) - 1;
    if (i + 1 >= t.u.size()) return 1.0;
    const double h = u - t.u[i];
    const double seg = t.u[i + 1] - t.u[i];
    const double slope = (t.w[i + 1] - t.w[i]) / seg;
    return t.cum[i] + t.w[i] * h + 0.5 * slope * h * h;
}

double user_density(const DistortionSpec& spec, double u) {
    const UserDensityTable t = user_table(spec);
    auto it = std::upper_bound(t.u.begin(), t.u.end(), u);
    if (it == t.u.begin()) return t.w.front();
    auto i = static_cast<std::size_t>(it - t.u.begin()) - 1;
    if (i + 1 >= t.u.size()) return t.w.back();
    const double seg = t.u[i + 1] - t.u[i];
    const double frac = (u - t.u[i]) / seg;
    return t.w[i] + frac * (t.w[i + 1] - t.w[i]);
}

// D(u) of the base (non-dual) spec.
double base_cdf(const DistortionSpec& spec, double u) {
    if (u == 0.0) return 0.0;
    if (u == 1.0) return 1.0;
    switch (spec.kind) {
        case DistortionKind::Uniform:
            return u;
        case DistortionKind::ExtremileK: {
            const double tau = spec.a;
            if (tau == 0.5) return u;
            if (tau > 0.5) return std::pow(u, extremile_r(tau));
            return 1.0 - std::pow(1.0 - u, extremile_s(tau));
        }
        case DistortionKind::Beta:
            return boost::math::ibeta(spec.a, spec.b, u);
        case DistortionKind::Kumaraswamy:
            return 1.0 - std::pow(1.0 - std::pow(u, spec.a), spec.b);
        case DistortionKind::ExpectedShortfall:
            return u <= spec.a ? 0.0 : (u - spec.a) / (1.0 - spec.a);
        case DistortionKind::Wang:
            return boost::math::cdf(kStdNormal,
                                    boost::math::quantile(kStdNormal, u) - spec.a);
        case DistortionKind::PropHazard:
            return 1.0 - std::pow(1.0 - u, 1.0 / spec.a);
        case DistortionKind::MinVar:
            return std::pow(u, spec.a + 1.0);
        case DistortionKind::MaxVar:
            return 1.0 - std::pow(1.0 - u, 1.0 / (spec.a + 1.0));
        case DistortionKind::MinMaxVar:
            return std::pow(1.0 - std::pow(1.0 - u, 1.0 / (spec.a + 1.0)),
                            spec.a + 1.0);
        case DistortionKind::MaxMinVar:
            return 1.0 - std::pow(1.0 - std::pow(u, spec.a + 1.0),
                                  1.0 / (spec.a + 1.0));
        case DistortionKind::UserDensity:
            return user_cdf(spec, u);
    }
    throw std::logic_error("unreachable distortion kind");
}

double base_density(const DistortionSpec& spec, double u) {
    switch (spec.kind) {
        case DistortionKind::Uniform:
            return 1.0;
        case DistortionKind::ExtremileK: {
            const double tau = spec.a;
            if (tau == 0.5) return 1.0;
            if (tau > 0.5) {
                const double r = extremile_r(tau);
                return r * std::pow(u, r - 1.0);
            }
            const double s = extremile_s(tau);
            return s * std::pow(1.0 - u, s - 1.0);
        }
        case DistortionKind::Beta:
            return boost::math::ibeta_derivative(spec.a, spec.b, u);
        case DistortionKind::Kumaraswamy: {
            const double ua = std::pow(u, spec.a);
            return spec.a * spec.b * std::pow(u, spec.a - 1.0) *
                   std::pow(1.0 - ua, spec.b - 1.0);
        }
        case DistortionKind::ExpectedShortfall:
            return u > spec.a ? 1.0 / (1.0 - spec.a) : 0.0;
        case DistortionKind::Wang: {
            const double z = boost::math::quantile(kStdNormal, u);
            return std::exp(spec.a * z - 0.5 * spec.a * spec.a);
        }
        case DistortionKind::PropHazard:
            return (1.0 / spec.a) * std::pow(1.0 - u, 1.0 / spec.a - 1.0);
        case DistortionKind::MinVar:
            return (spec.a + 1.0) * std::pow(u, spec.a);
        case DistortionKind::MaxVar:
            return (1.0 / (spec.a + 1.0)) *
                   std::pow(1.0 - u, 1.0 / (spec.a + 1.0) - 1.0);
        case DistortionKind::MinMaxVar: {
            const double q = 1.0 / (spec.a + 1.0);
            return std::pow(1.0 - std::pow(1.0 - u, q), spec.a) *
                   std::pow(1.0 - u, -spec.a * q);
        }
        case DistortionKind::MaxMinVar: {
            const double q = 1.0 / (spec.a + 1.0);
            return std::pow(u, spec.a) *
                   std::pow(1.0 - std::pow(u, spec.a + 1.0), -spec.a * q);
        }
        case DistortionKind::UserDensity:
            return user_density(spec, u);
    }
    throw std::logic_error("unreachable distortion kind");
}

// Closed-form inf{u : D(u) >= p} where available; NaN signals "bisect".
double base_inverse_closed(const DistortionSpec& spec, double p) {
    switch (spec.kind) {
        case DistortionKind::Uniform:
            return p;
        case DistortionKind::ExtremileK: {
            const double tau = spec.a;
            if (tau == 0.5) return p;
            if (tau > 0.5) return std::pow(p, 1.0 / extremile_r(tau));
            return 1.0 - std::pow(1.0 - p, 1.0 / extremile_s(tau));
        }
        case DistortionKind::ExpectedShortfall:
            return spec.a + p * (1.0 - spec.a);
        case DistortionKind::MinVar:
            return std::pow(p, 1.0 / (spec.a + 1.0));
        case DistortionKind::MaxVar:
            return 1.0 - std::pow(1.0 - p, spec.a + 1.0);
        case DistortionKind::PropHazard:
            return 1.0 - std::pow(1.0 - p, spec.a);
        default:
            return std::numeric_limits<double>::quiet_NaN();
    }
}

double base_inverse(const DistortionSpec& spec, double p) {
    if (p == 0.0) return 0.0;
    if (p == 1.0 && spec.kind != DistortionKind::ExpectedShortfall) return 1.0;
    const double closed = base_inverse_closed(spec, p);
    if (!std::isnan(closed)) return closed;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (base_cdf(spec, mid) >= p)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> base_breakpoints(const DistortionSpec& spec) {
    switch (spec.kind) {
        case DistortionKind::ExpectedShortfall:
            return {spec.a};
        case DistortionKind::UserDensity: {
            std::vector<double> out;
            for (const auto& [u, w] : spec.knots)
                if (u > 0.0 && u < 1.0) out.push_back(u);
            return out;
        }
        default:
            return {};
    }
}

// Tail integral of the reweighted law, integrating 1 - D(F(y)) above zero
// and -D(F(y)) below; used as the independent cross-check of the quantile
// form inside distortion_risk_mean.
double risk_mean_tail_form(const DistortionSpec& spec, const DistributionSpec& dist) {
    const double eps = 1e-12;
    const double lo = dist.quantile(eps);
    const double hi = dist.quantile(1.0 - eps);
    std::vector<double> breaks;
    for (double ub : density_breakpoints(spec)) {
        if (ub > eps && ub < 1.0 - eps) breaks.push_back(dist.quantile(ub));
    }
    breaks.push_back(0.0);
    double total = 0.0;
    if (lo < 0.0) {
        const double top = std::min(hi, 0.0);
        std::vector<double> b;
        for (double t : breaks)
            if (t > lo && t < top) b.push_back(t);
        const auto edges = quad::graded_edges(lo, top, b);
        total += quad::over_edges(
            [&](double y) { return -eval_cdf(spec, dist.cdf(y)); }, edges);
    }
    if (hi > 0.0) {
        const double bottom = std::max(lo, 0.0);
        std::vector<double> b;
        for (double t : breaks)
            if (t > bottom && t < hi) b.push_back(t);
        const auto edges = quad::graded_edges(bottom, hi, b);
        total += quad::over_edges(
            [&](double y) { return 1.0 - eval_cdf(spec, dist.cdf(y)); }, edges);
    }
    return total;
}

double risk_mean_quantile_form(const DistortionSpec& spec,
                               const DistributionSpec& dist, int side_panels) {
    const double eps = 1e-13;
    const auto edges = quad::graded_edges(eps, 1.0 - eps, density_breakpoints(spec),
                                          side_panels);
    return quad::over_edges(
        [&](double u) { return dist.quantile(u) * eval_density(spec, u); }, edges);
}

}  // namespace

DistortionSpec DistortionSpec::uniform() { return DistortionSpec{}; }

DistortionSpec DistortionSpec::extremile(double tau) {
    require(tau > 0.0 && tau < 1.0,
            "extremile distortion: tau must be in (0,1), got " + std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::ExtremileK;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::beta(double a, double b) {
    require(a > 0.0 && b > 0.0, "beta distortion: shapes must be positive");
    DistortionSpec s;
    s.kind = DistortionKind::Beta;
    s.a = a;
    s.b = b;
    return s;
}

DistortionSpec DistortionSpec::kumaraswamy(double a, double b) {
    require(a > 0.0 && b > 0.0, "kumaraswamy distortion: shapes must be positive");
    DistortionSpec s;
    s.kind = DistortionKind::Kumaraswamy;
    s.a = a;
    s.b = b;
    return s;
}

DistortionSpec DistortionSpec::expected_shortfall(double tau) {
    require(tau >= 0.0 && tau < 1.0,
            "expected-shortfall distortion: tau must be in [0,1), got " +
                std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::ExpectedShortfall;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::wang(double tau) {
    DistortionSpec s;
    s.kind = DistortionKind::Wang;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::prop_hazard(double tau) {
    require(tau >= 1.0, "proportional-hazard distortion: tau must be >= 1, got " +
                            std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::PropHazard;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::min_var(double tau) {
    require(tau >= 0.0, "minvar distortion: tau must be >= 0, got " +
                            std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::MinVar;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::max_var(double tau) {
    require(tau >= 0.0, "maxvar distortion: tau must be >= 0, got " +
                            std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::MaxVar;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::min_max_var(double tau) {
    require(tau >= 0.0, "minmaxvar distortion: tau must be >= 0, got " +
                            std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::MinMaxVar;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::max_min_var(double tau) {
    require(tau >= 0.0, "maxminvar distortion: tau must be >= 0, got " +
                            std::to_string(tau));
    DistortionSpec s;
    s.kind = DistortionKind::MaxMinVar;
    s.a = tau;
    return s;
}

DistortionSpec DistortionSpec::user_density(
    std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2)
        throw std::domain_error("user-density distortion: need at least 2 knots");
    if (knots.front().first != 0.0 || knots.back().first != 1.0)
        throw std::domain_error(
            "user-density distortion: knots must start at u=0 and end at u=1");
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
        if (!(knots[i + 1].first > knots[i].first))
            throw std::domain_error(
                "user-density distortion: knot locations must be strictly increasing");
        if (knots[i].second < 0.0 || knots[i + 1].second < 0.0)
            throw std::domain_error(
                "user-density distortion: weights must be non-negative");
        mass += 0.5 * (knots[i].second + knots[i + 1].second) *
                (knots[i + 1].first - knots[i].first);
    }
    if (!(mass > 0.0))
        throw std::domain_error("user-density distortion: total mass must be positive");
    DistortionSpec s;
    s.kind = DistortionKind::UserDensity;
    s.knots = std::move(knots);
    return s;
}

double eval_cdf(const DistortionSpec& spec, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("distortion cdf: u must be in [0,1], got " +
                                std::to_string(u));
    if (spec.dual_flag) return 1.0 - base_cdf(spec, 1.0 - u);
    return base_cdf(spec, u);
}

double eval_density(const DistortionSpec& spec, double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::domain_error("distortion density: u must be in (0,1), got " +
                                std::to_string(u));
    if (spec.dual_flag) return base_density(spec, 1.0 - u);
    return base_density(spec, u);
}

DistortionSpec dual(const DistortionSpec& spec) {
    DistortionSpec out = spec;
    out.dual_flag = !out.dual_flag;
    return out;
}

double distortion_inverse(const DistortionSpec& spec, double p) {
    if (!(p >= 0.0 && p <= 1.0))
        throw std::domain_error("distortion inverse: p must be in [0,1], got " +
                                std::to_string(p));
    if (spec.dual_flag) return 1.0 - base_inverse(spec, 1.0 - p);
    return base_inverse(spec, p);
}

double distorted_quantile(const DistortionSpec& spec, const DistributionSpec& dist,
                          double p) {
    return dist.quantile(distortion_inverse(spec, p));
}

double distortion_risk_mean(const DistortionSpec& spec, const DistributionSpec& dist) {
    const double coarse = risk_mean_quantile_form(spec, dist, 30);
    const double fine = risk_mean_quantile_form(spec, dist, 40);
    const double scale = std::max(1.0, std::abs(fine));
    if (std::abs(fine - coarse) > 1e-4 * scale)
        throw std::runtime_error(
            "distortion_risk_mean: quantile-form quadrature did not converge "
            "(refinement moved by " +
            std::to_string(std::abs(fine - coarse)) + ")");
    const double tail = risk_mean_tail_form(spec, dist);
    if (std::abs(fine - tail) > 1e-6 * scale)
        throw std::runtime_error(
            "distortion_risk_mean: quantile form " + std::to_string(fine) +
            " and tail form " + std::to_string(tail) + " disagree");
    return fine;
}

std::vector<double> density_breakpoints(const DistortionSpec& spec) {
    std::vector<double> base = base_breakpoints(spec);
    if (spec.dual_flag)
        for (auto& u : base) u = 1.0 - u;
    std::sort(base.begin(), base.end());
    return base;
}

Sample sample_distorted(const DistortionSpec& spec, const DistributionSpec& dist,
                        int n, std::uint64_t seed) {
    if (n <= 0)
        throw std::invalid_argument("sample_distorted: n must be positive, got " +
                                    std::to_string(n));
    Rng rng(seed, 0);
    std::vector<double> draws(static_cast<std::size_t>(n));
    for (auto& x : draws) x = dist.quantile(distortion_inverse(spec, rng.uniform01()));
    return Sample::from_values(std::move(draws));
}

DistortionSpec parse_distortion(const std::string& token) {
    if (token.rfind("dual:", 0) == 0)
        return dual(parse_distortion(token.substr(5)));
    std::vector<std::string> parts;
    {
        std::string cur;
        for (char ch : token) {
            if (ch == ':') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(ch);
            }
        }
        parts.push_back(cur);
    }
    auto num = [&](std::size_t i) {
        try {
            std::size_t pos = 0;
            double v = std::stod(parts.at(i), &pos);
            if (pos != parts[i].size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("distortion token '" + token +
                                        "': cannot parse parameter");
        }
    };
    const std::string& name = parts[0];
    try {
        if (name == "uniform" && parts.size() == 1) return DistortionSpec::uniform();
        if (name == "extremile" && parts.size() == 2)
            return DistortionSpec::extremile(num(1));
        if (name == "beta" && parts.size() == 3)
            return DistortionSpec::beta(num(1), num(2));
        if (name == "kumaraswamy" && parts.size() == 3)
            return DistortionSpec::kumaraswamy(num(1), num(2));
        if (name == "es" && parts.size() == 2)
            return DistortionSpec::expected_shortfall(num(1));
        if (name == "wang" && parts.size() == 2) return DistortionSpec::wang(num(1));
        if (name == "prophazard" && parts.size() == 2)
            return DistortionSpec::prop_hazard(num(1));
        if (name == "minvar" && parts.size() == 2)
            return DistortionSpec::min_var(num(1));
        if (name == "maxvar" && parts.size() == 2)
            return DistortionSpec::max_var(num(1));
        if (name == "minmaxvar" && parts.size() == 2)
            return DistortionSpec::min_max_var(num(1));
        if (name == "maxminvar" && parts.size() == 2)
            return DistortionSpec::max_min_var(num(1));
    } catch (const std::domain_error& e) {
        throw std::invalid_argument("distortion token '" + token + "': " + e.what());
    }
    throw std::invalid_argument("unknown distortion token '" + token + "'");
}

std::string distortion_token(const DistortionSpec& spec) {
    std::ostringstream out;
    if (spec.dual_flag) out << "dual:";
    switch (spec.kind) {
        case DistortionKind::Uniform: out << "uniform"; break;
        case DistortionKind::ExtremileK: out << "extremile:" << spec.a; break;
        case DistortionKind::Beta: out << "beta:" << spec.a << ":" << spec.b; break;
        case DistortionKind::Kumaraswamy:
            out << "kumaraswamy:" << spec.a << ":" << spec.b;
            break;
        case DistortionKind::ExpectedShortfall: out << "es:" << spec.a; break;
        case DistortionKind::Wang: out << "wang:" << spec.a; break;
        case DistortionKind::PropHazard: out << "prophazard:" << spec.a; break;
        case DistortionKind::MinVar: out << "minvar:" << spec.a; break;
        case DistortionKind::MaxVar: out << "maxvar:" << spec.a; break;
        case DistortionKind::MinMaxVar: out << "minmaxvar:" << spec.a; break;
        case DistortionKind::MaxMinVar: out << "maxminvar:" << spec.a; break;
        case DistortionKind::UserDensity:
            out << "userdensity[" << spec.knots.size() << " knots]";
            break;
    }
    return out.str();
}

}  // namespace gex
