#include "gex/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace gex {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

std::vector<std::string> split_token(const std::string& token) {
    std::vector<std::string> parts;
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
    return parts;
}

double parse_number(const std::string& s, const std::string& token) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("distribution token '" + token +
                                    "': cannot parse number '" + s + "'");
    }
}

}  // namespace

DistributionSpec DistributionSpec::normal(double mu, double sigma) {
    if (!(sigma > 0.0))
        throw std::domain_error("normal distribution: sd must be positive, got " +
                                std::to_string(sigma));
    DistributionSpec d;
    d.kind = DistKind::Normal;
    d.a = mu;
    d.b = sigma;
    return d;
}

DistributionSpec DistributionSpec::exponential(double rate) {
    if (!(rate > 0.0))
        throw std::domain_error("exponential distribution: rate must be positive, got " +
                                std::to_string(rate));
    DistributionSpec d;
    d.kind = DistKind::Exponential;
    d.a = rate;
    return d;
}

DistributionSpec DistributionSpec::uniform(double lo, double hi) {
    if (!(lo < hi))
        throw std::domain_error("uniform distribution: need lo < hi, got [" +
                                std::to_string(lo) + ", " + std::to_string(hi) + "]");
    DistributionSpec d;
    d.kind = DistKind::Uniform;
    d.a = lo;
    d.b = hi;
    return d;
}

DistributionSpec DistributionSpec::empirical(std::vector<double> vals) {
    if (vals.empty())
        throw std::invalid_argument("empirical distribution: support must be non-empty");
    std::sort(vals.begin(), vals.end());
    DistributionSpec d;
    d.kind = DistKind::Empirical;
    d.values = std::move(vals);
    return d;
}

DistributionSpec DistributionSpec::parse(const std::string& token) {
    const auto parts = split_token(token);
    const std::string& name = parts[0];
    if (name == "normal") {
        if (parts.size() == 1) return normal(0.0, 1.0);
        if (parts.size() == 3)
            return normal(parse_number(parts[1], token), parse_number(parts[2], token));
    } else if (name == "expo" || name == "exponential") {
        if (parts.size() == 1) return exponential(1.0);
        if (parts.size() == 2) return exponential(parse_number(parts[1], token));
    } else if (name == "uniform") {
        if (parts.size() == 3)
            return uniform(parse_number(parts[1], token), parse_number(parts[2], token));
    }
    throw std::invalid_argument("unknown distribution token '" + token +
                                "' (expected normal[:mu:sigma], expo[:rate], uniform:lo:hi)");
}

std::string DistributionSpec::token() const {
    std::ostringstream out;
    switch (kind) {
        case DistKind::Normal: out << "normal:" << a << ":" << b; break;
        case DistKind::Exponential: out << "expo:" << a; break;
        case DistKind::Uniform: out << "uniform:" << a << ":" << b; break;
        case DistKind::Empirical: out << "empirical[n=" << values.size() << "]"; break;
    }
    return out.str();
}

double DistributionSpec::cdf(double x) const {
    switch (kind) {
        case DistKind::Normal:
            return boost::math::cdf(kStdNormal, (x - a) / b);
        case DistKind::Exponential:
            return x <= 0.0 ? 0.0 : -std::expm1(-a * x);
        case DistKind::Uniform:
            if (x <= a) return 0.0;
            if (x >= b) return 1.0;
            return (x - a) / (b - a);
        case DistKind::Empirical: {
            auto it = std::upper_bound(values.begin(), values.end(), x);
            return static_cast<double>(it - values.begin()) /
                   static_cast<double>(values.size());
        }
    }
    throw std::logic_error("unreachable distribution kind");
}

double DistributionSpec::pdf(double x) const {
    switch (kind) {
        case DistKind::Normal: {
            const double z = (x - a) / b;
            return boost::math::pdf(kStdNormal, z) / b;
        }
        case DistKind::Exponential:
            return x < 0.0 ? 0.0 : a * std::exp(-a * x);
        case DistKind::Uniform:
            return (x < a || x > b) ? 0.0 : 1.0 / (b - a);
        case DistKind::Empirical:
            throw std::runtime_error("empirical distribution has no density");
    }
    throw std::logic_error("unreachable distribution kind");
}

double DistributionSpec::quantile(double p) const {
    if (kind == DistKind::Empirical) {
        if (!(p >= 0.0 && p <= 1.0))
            throw std::domain_error("quantile level must be in [0,1], got " +
                                    std::to_string(p));
        const auto n = static_cast<std::ptrdiff_t>(values.size());
        auto k = static_cast<std::ptrdiff_t>(std::ceil(p * static_cast<double>(n)));
        k = std::clamp<std::ptrdiff_t>(k, 1, n);
        return values[static_cast<std::size_t>(k - 1)];
    }
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("quantile level must be in (0,1), got " +
                                std::to_string(p));
    switch (kind) {
        case DistKind::Normal:
            return a + b * boost::math::quantile(kStdNormal, p);
        case DistKind::Exponential:
            return -std::log1p(-p) / a;
        case DistKind::Uniform:
            return a + (b - a) * p;
        default:
            throw std::logic_error("unreachable distribution kind");
    }
}

}  // namespace gex
