#include "gex/loss.hpp"

#include <cassert>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gex/quadrature.hpp"

namespace gex {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::domain_error(msg);
}

}  // namespace

// Integral of the censoring CDF from 0 to c (signed when c < 0).
double censor_cdf_integral(const DistributionSpec& censor, double c) {
    if (c == 0.0) return 0.0;
    if (censor.kind == DistKind::Exponential) {
        if (c <= 0.0) return 0.0;
        const double rate = censor.a;
        return c - (-std::expm1(-rate * c)) / rate;
    }
    const double lo = std::min(0.0, c);
    const double hi = std::max(0.0, c);
    std::vector<double> kinks;
    if (censor.kind == DistKind::Uniform) kinks = {censor.a, censor.b};
    const double val = quad::over_edges([&](double s) { return censor.cdf(s); },
                                        quad::graded_edges(lo, hi, kinks, 6));
    return c > 0.0 ? val : -val;
}

namespace {

std::string kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::AbsoluteValue: return "abs";
        case LossKind::PowerP: return "power";
        case LossKind::Quantile: return "quantile";
        case LossKind::Expectile: return "expectile";
        case LossKind::Huber: return "huber";
        case LossKind::Esscher: return "esscher";
        case LossKind::Square: return "square";
        case LossKind::G1: return "g1";
        case LossKind::G2: return "g2";
        case LossKind::G3: return "g3";
        case LossKind::G4: return "g4";
        case LossKind::CensoredQuantile: return "cens-quantile";
        case LossKind::TrimmedMean: return "trimmed";
        case LossKind::MomentRatio: return "moment-ratio";
        case LossKind::SignedMeanRatio: return "signed-mean-ratio";
    }
    return "?";
}

// Decomposition of a derivative that rises to a peak at x* then falls:
// h1 follows l' up to the peak and freezes, h2 collects the descent.
MonotoneDecomposition peak_split(std::function<double(double)> lp, double peak) {
    MonotoneDecomposition out;
    out.h1 = [lp, peak](double x) { return lp(std::min(x, peak)); };
    out.h2 = [lp, peak](double x) { return lp(std::min(x, peak)) - lp(x); };
    return out;
}

}  // namespace

LossSpec LossSpec::absolute() { return LossSpec{LossKind::AbsoluteValue}; }

LossSpec LossSpec::power(double p) {
    require(p > 0.0, "power loss: exponent must be positive, got " + std::to_string(p));
    return LossSpec{LossKind::PowerP, p};
}

LossSpec LossSpec::quantile(double delta) {
    require(delta > 0.0 && delta < 1.0,
            "quantile loss: level must be in (0,1), got " + std::to_string(delta));
    return LossSpec{LossKind::Quantile, delta};
}

LossSpec LossSpec::expectile(double delta) {
    require(delta > 0.0 && delta < 1.0,
            "expectile loss: level must be in (0,1), got " + std::to_string(delta));
    return LossSpec{LossKind::Expectile, delta};
}

LossSpec LossSpec::huber(double delta) {
    require(delta > 0.0, "huber loss: threshold must be positive, got " +
                             std::to_string(delta));
    return LossSpec{LossKind::Huber, delta};
}

LossSpec LossSpec::esscher(double delta) {
    require(delta != 0.0, "esscher loss: tilt must be non-zero");
    return LossSpec{LossKind::Esscher, delta};
}

LossSpec LossSpec::square() { return LossSpec{LossKind::Square}; }

LossSpec LossSpec::g1() { return LossSpec{LossKind::G1}; }

LossSpec LossSpec::g2(double delta, double b) {
    require(delta > 0.0, "g2 loss: exponent must be positive, got " +
                             std::to_string(delta));
    return LossSpec{LossKind::G2, delta, b};
}

LossSpec LossSpec::g3() { return LossSpec{LossKind::G3}; }

LossSpec LossSpec::g4(double delta) {
    require(delta >= 0.0, "g4 loss: loading must be >= 0, got " +
                              std::to_string(delta));
    return LossSpec{LossKind::G4, delta};
}

LossSpec LossSpec::censored_quantile(double delta, DistributionSpec censor) {
    require(delta > 0.0 && delta < 1.0,
            "censored-quantile loss: level must be in (0,1), got " +
                std::to_string(delta));
    LossSpec s{LossKind::CensoredQuantile, delta};
    s.censor = std::move(censor);
    return s;
}

LossSpec LossSpec::trimmed_mean(double delta) {
    require(delta > 0.0, "trimmed-mean loss: window must be positive, got " +
                             std::to_string(delta));
    return LossSpec{LossKind::TrimmedMean, delta};
}

LossSpec LossSpec::moment_ratio() { return LossSpec{LossKind::MomentRatio}; }

LossSpec LossSpec::signed_mean_ratio() { return LossSpec{LossKind::SignedMeanRatio}; }

double eval(const LossSpec& spec, double x, double c) {
    switch (spec.kind) {
        case LossKind::AbsoluteValue:
            return std::abs(x - c);
        case LossKind::PowerP:
            return std::pow(std::abs(x - c), spec.delta);
        case LossKind::Quantile:
            return std::abs(spec.delta - (x <= c ? 1.0 : 0.0)) * std::abs(x - c);
        case LossKind::Expectile:
            return std::abs(spec.delta - (x <= c ? 1.0 : 0.0)) * (x - c) * (x - c);
        case LossKind::Huber: {
            const double r = std::abs(x - c);
            return r <= spec.delta ? 0.5 * r * r
                                   : spec.delta * (r - 0.5 * spec.delta);
        }
        case LossKind::Esscher:
            return (c - x) * (c - x) * std::exp(spec.delta * x);
        case LossKind::Square:
            return (x - c) * (x - c);
        case LossKind::G1:
            return -c * (x * x - x) + 0.5 * c * c;
        case LossKind::G2:
            return -c * std::pow(std::abs(x - spec.b), spec.delta) + 0.5 * c * c;
        case LossKind::G3:
            return (c < x ? x - c : 0.0) + c * x;
        case LossKind::G4:
            return 0.5 * c * c - (1.0 + spec.delta) * c * x;
        case LossKind::CensoredQuantile: {
            const double base =
                std::abs(spec.delta - (x <= c ? 1.0 : 0.0)) * std::abs(x - c);
            return base - (1.0 - spec.delta) * censor_cdf_integral(*spec.censor, c);
        }
        case LossKind::TrimmedMean: {
            const double r = x - c;
            return std::abs(r) < spec.delta ? r * r : spec.delta * spec.delta;
        }
        case LossKind::MomentRatio:
            return x * (c - x) * (c - x);
        case LossKind::SignedMeanRatio:
            return x >= 0.0 ? (1.0 - c) * (1.0 - c) * x : -c * c * x;
    }
    throw std::logic_error("unreachable loss kind");
}

double eval_deriv(const LossSpec& spec, double x, double c) {
    switch (spec.kind) {
        case LossKind::AbsoluteValue:
            return x <= c ? 1.0 : -1.0;
        case LossKind::PowerP: {
            const double p = spec.delta;
            if (x == c) return p > 1.0 ? 0.0 : (p == 1.0 ? 1.0 : 0.0);
            return p * std::pow(std::abs(x - c), p - 1.0) * (x <= c ? 1.0 : -1.0);
        }
        case LossKind::Quantile:
            return (x <= c ? 1.0 : 0.0) - spec.delta;
        case LossKind::Expectile:
            return x <= c ? 2.0 * (1.0 - spec.delta) * (c - x)
                          : -2.0 * spec.delta * (x - c);
        case LossKind::Huber: {
            const double r = x - c;
            if (std::abs(r) <= spec.delta) return -r;
            return r > 0.0 ? -spec.delta : spec.delta;
        }
        case LossKind::Esscher:
            return 2.0 * (c - x) * std::exp(spec.delta * x);
        case LossKind::Square:
            return -2.0 * (x - c);
        case LossKind::G1:
            return -(x * x - x) + c;
        case LossKind::G2:
            return -std::pow(std::abs(x - spec.b), spec.delta) + c;
        case LossKind::G3:
            return (c < x ? -1.0 : 0.0) + x;
        case LossKind::G4:
            return c - (1.0 + spec.delta) * x;
        case LossKind::CensoredQuantile: {
            const double fc = spec.censor->cdf(c);
            return x <= c ? (1.0 - spec.delta) * (1.0 - fc)
                          : -(spec.delta + (1.0 - spec.delta) * fc);
        }
        case LossKind::TrimmedMean: {
            const double r = x - c;
            return std::abs(r) < spec.delta ? -2.0 * r : 0.0;
        }
        case LossKind::MomentRatio:
            return 2.0 * x * (c - x);
        case LossKind::SignedMeanRatio:
            return x >= 0.0 ? -2.0 * (1.0 - c) * x : -2.0 * c * x;
    }
    throw std::logic_error("unreachable loss kind");
}

MonotoneDecomposition decompose(const LossSpec& spec, double c) {
    if (!classify(spec).convex)
        throw std::invalid_argument("decompose: loss '" + kind_name(spec.kind) +
                                    "' is not convex in c; no monotone split of "
                                    "its derivative is provided");
    MonotoneDecomposition out;
    auto zero = [](double) { return 0.0; };
    const double delta = spec.delta;
    const double b = spec.b;
    switch (spec.kind) {
        case LossKind::AbsoluteValue:
            out.h1 = zero;
            out.h2 = [c](double x) { return x <= c ? -1.0 : 1.0; };
            out.measure.atoms = {{c, 2.0}};
            return out;
        case LossKind::Quantile:
            out.h1 = zero;
            out.h2 = [spec, c](double x) { return spec.delta - (x <= c ? 1.0 : 0.0); };
            out.measure.atoms = {{c, 1.0}};
            return out;
        case LossKind::Expectile:
            out.h1 = zero;
            out.h2 = [spec, c](double x) { return -eval_deriv(spec, x, c); };
            out.measure.has_density = true;
            out.measure.density = [delta, c](double x) {
                return x < c ? 2.0 * (1.0 - delta) : 2.0 * delta;
            };
            out.measure.breakpoints = {c};
            return out;
        case LossKind::Square:
            out.h1 = zero;
            out.h2 = [c](double x) { return 2.0 * (x - c); };
            out.measure.has_density = true;
            out.measure.density = [](double) { return 2.0; };
            return out;
        case LossKind::PowerP: {
            const double p = spec.delta;
            if (p == 1.0) return decompose(LossSpec::absolute(), c);
            out.h1 = zero;
            out.h2 = [spec, c](double x) { return -eval_deriv(spec, x, c); };
            out.measure.has_density = true;
            out.measure.density = [p, c](double x) {
                const double r = std::abs(x - c);
                if (r == 0.0) return 0.0;
                return p * (p - 1.0) * std::pow(r, p - 2.0);
            };
            out.measure.breakpoints = {c};
            return out;
        }
        case LossKind::Huber:
            out.h1 = zero;
            out.h2 = [spec, c](double x) { return -eval_deriv(spec, x, c); };
            out.measure.has_density = true;
            out.measure.density = [delta, c](double x) {
                return std::abs(x - c) < delta ? 1.0 : 0.0;
            };
            out.measure.breakpoints = {c - delta, c + delta};
            return out;
        case LossKind::Esscher: {
            auto lp = [spec, c](double x) { return eval_deriv(spec, x, c); };
            out = peak_split(lp, c - 1.0 / delta);
            out.measure.has_density = true;
            out.measure.density = [delta, c](double x) {
                return 2.0 * std::exp(delta * x) * (1.0 + delta * (x - c));
            };
            return out;
        }
        case LossKind::G1: {
            auto lp = [spec, c](double x) { return eval_deriv(spec, x, c); };
            out = peak_split(lp, 0.5);
            out.measure.has_density = true;
            out.measure.density = [](double x) { return 2.0 * x - 1.0; };
            return out;
        }
        case LossKind::G2:
            out.h1 = [spec, c](double x) {
                return x <= spec.b ? c - std::pow(spec.b - x, spec.delta) : c;
            };
            out.h2 = [spec](double x) {
                return x > spec.b ? std::pow(x - spec.b, spec.delta) : 0.0;
            };
            out.measure.has_density = true;
            out.measure.density = [delta, b](double x) {
                const double r = std::abs(x - b);
                if (r == 0.0) return 0.0;
                return delta * std::pow(r, delta - 1.0) * (x > b ? 1.0 : -1.0);
            };
            out.measure.breakpoints = {b};
            return out;
        case LossKind::G3:
            out.h1 = [](double x) { return x; };
            out.h2 = [c](double x) { return c < x ? 1.0 : 0.0; };
            out.measure.atoms = {{c, 1.0}};
            out.measure.has_density = true;
            out.measure.density = [](double) { return -1.0; };
            return out;
        case LossKind::G4:
            out.h1 = zero;
            out.h2 = [spec, c](double x) { return (1.0 + spec.delta) * x - c; };
            out.measure.has_density = true;
            out.measure.density = [delta](double) { return 1.0 + delta; };
            return out;
        case LossKind::MomentRatio: {
            auto lp = [spec, c](double x) { return eval_deriv(spec, x, c); };
            out = peak_split(lp, 0.5 * c);
            out.measure.has_density = true;
            out.measure.density = [c](double x) { return 4.0 * x - 2.0 * c; };
            return out;
        }
        case LossKind::SignedMeanRatio: {
            auto lp = [spec, c](double x) { return eval_deriv(spec, x, c); };
            if (c < 0.0) {
                out = peak_split(lp, 0.0);
            } else if (c > 1.0) {
                // valley at 0: descent first, then rise
                out.h1 = [lp](double x) { return x <= 0.0 ? 0.0 : lp(x) - lp(0.0); };
                out.h2 = [lp](double x) { return -lp(std::min(x, 0.0)); };
            } else {
                out.h1 = zero;
                out.h2 = [lp](double x) { return -lp(x); };
            }
            out.measure.has_density = true;
            out.measure.density = [c](double x) {
                return x < 0.0 ? 2.0 * c : 2.0 * (1.0 - c);
            };
            out.measure.breakpoints = {0.0};
            return out;
        }
        default:
            throw std::logic_error("decompose: unhandled convex loss kind");
    }
}

PropertyFlags classify(const LossSpec& spec) {
    switch (spec.kind) {
        case LossKind::AbsoluteValue: return {true, true, 1.0, true};
        case LossKind::PowerP: return {true, true, spec.delta, spec.delta >= 1.0};
        case LossKind::Quantile: return {false, true, 1.0, true};
        case LossKind::Expectile: return {false, true, 2.0, true};
        case LossKind::Huber: return {true, true, std::nullopt, true};
        case LossKind::Esscher: return {false, false, std::nullopt, true};
        case LossKind::Square: return {true, true, 2.0, true};
        case LossKind::G1: return {false, false, std::nullopt, true};
        case LossKind::G2: return {false, false, std::nullopt, true};
        case LossKind::G3: return {false, false, std::nullopt, true};
        case LossKind::G4: return {true, false, 2.0, true};
        case LossKind::CensoredQuantile: return {false, false, std::nullopt, false};
        case LossKind::TrimmedMean: return {true, true, std::nullopt, false};
        case LossKind::MomentRatio: return {false, false, 3.0, true};
        case LossKind::SignedMeanRatio: return {false, false, std::nullopt, true};
    }
    throw std::logic_error("unreachable loss kind");
}

std::vector<double> derivative_kinks(const LossSpec& spec, double c) {
    switch (spec.kind) {
        case LossKind::AbsoluteValue:
        case LossKind::Quantile:
        case LossKind::Expectile:
        case LossKind::G3:
        case LossKind::CensoredQuantile:
        case LossKind::PowerP:
            return {c};
        case LossKind::Huber:
        case LossKind::TrimmedMean:
            return {c - spec.delta, c + spec.delta};
        case LossKind::G2:
            return {spec.b};
        case LossKind::SignedMeanRatio:
            return {0.0};
        default:
            return {};
    }
}

LossSpec parse_loss(const std::string& token) {
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
            throw std::invalid_argument("loss token '" + token +
                                        "': cannot parse parameter");
        }
    };
    const std::string& name = parts[0];
    try {
        if (name == "abs" && parts.size() == 1) return LossSpec::absolute();
        if (name == "square" && parts.size() == 1) return LossSpec::square();
        if (name == "power" && parts.size() == 2) return LossSpec::power(num(1));
        if (name == "quantile" && parts.size() == 2) return LossSpec::quantile(num(1));
        if (name == "expectile" && parts.size() == 2)
            return LossSpec::expectile(num(1));
        if (name == "huber" && parts.size() == 2) return LossSpec::huber(num(1));
        if (name == "esscher" && parts.size() == 2) return LossSpec::esscher(num(1));
        if (name == "g1" && parts.size() == 1) return LossSpec::g1();
        if (name == "g2" && parts.size() == 3) return LossSpec::g2(num(1), num(2));
        if (name == "g3" && parts.size() == 1) return LossSpec::g3();
        if (name == "g4" && parts.size() == 2) return LossSpec::g4(num(1));
        if (name == "cens-quantile" && parts.size() >= 3) {
            std::string dist_token = parts[2];
            for (std::size_t i = 3; i < parts.size(); ++i)
                dist_token += ":" + parts[i];
            return LossSpec::censored_quantile(num(1),
                                               DistributionSpec::parse(dist_token));
        }
        if (name == "trimmed" && parts.size() == 2)
            return LossSpec::trimmed_mean(num(1));
        if (name == "moment-ratio" && parts.size() == 1)
            return LossSpec::moment_ratio();
        if (name == "signed-mean-ratio" && parts.size() == 1)
            return LossSpec::signed_mean_ratio();
    } catch (const std::domain_error& e) {
        throw std::invalid_argument("loss token '" + token + "': " + e.what());
    }
    throw std::invalid_argument("unknown loss token '" + token + "'");
}

std::string loss_token(const LossSpec& spec) {
    std::ostringstream out;
    out << kind_name(spec.kind);
    switch (spec.kind) {
        case LossKind::PowerP:
        case LossKind::Quantile:
        case LossKind::Expectile:
        case LossKind::Huber:
        case LossKind::Esscher:
        case LossKind::G4:
        case LossKind::TrimmedMean:
            out << ":" << spec.delta;
            break;
        case LossKind::G2:
            out << ":" << spec.delta << ":" << spec.b;
            break;
        case LossKind::CensoredQuantile:
            out << ":" << spec.delta << ":" << spec.censor->token();
            break;
        default:
            break;
    }
    return out.str();
}

}  // namespace gex
