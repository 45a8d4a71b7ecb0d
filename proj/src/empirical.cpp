#include "gex/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "gex/common.hpp"

namespace gex {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

void sort_sample(std::vector<double>& v) {
    if (!std::is_sorted(v.begin(), v.end())) std::sort(v.begin(), v.end());
}

}  // namespace

Sample Sample::from_values(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("sample must be non-empty");
    sort_sample(v);
    Sample s;
    s.values = std::move(v);
    return s;
}

Sample Sample::from_censored(std::vector<double> v, std::vector<std::uint8_t> ev) {
    if (v.empty()) throw std::invalid_argument("sample must be non-empty");
    if (v.size() != ev.size())
        throw std::invalid_argument("censored sample: values and event flags differ "
                                    "in length");
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    Sample s;
    s.values.reserve(v.size());
    std::vector<std::uint8_t> sorted_ev;
    sorted_ev.reserve(v.size());
    for (std::size_t i : order) {
        s.values.push_back(v[i]);
        sorted_ev.push_back(ev[i] ? 1 : 0);
    }
    s.events = std::move(sorted_ev);
    return s;
}

double StepFunction::operator()(double x) const {
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return 0.0;
    return vs[static_cast<std::size_t>(it - xs.begin()) - 1];
}

StepFunction ecdf(const Sample& sample) {
    const auto& v = sample.values;
    const double denom = static_cast<double>(v.size()) + 1.0;
    StepFunction f;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const bool last_of_group = (k + 1 == v.size()) || (v[k + 1] != v[k]);
        if (last_of_group) {
            f.xs.push_back(v[k]);
            f.vs.push_back(static_cast<double>(k + 1) / denom);
        }
    }
    return f;
}

double empirical_quantile(const Sample& sample, double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("empirical quantile: level must be in (0,1), got " +
                                std::to_string(p));
    const auto& v = sample.values;
    const auto n = v.size();
    const double denom = static_cast<double>(n) + 1.0;
    if (p > static_cast<double>(n) / denom) return v.back();
    // Smallest k with p <= k/(n+1), comparing against the same rounded values
    // the caller can produce, so attained levels invert exactly.
    std::size_t lo = 1, hi = n;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (p <= static_cast<double>(mid) / denom)
            hi = mid;
        else
            lo = mid + 1;
    }
    return v[lo - 1];
}

StepFunction km_cdf(const Sample& sample) {
    const auto& v = sample.values;
    const auto n = v.size();
    std::vector<std::uint8_t> ev(n, 1);
    if (sample.events) ev = *sample.events;
    if (std::none_of(ev.begin(), ev.end(), [](std::uint8_t e) { return e != 0; }))
        throw breakdown_error("km_cdf: sample contains no observed events");

    StepFunction f;
    double surv = 1.0;
    double at_risk = static_cast<double>(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        double deaths = 0.0, leaving = 0.0;
        while (j < n && v[j] == v[i]) {
            leaving += 1.0;
            if (ev[j]) deaths += 1.0;
            ++j;
        }
        if (deaths > 0.0) {
            surv *= 1.0 - deaths / at_risk;
            f.xs.push_back(v[i]);
            f.vs.push_back(1.0 - surv);
        }
        at_risk -= leaving;
        i = j;
    }
    return f;
}

double km_quantile(const Sample& sample, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::domain_error("km quantile: level must be in (0,1), got " +
                                std::to_string(delta));
    const StepFunction f = km_cdf(sample);
    for (std::size_t i = 0; i < f.xs.size(); ++i)
        if (f.vs[i] >= delta) return f.xs[i];
    throw breakdown_error("km_quantile: product-limit curve never reaches level " +
                          std::to_string(delta));
}

double kde(const Sample& sample, double x) {
    const auto& v = sample.values;
    const auto n = v.size();
    if (n < 5)
        throw std::invalid_argument("kde: need at least 5 observations, got " +
                                    std::to_string(n));
    const double nn = static_cast<double>(n);
    double mean = 0.0;
    for (double y : v) mean += y;
    mean /= nn;
    double ss = 0.0;
    for (double y : v) ss += (y - mean) * (y - mean);
    const double sd = std::sqrt(ss / (nn - 1.0));
    Sample tmp;
    tmp.values = v;
    const double iqr =
        empirical_quantile(tmp, 0.75) - empirical_quantile(tmp, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = std::max(sd, iqr / 1.34);
    double h = 0.9 * spread * std::pow(nn, -0.2);

    // Widen to the m-th nearest neighbour of x so the window always holds
    // about 10% of the sample.
    const auto m = static_cast<std::size_t>(std::ceil(0.10 * nn));
    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = std::abs(v[i] - x);
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(m - 1),
                     dist.end());
    h = std::max(h, dist[m - 1]);
    if (h <= 0.0) h = 1e-12 * std::max(1.0, std::abs(x));

    double sum = 0.0;
    for (double y : v) {
        const double z = (x - y) / h;
        sum += std::exp(-0.5 * z * z);
    }
    return kInvSqrt2Pi * sum / (nn * h);
}

Sample load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open input file '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("input file '" + path + "' is empty");
    auto strip = [](std::string s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t'))
            s.pop_back();
        std::size_t b = 0;
        while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
        return s.substr(b);
    };
    const std::string header = strip(line);
    bool with_events;
    if (header == "value")
        with_events = false;
    else if (header == "value,event")
        with_events = true;
    else
        throw std::invalid_argument("input file '" + path +
                                    "': header must be 'value' or 'value,event', got '" +
                                    header + "'");
    std::vector<double> values;
    std::vector<std::uint8_t> events;
    std::size_t row = 1;
    auto parse_field = [&](const std::string& s) {
        try {
            std::size_t pos = 0;
            double val = std::stod(s, &pos);
            if (pos != s.size()) throw std::invalid_argument("trailing");
            return val;
        } catch (const std::exception&) {
            throw std::invalid_argument("input file '" + path + "' row " +
                                        std::to_string(row) +
                                        ": cannot parse '" + s + "' as a number");
        }
    };
    while (std::getline(in, line)) {
        ++row;
        const std::string body = strip(line);
        if (body.empty()) continue;
        const auto comma = body.find(',');
        if (with_events) {
            if (comma == std::string::npos)
                throw std::invalid_argument("input file '" + path + "' row " +
                                            std::to_string(row) +
                                            ": expected 'value,event'");
            values.push_back(parse_field(body.substr(0, comma)));
            const double e = parse_field(body.substr(comma + 1));
            if (e != 0.0 && e != 1.0)
                throw std::invalid_argument("input file '" + path + "' row " +
                                            std::to_string(row) +
                                            ": event flag must be 0 or 1");
            events.push_back(e == 1.0 ? 1 : 0);
        } else {
            if (comma != std::string::npos)
                throw std::invalid_argument("input file '" + path + "' row " +
                                            std::to_string(row) +
                                            ": unexpected second column");
            values.push_back(parse_field(body));
        }
    }
    if (values.empty())
        throw std::invalid_argument("input file '" + path + "' holds no data rows");
    return with_events ? Sample::from_censored(std::move(values), std::move(events))
                       : Sample::from_values(std::move(values));
}

}  // namespace gex
