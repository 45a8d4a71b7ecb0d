#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace gex::quad {

// 16-point Gauss-Legendre rule on [-1,1], positive half; nodes mirror.
inline constexpr std::array<double, 8> kNodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kWeights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

template <class F>
double panel(F&& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < kNodes.size(); ++i) {
        const double dx = half * kNodes[i];
        sum += kWeights[i] * (f(mid - dx) + f(mid + dx));
    }
    return half * sum;
}

template <class F>
double over_edges(F&& f, const std::vector<double>& edges) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        total += panel(f, edges[i], edges[i + 1]);
    return total;
}

// Panel edges for one interval: widths grow geometrically from both ends
// toward the middle, starting at (b-a)/2^side_panels. Resolves integrable
// endpoint singularities without wasting panels on the smooth interior.
inline void grade_segment(double a, double b, int side_panels,
                          std::vector<double>& out) {
    assert(b > a && side_panels >= 1);
    const double width = b - a;
    double wl = std::ldexp(width, -side_panels);
    double wr = wl;
    double x = a;
    double y = b;
    out.push_back(a);
    std::vector<double> right;
    while (x + wl < y - wr) {
        if (x - a <= b - y) {
            x += wl;
            out.push_back(x);
            wl *= 2.0;
        } else {
            y -= wr;
            right.push_back(y);
            wr *= 2.0;
        }
    }
    for (auto it = right.rbegin(); it != right.rend(); ++it) out.push_back(*it);
    out.push_back(b);
}

// Edges over [a,b] split at the interior breakpoints, each sub-segment graded.
inline std::vector<double> graded_edges(double a, double b,
                                        std::vector<double> breaks,
                                        int side_panels = 37) {
    std::vector<double> cuts;
    cuts.push_back(a);
    std::sort(breaks.begin(), breaks.end());
    for (double t : breaks)
        if (t > a && t < b && (cuts.empty() || t > cuts.back())) cuts.push_back(t);
    cuts.push_back(b);
    std::vector<double> edges;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
        grade_segment(cuts[i], cuts[i + 1], side_panels, edges);
    // grade_segment repeats interior cut points; drop duplicates.
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

// Integral of g(u) * u(1 - v) * 2 over the ordered region u < v plus the
// symmetric diagonal contribution; equals the double integral of
// g(u) g(v) (min(u,v) - u v) over the square spanned by `edges`.
// The kernel is kept inside every panel pair: the two univariate factors
// u g(u) and (1-v) g(v) may diverge individually at the interval ends, the
// paired product never does.
template <class G>
double min_cov_square(G&& g, const std::vector<double>& edges) {
    const std::size_t m = edges.size() - 1;
    std::vector<double> low(m), high(m);
    for (std::size_t i = 0; i < m; ++i) {
        low[i] = panel([&](double u) { return u * g(u); }, edges[i], edges[i + 1]);
        high[i] = panel([&](double v) { return (1.0 - v) * g(v); }, edges[i], edges[i + 1]);
    }
    std::vector<double> suffix_high(m + 1, 0.0);
    for (std::size_t i = m; i-- > 0;) suffix_high[i] = suffix_high[i + 1] + high[i];

    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += 2.0 * low[i] * suffix_high[i + 1];

    // Diagonal panels: outer node v, inner integrals on both sides of v.
    for (std::size_t i = 0; i < m; ++i) {
        const double a = edges[i];
        const double b = edges[i + 1];
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        double acc = 0.0;
        for (std::size_t k = 0; k < kNodes.size(); ++k) {
            for (double v : {mid - half * kNodes[k], mid + half * kNodes[k]}) {
                const double inner_low =
                    panel([&](double u) { return u * g(u); }, a, v);
                const double inner_high =
                    panel([&](double u) { return (1.0 - u) * g(u); }, v, b);
                acc += kWeights[k] * g(v) * ((1.0 - v) * inner_low + v * inner_high);
            }
        }
        total += half * acc;
    }
    return total;
}

}  // namespace gex::quad
