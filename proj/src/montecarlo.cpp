#include "gex/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gex/common.hpp"
#include "gex/inference.hpp"
#include "gex/rng.hpp"

namespace gex {

namespace {

Sample draw_censored(const DistributionSpec& dist, const DistributionSpec& censor,
                     int n, Rng& rng) {
    std::vector<double> values(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> events(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = dist.quantile(rng.uniform01());
        const double c = censor.quantile(rng.uniform01());
        values[static_cast<std::size_t>(i)] = std::min(x, c);
        events[static_cast<std::size_t>(i)] = x <= c ? 1 : 0;
    }
    return Sample::from_censored(std::move(values), std::move(events));
}

Sample draw_plain(const DistributionSpec& dist, int n, Rng& rng) {
    std::vector<double> values(static_cast<std::size_t>(n));
    for (auto& x : values) x = dist.quantile(rng.uniform01());
    return Sample::from_values(std::move(values));
}

double loss_level(const LossSpec& loss) {
    if (loss.kind != LossKind::Quantile && loss.kind != LossKind::CensoredQuantile)
        throw std::invalid_argument(
            "study: censored targets need a quantile-type loss to define the "
            "level, got '" + loss_token(loss) + "'");
    return loss.delta;
}

}  // namespace

McReport run_study(const StudyConfig& cfg) {
    if (cfg.reps < 2)
        throw std::invalid_argument("study: reps must be >= 2, got " +
                                    std::to_string(cfg.reps));
    if (cfg.n < 1)
        throw std::invalid_argument("study: n must be >= 1, got " +
                                    std::to_string(cfg.n));

    std::optional<DistributionSpec> censor = cfg.censor;
    if (!censor && cfg.censor_pc) {
        const double pc = *cfg.censor_pc;
        if (!(pc >= 0.0 && pc < 1.0))
            throw std::invalid_argument(
                "study: censoring fraction must be in [0,1), got " +
                std::to_string(pc));
        if (pc > 0.0) censor = DistributionSpec::exponential(pc / (1.0 - pc));
    }

    McReport report;
    const bool censored_target =
        censor.has_value() || cfg.estimator == EstimatorTag::Km ||
        cfg.loss.kind == LossKind::CensoredQuantile;
    try {
        report.t0 = censored_target
                        ? cfg.dist.quantile(loss_level(cfg.loss))
                        : population_value(cfg.distortion, cfg.dist, cfg.loss);
    } catch (const std::invalid_argument&) {
        throw;
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("study: target oracle failed: ") +
                                    e.what());
    }

    std::vector<double> errors;
    errors.reserve(static_cast<std::size_t>(cfg.reps));
    for (int r = 0; r < cfg.reps; ++r) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(r));
        const Sample sample = censor ? draw_censored(cfg.dist, *censor, cfg.n, rng)
                                     : draw_plain(cfg.dist, cfg.n, rng);
        try {
            double est = 0.0;
            switch (cfg.estimator) {
                case EstimatorTag::SquareL:
                    est = estimate_square_L(sample, cfg.distortion);
                    break;
                case EstimatorTag::SquareLM:
                    est = estimate_square_LM(sample, cfg.distortion);
                    break;
                case EstimatorTag::SquareM:
                    est = estimate_square_M(sample, cfg.distortion);
                    break;
                case EstimatorTag::MRoot:
                    est = estimate_mroot(sample, cfg.distortion, cfg.loss);
                    break;
                case EstimatorTag::Grid:
                    est = estimate_grid(sample, cfg.distortion, cfg.loss);
                    break;
                case EstimatorTag::Km:
                    est = km_quantile(sample, loss_level(cfg.loss));
                    break;
            }
            errors.push_back(est - report.t0);
        } catch (const breakdown_error&) {
            ++report.failures;
        } catch (const std::runtime_error&) {
            ++report.failures;
        }
    }

    if (errors.empty())
        throw breakdown_error("study: every replication failed");
    const auto count = static_cast<double>(errors.size());
    double mean = 0.0;
    for (double e : errors) mean += e;
    mean /= count;
    double var = 0.0;
    for (double e : errors) var += (e - mean) * (e - mean);
    var /= count;
    report.bias = mean;
    report.variance = var;
    report.mse = mean * mean + var;
    const double root_n = std::sqrt(static_cast<double>(cfg.n));
    report.scaled_errors.reserve(errors.size());
    for (double e : errors) report.scaled_errors.push_back(root_n * e);
    return report;
}

Sample generate_censored(const DistributionSpec& dist,
                         const DistributionSpec& censor, int n,
                         std::uint64_t seed) {
    if (n < 1)
        throw std::invalid_argument("generate_censored: n must be >= 1, got " +
                                    std::to_string(n));
    Rng rng(seed, 0);
    return draw_censored(dist, censor, n, rng);
}

std::vector<std::pair<double, double>> density_of_scaled_errors(
    const McReport& report, int grid_points) {
    const auto& e = report.scaled_errors;
    if (e.size() < 30)
        throw std::invalid_argument(
            "density_of_scaled_errors: need at least 30 successful replications, "
            "got " + std::to_string(e.size()));
    if (grid_points < 2)
        throw std::invalid_argument("density_of_scaled_errors: need >= 2 grid points");
    Sample s = Sample::from_values(e);
    const double lo = s.values.front();
    const double hi = s.values.back();
    const double margin = 0.15 * std::max(hi - lo, 1e-12);
    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(grid_points));
    for (int i = 0; i < grid_points; ++i) {
        const double x = (lo - margin) +
                         (hi - lo + 2.0 * margin) * static_cast<double>(i) /
                             static_cast<double>(grid_points - 1);
        out.emplace_back(x, kde(s, x));
    }
    return out;
}

}  // namespace gex
