// Acceptance gate: run with a criterion number 1..8, get one PASS/FAIL line
// with the measured quantities, exit 0 on pass and 1 on fail.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include "gex/common.hpp"
#include "gex/distortion.hpp"
#include "gex/empirical.hpp"
#include "gex/estimators.hpp"
#include "gex/inference.hpp"
#include "gex/loss.hpp"
#include "gex/montecarlo.hpp"
#include "gex/rng.hpp"

using namespace gex;

namespace {

Sample draw_plain(const DistributionSpec& dist, int n, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = dist.quantile(rng.uniform01());
    return Sample::from_values(std::move(v));
}

Sample draw_censored(const DistributionSpec& dist, const DistributionSpec& censor,
                     int n, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(n));
    std::vector<std::uint8_t> ev(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = dist.quantile(rng.uniform01());
        const double c = censor.quantile(rng.uniform01());
        v[static_cast<std::size_t>(i)] = std::min(x, c);
        ev[static_cast<std::size_t>(i)] = x <= c ? 1 : 0;
    }
    return Sample::from_censored(std::move(v), std::move(ev));
}

bool within(double measured, double expected, double rel) {
    return std::abs(measured - expected) <= rel * std::abs(expected);
}

// --- 1: replication MSEs of the weighted expectile at n = 800 ---------------

bool criterion1() {
    struct Cell {
        DistributionSpec dist;
        double tau;
        double mse;
    };
    const std::vector<Cell> cells = {
        {DistributionSpec::normal(0.0, 1.0), 0.1, 1.71e-3},
        {DistributionSpec::normal(0.0, 1.0), 0.9, 6.41e-3},
        {DistributionSpec::exponential(1.0), 0.9, 4.42e-2},
    };
    bool ok = true;
    std::printf("criterion 1 cells (n=800, reps=500):");
    for (const auto& cell : cells) {
        StudyConfig cfg;
        cfg.dist = cell.dist;
        cfg.distortion = DistortionSpec::extremile(cell.tau);
        cfg.loss = LossSpec::expectile(0.9);
        cfg.estimator = EstimatorTag::MRoot;
        cfg.n = 800;
        cfg.reps = 500;
        cfg.seed = 11;
        const McReport r = run_study(cfg);
        const double ratio = r.mse / cell.mse;
        std::printf(" tau=%g mse=%.3e ratio=%.3f", cell.tau, r.mse, ratio);
        if (!within(r.mse, cell.mse, 0.35)) ok = false;
    }
    std::printf("\n");
    return ok;
}

// --- 2: weighted-median MSEs plus the two-estimator identity ----------------

bool criterion2() {
    bool ok = true;
    std::printf("criterion 2 (n=400, reps=500):");
    const struct {
        double tau;
        double mse;
    } cells[] = {{0.5, 2.62e-3}, {0.9, 2.27e-2}};
    for (const auto& cell : cells) {
        StudyConfig cfg;
        cfg.dist = DistributionSpec::exponential(1.0);
        cfg.distortion = DistortionSpec::extremile(cell.tau);
        cfg.loss = LossSpec::absolute();
        cfg.estimator = EstimatorTag::MRoot;
        cfg.n = 400;
        cfg.reps = 500;
        cfg.seed = 3;
        const McReport r = run_study(cfg);
        const double ratio = r.mse / cell.mse;
        std::printf(" tau=%g mse=%.3e ratio=%.3f", cell.tau, r.mse, ratio);
        if (!within(r.mse, cell.mse, 0.30)) ok = false;
    }

    const auto expo = DistributionSpec::exponential(1.0);
    const auto uniform = DistortionSpec::uniform();
    long mismatches = 0;
    for (int rep = 0; rep < 500; ++rep) {
        Rng rng(3, static_cast<std::uint64_t>(rep));
        const Sample s = draw_plain(expo, 400, rng);
        for (double tau : {0.05, 0.1, 0.5, 0.9, 0.95, 0.99}) {
            const double via_quantile =
                estimate_mroot(s, uniform, LossSpec::quantile(tau));
            const double via_weights = estimate_mroot(
                s, DistortionSpec::extremile(tau), LossSpec::absolute());
            if (via_quantile != via_weights) ++mismatches;
        }
    }
    std::printf(" identity-mismatches=%ld/3000\n", mismatches);
    return ok && mismatches == 0;
}

// --- 3: weighted-median vs empirical-quantile coincidence -------------------

bool criterion3() {
    long total = 0, mismatch = 0;
    for (int k = 0; k < 200; ++k) {
        Rng rng(2025, static_cast<std::uint64_t>(k));
        const int n = 5 + static_cast<int>(rng.raw() % 496);
        const Sample s = draw_plain(DistributionSpec::normal(0.0, 1.0), n, rng);
        for (int i = 1; i <= 19; ++i) {
            const double tau = 0.05 * static_cast<double>(i);
            const double weighted = estimate_mroot(
                s, DistortionSpec::extremile(tau), LossSpec::absolute());
            const double quant = empirical_quantile(s, tau);
            ++total;
            if (weighted != quant) ++mismatch;
        }
    }
    std::printf("criterion 3: %ld/%ld (tau, sample) pairs disagree (%.1f%%); "
                "the weighted median and the rank quantile are distinct "
                "estimators in finite samples\n",
                mismatch, total,
                100.0 * static_cast<double>(mismatch) / static_cast<double>(total));
    return mismatch == 0;
}

// --- 4: variance cross-checks ------------------------------------------------

bool criterion4() {
    bool ok = true;
    const auto expo = DistributionSpec::exponential(1.0);
    const auto n01 = DistributionSpec::normal(0.0, 1.0);
    const auto uniform = DistortionSpec::uniform();

    const double v1 = avar_square(uniform, expo);
    const double v2 = avar_general(uniform, expo, LossSpec::quantile(0.5),
                                   std::log(2.0));
    std::printf("criterion 4: avar_square(identity,expo)=%.6f "
                "avar_general(median,expo)=%.6f", v1, v2);
    if (std::abs(v1 - 1.0) > 1e-3) ok = false;
    if (std::abs(v2 - 1.0) > 1e-3) ok = false;

    // closed-form expectile variances with identity weights
    const struct {
        const DistributionSpec* dist;
        double delta;
        double t0;
        double avar;
    } pins[] = {
        {&n01, 0.1, -0.8615921124158288, 1.5120046413122854},
        {&n01, 0.5, 0.0, 1.0},
        {&n01, 0.9, 0.8615921124158288, 1.5120046413122854},
        {&expo, 0.1, 0.41021617949820716, 0.2211483047364955},
        {&expo, 0.5, 1.0, 1.0},
        {&expo, 0.9, 2.040112582235692, 5.498260335560951},
    };
    double worst_expectile = 0.0;
    for (const auto& pin : pins) {
        const double got =
            avar_general(uniform, *pin.dist, LossSpec::expectile(pin.delta),
                         pin.t0);
        worst_expectile = std::max(worst_expectile, std::abs(got - pin.avar));
    }
    std::printf(" expectile-closed-form-maxdiff=%.2e", worst_expectile);
    if (worst_expectile > 1e-4) ok = false;

    Rng rng(4, 0);
    double worst_square = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double u = rng.uniform01();
        DistortionSpec spec;
        switch (k % 5) {
            case 0: spec = DistortionSpec::extremile(0.2 + 0.6 * u); break;
            case 1: spec = DistortionSpec::beta(0.5 + 2.0 * u, 0.5 + 2.0 * u); break;
            case 2: spec = DistortionSpec::kumaraswamy(0.5 + u, 1.0 + u); break;
            case 3: spec = DistortionSpec::min_var(2.0 * u); break;
            default: spec = DistortionSpec::wang(2.0 * u - 1.0); break;
        }
        const DistributionSpec& dist = (k % 2 == 0) ? n01 : expo;
        const double diff =
            std::abs(avar_general(spec, dist, LossSpec::square(), 0.0) -
                     avar_square(spec, dist));
        worst_square = std::max(worst_square, diff);
    }
    std::printf(" square-reduction-maxdiff=%.2e\n", worst_square);
    if (worst_square > 1e-6) ok = false;
    return ok;
}

// --- 5: confidence interval coverage -----------------------------------------

bool criterion5() {
    const auto expo = DistributionSpec::exponential(1.0);
    const auto uniform = DistortionSpec::uniform();
    const auto loss = LossSpec::quantile(0.5);
    const double target = std::log(2.0);
    int covered = 0;
    const int reps = 500;
    for (int rep = 0; rep < reps; ++rep) {
        Rng rng(5, static_cast<std::uint64_t>(rep));
        const Sample s = draw_plain(expo, 400, rng);
        const double point = estimate_mroot(s, uniform, loss);
        const double var = plugin_variance(s, uniform, loss, point);
        const auto [lo, hi] = confidence_interval(point, var, 400, 0.95);
        if (lo <= target && target <= hi) ++covered;
    }
    const double coverage = static_cast<double>(covered) / reps;
    std::printf("criterion 5: coverage=%.3f (want within [0.91, 0.98])\n",
                coverage);
    return coverage >= 0.91 && coverage <= 0.98;
}

// --- 6: censored study: variance ratios and estimator ordering ---------------

bool criterion6() {
    const auto expo = DistributionSpec::exponential(1.0);
    const auto uniform = DistortionSpec::uniform();
    const double eq_loss = 1.2424932858057367;  // closed avar, pc=0.1, delta=0.5
    const double eq_km = 1.044107530006151;
    bool ok = true;
    std::printf("criterion 6 (reps=500):\n");
    for (double pc : {0.1, 0.3, 0.5}) {
        const auto censor = DistributionSpec::exponential(pc / (1.0 - pc));
        for (double delta : {0.1, 0.5}) {
            const double t0 = expo.quantile(delta);
            const auto loss = LossSpec::censored_quantile(delta, censor);
            for (int n : {100, 400}) {
                double sum_g = 0.0, ss_g = 0.0, sum_k = 0.0, ss_k = 0.0;
                int good = 0, failures = 0;
                for (int rep = 0; rep < 500; ++rep) {
                    Rng rng(7, static_cast<std::uint64_t>(rep));
                    const Sample s = draw_censored(expo, censor, n, rng);
                    try {
                        const double g = estimate_grid(s, uniform, loss);
                        const double k = km_quantile(s, delta);
                        sum_g += g;
                        ss_g += g * g;
                        sum_k += k;
                        ss_k += k * k;
                        ++good;
                    } catch (const std::runtime_error&) {
                        ++failures;
                    }
                }
                if (good < 400) ok = false;
                const double cnt = static_cast<double>(good);
                const double mg = sum_g / cnt, mk = sum_k / cnt;
                const double vg = ss_g / cnt - mg * mg;
                const double vk = ss_k / cnt - mk * mk;
                const double mse_g = vg + (mg - t0) * (mg - t0);
                const double mse_k = vk + (mk - t0) * (mk - t0);
                std::printf("  pc=%.1f delta=%.1f n=%d grid-mse=%.3e km-mse=%.3e "
                            "failures=%d%s\n",
                            pc, delta, n, mse_g, mse_k, failures,
                            mse_k < mse_g ? "" : " ORDER-VIOLATION");
                if (!(mse_k < mse_g)) ok = false;
                if (pc == 0.1 && delta == 0.5 && n == 400) {
                    const double rg = vg / (eq_loss / 400.0);
                    const double rk = vk / (eq_km / 400.0);
                    std::printf("  pinned cell variance ratios: grid=%.3f "
                                "km=%.3f\n", rg, rk);
                    if (rg < 0.65 || rg > 1.35) ok = false;
                    if (rk < 0.65 || rk > 1.35) ok = false;
                }
            }
        }
    }
    return ok;
}

// --- 7: exact algebraic properties --------------------------------------------

bool criterion7() {
    bool ok = true;
    auto report = [&](const char* name, bool pass) {
        if (!pass) {
            std::printf("  exact property violated: %s\n", name);
            ok = false;
        }
    };

    // affine equivariance, quantile loss: the root is a selected data point
    {
        Rng rng(71, 0);
        std::vector<double> x(25);
        for (auto& v : x) v = rng.uniform01() * 10.0 - 5.0;
        const Sample sx = Sample::from_values(x);
        const auto spec = DistortionSpec::extremile(0.7);
        for (const auto [a, b] :
             {std::pair{3.7, -2.9}, std::pair{0.34, 11.0}}) {
            std::vector<double> y(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
            const Sample sy = Sample::from_values(y);
            for (double delta : {0.1, 0.5, 0.9}) {
                const auto loss = LossSpec::quantile(delta);
                report("quantile affine equivariance",
                       estimate_mroot(sy, spec, loss) ==
                           a * estimate_mroot(sx, spec, loss) + b);
            }
        }
    }

    // affine equivariance, expectile loss: exact with dyadic scale and data
    {
        const auto u = DistortionSpec::uniform();
        for (int n : {8, 16}) {
            Rng rng(72, static_cast<std::uint64_t>(n));
            std::vector<double> x(static_cast<std::size_t>(n));
            for (auto& v : x)
                v = static_cast<double>(static_cast<int>(rng.raw() % 4096) - 2048) /
                    1024.0;
            const Sample sx = Sample::from_values(x);
            for (const auto [a, b] : {std::pair{3.0, 0.25},
                                      std::pair{0.125, -1.5},
                                      std::pair{16.0, 3.0}}) {
                std::vector<double> y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i] + b;
                const double lhs = estimate_mroot(Sample::from_values(y), u,
                                                  LossSpec::expectile(0.5));
                const double rhs =
                    a * estimate_mroot(sx, u, LossSpec::expectile(0.5)) + b;
                report("expectile affine equivariance (level 0.5)", lhs == rhs);
            }
            for (double delta : {0.3, 0.9}) {
                const double a = 8.0;  // power of two scales exactly
                std::vector<double> y(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) y[i] = a * x[i];
                const double lhs = estimate_mroot(Sample::from_values(y), u,
                                                  LossSpec::expectile(delta));
                const double rhs =
                    a * estimate_mroot(sx, u, LossSpec::expectile(delta));
                report("expectile scale equivariance", lhs == rhs);
            }
        }
    }

    // comonotone additivity of the order-statistic estimator
    {
        const std::vector<DistortionSpec> specs = {
            DistortionSpec::uniform(), DistortionSpec::expected_shortfall(0.5),
            DistortionSpec::min_var(1.0), DistortionSpec::kumaraswamy(1.0, 2.0)};
        for (int n : {7, 15}) {
            Rng rng(73, static_cast<std::uint64_t>(n));
            std::vector<double> x(static_cast<std::size_t>(n)), y(x.size()),
                z(x.size());
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] = static_cast<double>(rng.raw() % 20);
                y[i] = x[i] * x[i];  // increasing transform: comonotone pair
                z[i] = x[i] + y[i];
            }
            for (const auto& spec : specs)
                report("comonotone additivity",
                       estimate_square_L(Sample::from_values(z), spec) ==
                           estimate_square_L(Sample::from_values(x), spec) +
                               estimate_square_L(Sample::from_values(y), spec));
        }
    }

    // shortfall weights vanish exactly at the breakdown level
    for (int n : {10, 400}) {
        Rng rng(74, static_cast<std::uint64_t>(n));
        std::vector<double> x(static_cast<std::size_t>(n));
        for (auto& v : x) v = rng.uniform01() * 4.0 - 2.0;
        const auto es = DistortionSpec::expected_shortfall(
            static_cast<double>(n) / (static_cast<double>(n) + 1.0));
        report("shortfall breakdown to zero",
               estimate_square_LM(Sample::from_values(x), es) == 0.0);
    }

    // flipping twice restores the spec bitwise
    {
        const std::vector<DistortionSpec> specs = {
            DistortionSpec::uniform(), DistortionSpec::extremile(0.8),
            DistortionSpec::beta(2.0, 3.0), DistortionSpec::expected_shortfall(0.4),
            DistortionSpec::wang(-0.3), DistortionSpec::prop_hazard(2.0),
            DistortionSpec::min_max_var(1.5)};
        for (const auto& spec : specs) {
            const auto twice = dual(dual(spec));
            report("dual involution",
                   twice.kind == spec.kind && twice.a == spec.a &&
                       twice.b == spec.b && twice.dual_flag == spec.dual_flag &&
                       distortion_token(twice) == distortion_token(spec));
        }
    }

    // one-parameter family ordering around the plain quantile
    {
        const auto n01 = DistributionSpec::normal(0.0, 1.0);
        const auto expo = DistributionSpec::exponential(1.0);
        for (double tau : {0.5, 1.0, 2.0}) {
            const auto heavy = DistortionSpec::min_var(tau);
            const auto light = dual(heavy);
            for (int i = 1; i <= 9; ++i) {
                const double p = 0.1 * static_cast<double>(i);
                for (const auto& dist : {n01, expo}) {
                    const double lo = distorted_quantile(light, dist, p);
                    const double mid = dist.quantile(p);
                    const double hi = distorted_quantile(heavy, dist, p);
                    report("distorted quantile ordering", lo <= mid && mid <= hi);
                }
            }
        }
    }

    std::printf("criterion 7: exact algebraic properties %s\n",
                ok ? "all hold" : "violated");
    return ok;
}

// --- 8: large-sample agreement of the three square-loss estimators -----------

bool criterion8() {
    const auto n01 = DistributionSpec::normal(0.0, 1.0);
    const std::vector<DistortionSpec> specs = {DistortionSpec::uniform(),
                                               DistortionSpec::extremile(0.9),
                                               DistortionSpec::beta(2.0, 2.0)};
    bool ok = true;
    std::printf("criterion 8 (n=10000, worst gap per family, want < 5e-4):\n");
    for (const auto& spec : specs) {
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const Sample s =
                sample_distorted(DistortionSpec::uniform(), n01, 10000, seed);
            const double l = estimate_square_L(s, spec);
            const double lm = estimate_square_LM(s, spec);
            const double m = estimate_square_M(s, spec);
            worst = std::max({worst, std::abs(l - lm), std::abs(m - lm)});
        }
        std::printf("  %s: %.3e%s\n", distortion_token(spec).c_str(), worst,
                    worst < 5e-4 ? "" : " EXCEEDS");
        if (!(worst < 5e-4)) ok = false;
    }
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <criterion 1..8>\n");
        return 2;
    }
    const int k = std::atoi(argv[1]);
    bool pass = false;
    switch (k) {
        case 1: pass = criterion1(); break;
        case 2: pass = criterion2(); break;
        case 3: pass = criterion3(); break;
        case 4: pass = criterion4(); break;
        case 5: pass = criterion5(); break;
        case 6: pass = criterion6(); break;
        case 7: pass = criterion7(); break;
        case 8: pass = criterion8(); break;
        default:
            std::fprintf(stderr, "usage: acceptance <criterion 1..8>\n");
            return 2;
    }
    std::printf("criterion %d: %s\n", k, pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}
