#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gex/common.hpp"
#include "gex/distortion.hpp"
#include "gex/distribution.hpp"
#include "gex/empirical.hpp"
#include "gex/estimators.hpp"
#include "gex/inference.hpp"
#include "gex/loss.hpp"
#include "gex/montecarlo.hpp"

namespace {

using nlohmann::json;

std::string fmt12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_output(const std::string& out_path, const std::string& body) {
    if (out_path.empty()) {
        std::cout << body;
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw std::invalid_argument("cannot open output file '" + out_path + "'");
    out << body;
}

// Append a bare level to a parameterless token: --tau 0.9 turns "extremile"
// into "extremile:0.9"; tokens that already carry parameters win.
std::string with_level(const std::string& token, const std::optional<double>& level) {
    if (!level || token.find(':') != std::string::npos) return token;
    return token + ":" + fmt17(*level);
}

enum class EstimatorChoice { Auto, L, LM, M, MRoot, Grid, Km };

EstimatorChoice parse_estimator(const std::string& s) {
    if (s == "auto") return EstimatorChoice::Auto;
    if (s == "L") return EstimatorChoice::L;
    if (s == "LM") return EstimatorChoice::LM;
    if (s == "M") return EstimatorChoice::M;
    if (s == "mroot") return EstimatorChoice::MRoot;
    if (s == "grid") return EstimatorChoice::Grid;
    if (s == "km") return EstimatorChoice::Km;
    throw std::invalid_argument("unknown estimator '" + s +
                                "' (expected auto|L|LM|M|mroot|grid|km)");
}

EstimatorChoice resolve_auto(const gex::LossSpec& loss) {
    if (loss.kind == gex::LossKind::Square) return EstimatorChoice::M;
    if (gex::classify(loss).convex) return EstimatorChoice::MRoot;
    return EstimatorChoice::Grid;
}

struct EstimateOutcome {
    double point = 0.0;
    std::vector<std::string> flags;
    std::string method;
};

EstimateOutcome run_estimator(EstimatorChoice choice, const gex::Sample& sample,
                              const gex::DistortionSpec& distortion,
                              const gex::LossSpec& loss) {
    if (choice == EstimatorChoice::Auto) choice = resolve_auto(loss);
    EstimateOutcome out;
    switch (choice) {
        case EstimatorChoice::L:
            out.point = gex::estimate_square_L(sample, distortion);
            out.method = "L";
            break;
        case EstimatorChoice::LM:
            out.point = gex::estimate_square_LM(sample, distortion);
            out.method = "LM";
            break;
        case EstimatorChoice::M:
            out.point = gex::estimate_square_M(sample, distortion);
            out.method = "M";
            break;
        case EstimatorChoice::MRoot: {
            const gex::RootResult res =
                gex::estimate_mroot_detail(sample, distortion, loss);
            out.point = res.value;
            out.method = "mroot";
            if (res.bracket_expanded) out.flags.push_back("bracket_expanded");
            if (res.no_sign_change) out.flags.push_back("no_sign_change");
            break;
        }
        case EstimatorChoice::Grid:
            out.point = gex::estimate_grid(sample, distortion, loss);
            out.method = "grid";
            break;
        case EstimatorChoice::Km:
            out.point = gex::km_quantile(sample, loss.delta);
            out.method = "km";
            break;
        case EstimatorChoice::Auto:
            throw std::logic_error("unresolved estimator choice");
    }
    return out;
}

bool plugin_supported(const gex::LossSpec& loss) {
    return loss.kind == gex::LossKind::Square ||
           loss.kind == gex::LossKind::Quantile ||
           loss.kind == gex::LossKind::AbsoluteValue;
}

int cmd_estimate(const std::string& input, std::string distortion_token,
                 std::string loss_token, std::optional<double> tau,
                 std::optional<double> delta, double ci_level,
                 const std::string& variance_method,
                 const std::string& estimator_token, const std::string& out_path) {
    const gex::Sample sample = gex::load_csv(input);
    const gex::DistortionSpec distortion =
        gex::parse_distortion(with_level(distortion_token, tau));
    const gex::LossSpec loss = gex::parse_loss(with_level(loss_token, delta));
    const EstimateOutcome res =
        run_estimator(parse_estimator(estimator_token), sample, distortion, loss);

    json doc;
    doc["point"] = res.point;
    doc["n"] = sample.n();
    doc["method"] = res.method;
    doc["flags"] = res.flags;
    bool want_var = variance_method == "plugin" ||
                    (variance_method == "auto" && plugin_supported(loss));
    if (variance_method != "plugin" && variance_method != "none" &&
        variance_method != "auto")
        throw std::invalid_argument("unknown variance method '" + variance_method +
                                    "' (expected plugin|none)");
    doc["var"] = nullptr;
    doc["ci"] = nullptr;
    if (want_var) {
        try {
            const double var =
                gex::plugin_variance(sample, distortion, loss, res.point);
            const auto ci =
                gex::confidence_interval(res.point, var, sample.n(), ci_level);
            doc["var"] = var;
            doc["ci"] = {ci.first, ci.second};
        } catch (const std::invalid_argument&) {
            if (variance_method == "plugin") throw;
        }
    }
    write_output(out_path, doc.dump(2) + "\n");
    return 0;
}

int cmd_curve(const std::string& input, const std::string& family,
              std::string loss_token, std::optional<double> delta,
              double tau_from, double tau_to, int tau_steps, double ci_level,
              const std::string& estimator_token, const std::string& out_path) {
    if (tau_steps < 1)
        throw std::invalid_argument("curve: --tau-steps must be >= 1");
    if (family.find(':') != std::string::npos)
        throw std::invalid_argument(
            "curve: --distortion takes a bare family name; the level comes from "
            "the tau range");
    const gex::Sample sample = gex::load_csv(input);
    const gex::LossSpec loss = gex::parse_loss(with_level(loss_token, delta));
    const EstimatorChoice choice = parse_estimator(estimator_token);

    std::ostringstream csv;
    csv << "tau,point,ci_low,ci_high,flag\n";
    int decreases = 0;
    bool have_prev = false;
    double prev_point = 0.0;
    for (int i = 0; i < tau_steps; ++i) {
        const double tau =
            tau_steps == 1
                ? tau_from
                : tau_from + (tau_to - tau_from) * static_cast<double>(i) /
                                 static_cast<double>(tau_steps - 1);
        csv << fmt12(tau) << ",";
        std::string flag;
        try {
            const gex::DistortionSpec distortion =
                gex::parse_distortion(family + ":" + fmt17(tau));
            const EstimateOutcome res =
                run_estimator(choice, sample, distortion, loss);
            std::string ci_low, ci_high;
            if (plugin_supported(loss)) {
                const double var =
                    gex::plugin_variance(sample, distortion, loss, res.point);
                const auto ci =
                    gex::confidence_interval(res.point, var, sample.n(), ci_level);
                ci_low = fmt12(ci.first);
                ci_high = fmt12(ci.second);
            }
            for (const auto& f : res.flags) flag += (flag.empty() ? "" : "+") + f;
            csv << fmt12(res.point) << "," << ci_low << "," << ci_high << ","
                << flag << "\n";
            if (have_prev && res.point < prev_point) ++decreases;
            prev_point = res.point;
            have_prev = true;
            continue;
        } catch (const gex::breakdown_error&) {
            flag = "breakdown";
        } catch (const std::invalid_argument&) {
            flag = "invalid";
        } catch (const std::runtime_error&) {
            flag = "failed";
        }
        csv << ",,," << flag << "\n";
    }
    if (decreases > 0)
        std::cerr << "note: point estimates decreased at " << decreases
                  << " adjacent tau step(s); expect occasional sampling noise on "
                     "monotone families\n";
    write_output(out_path, csv.str());
    return 0;
}

int cmd_variance(const std::string& model_token, std::string distortion_token,
                 std::string loss_token, std::optional<double> tau,
                 std::optional<double> delta, std::optional<double> t0_opt,
                 const std::string& censor_token, std::optional<double> pc,
                 bool km, const std::string& out_path) {
    const gex::DistributionSpec dist = gex::DistributionSpec::parse(model_token);
    const gex::DistortionSpec distortion =
        gex::parse_distortion(with_level(distortion_token, tau));
    const gex::LossSpec loss = gex::parse_loss(with_level(loss_token, delta));

    std::optional<gex::DistributionSpec> censor;
    if (!censor_token.empty())
        censor = gex::DistributionSpec::parse(censor_token);
    else if (pc && *pc > 0.0)
        censor = gex::DistributionSpec::exponential(*pc / (1.0 - *pc));

    json doc;
    double t0, var;
    std::string method;
    const gex::DistributionSpec* censor_ptr = censor ? &*censor : nullptr;
    if (km) {
        t0 = t0_opt ? *t0_opt : dist.quantile(loss.delta);
        var = gex::avar_closed_censored_km(dist, censor_ptr, loss.delta);
        method = "censored-km";
    } else if (loss.kind == gex::LossKind::CensoredQuantile ||
               (loss.kind == gex::LossKind::Quantile && censor_ptr)) {
        t0 = t0_opt ? *t0_opt : dist.quantile(loss.delta);
        var = gex::avar_closed_censored_loss(dist, censor_ptr, loss.delta);
        method = "censored-loss";
    } else if (loss.kind == gex::LossKind::Square) {
        t0 = t0_opt ? *t0_opt : gex::population_value(distortion, dist, loss);
        var = gex::avar_square(distortion, dist);
        method = "square";
    } else {
        t0 = t0_opt ? *t0_opt : gex::population_value(distortion, dist, loss);
        var = gex::avar_general(distortion, dist, loss, t0);
        method = "general";
    }
    doc["t0"] = t0;
    doc["var"] = var;
    doc["method"] = method;
    write_output(out_path, doc.dump(2) + "\n");
    return 0;
}

gex::EstimatorTag to_tag(EstimatorChoice choice) {
    switch (choice) {
        case EstimatorChoice::L: return gex::EstimatorTag::SquareL;
        case EstimatorChoice::LM: return gex::EstimatorTag::SquareLM;
        case EstimatorChoice::M: return gex::EstimatorTag::SquareM;
        case EstimatorChoice::MRoot: return gex::EstimatorTag::MRoot;
        case EstimatorChoice::Grid: return gex::EstimatorTag::Grid;
        case EstimatorChoice::Km: return gex::EstimatorTag::Km;
        case EstimatorChoice::Auto: break;
    }
    throw std::logic_error("unresolved estimator choice");
}

// Config cells are blank-line-separated key=value blocks; '#' starts a
// comment line.
std::vector<std::map<std::string, std::string>> parse_cells(
    const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file '" + path + "'");
    std::vector<std::map<std::string, std::string>> cells(1);
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        std::size_t b = 0;
        while (b < line.size() && (line[b] == ' ' || line[b] == '\t')) ++b;
        line = line.substr(b);
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) {
            if (!cells.back().empty()) cells.emplace_back();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config file '" + path + "' line " +
                                        std::to_string(row) +
                                        ": expected key=value, got '" + line + "'");
        cells.back()[line.substr(0, eq)] = line.substr(eq + 1);
    }
    if (cells.back().empty()) cells.pop_back();
    if (cells.empty())
        throw std::invalid_argument("config file '" + path + "' defines no cells");
    return cells;
}

int cmd_simulate(const std::string& config_path, const std::string& out_path) {
    const auto cells = parse_cells(config_path);
    std::ostringstream csv;
    csv << "cell,dist,distortion,loss,estimator,n,reps,pc,t0,bias,variance,mse,"
           "failures,error\n";
    int failed_cells = 0;
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
        const auto& kv = cells[idx];
        auto get = [&](const std::string& key,
                       const std::string& fallback) -> std::string {
            auto it = kv.find(key);
            return it == kv.end() ? fallback : it->second;
        };
        std::string dist_tok, distortion_tok, loss_tok, est_tok, pc_tok;
        std::string error;
        gex::McReport report;
        bool cell_ok = false;
        try {
            for (const auto& [key, value] : kv) {
                if (key != "dist" && key != "distortion" && key != "loss" &&
                    key != "estimator" && key != "n" && key != "reps" &&
                    key != "seed" && key != "pc" && key != "censor")
                    throw std::invalid_argument("config cell " +
                                                std::to_string(idx + 1) +
                                                ": unknown key '" + key + "'");
                (void)value;
            }
            dist_tok = get("dist", "");
            distortion_tok = get("distortion", "");
            loss_tok = get("loss", "");
            if (dist_tok.empty() || distortion_tok.empty() || loss_tok.empty())
                throw std::invalid_argument(
                    "config cell " + std::to_string(idx + 1) +
                    ": keys dist, distortion and loss are required");
            gex::StudyConfig study;
            study.dist = gex::DistributionSpec::parse(dist_tok);
            study.distortion = gex::parse_distortion(distortion_tok);
            study.loss = gex::parse_loss(loss_tok);
            study.n = std::stoi(get("n", "100"));
            study.reps = std::stoi(get("reps", "500"));
            study.seed = std::stoull(get("seed", "0"));
            pc_tok = get("pc", "");
            if (!pc_tok.empty()) study.censor_pc = std::stod(pc_tok);
            const std::string censor_tok = get("censor", "");
            if (!censor_tok.empty())
                study.censor = gex::DistributionSpec::parse(censor_tok);
            est_tok = get("estimator", "auto");
            study.estimator = to_tag(parse_estimator(est_tok) == EstimatorChoice::Auto
                                         ? resolve_auto(study.loss)
                                         : parse_estimator(est_tok));
            report = gex::run_study(study);
            cell_ok = true;
        } catch (const std::exception& e) {
            error = e.what();
            ++failed_cells;
        }
        csv << (idx + 1) << "," << dist_tok << "," << distortion_tok << ","
            << loss_tok << "," << est_tok << "," << get("n", "100") << ","
            << get("reps", "500") << "," << pc_tok << ",";
        if (cell_ok) {
            csv << fmt12(report.t0) << "," << fmt12(report.bias) << ","
                << fmt12(report.variance) << "," << fmt12(report.mse) << ","
                << report.failures << ",";
        } else {
            csv << ",,,,,";
        }
        // Commas inside error messages would break the row; flatten them.
        std::string clean = error;
        for (auto& ch : clean)
            if (ch == ',' || ch == '\n') ch = ';';
        csv << clean << "\n";
    }
    write_output(out_path, csv.str());
    return failed_cells == static_cast<int>(cells.size()) ? 4 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distortion-weighted risk estimation"};
    app.require_subcommand(1);

    std::string input, out_path, distortion_token = "uniform", loss_token = "square";
    std::string estimator_token = "auto", variance_method = "auto";
    std::string model_token, censor_token, config_path, family;
    std::optional<double> tau, delta, t0_opt, pc;
    double ci_level = 0.95;
    double tau_from = 0.1, tau_to = 0.9;
    int tau_steps = 9;
    bool km = false;
    std::uint64_t seed = 0;

    auto* est = app.add_subcommand("estimate", "Point estimate from a CSV sample");
    est->add_option("input", input, "Input CSV (header 'value' or 'value,event')")
        ->required();
    est->add_option("--distortion", distortion_token, "Distortion token");
    est->add_option("--loss", loss_token, "Loss token");
    est->add_option("--tau", tau, "Level appended to a bare distortion token");
    est->add_option("--delta", delta, "Level appended to a bare loss token");
    est->add_option("--ci-level", ci_level, "Confidence level");
    est->add_option("--estimator", estimator_token, "auto|L|LM|M|mroot|grid|km");
    est->add_option("--variance-method", variance_method, "plugin|none");
    est->add_option("--seed", seed, "Unused for estimation; accepted for parity");
    est->add_option("--out", out_path, "Write JSON here instead of stdout");

    auto* cur = app.add_subcommand("curve", "Estimates across a tau range");
    cur->add_option("input", input, "Input CSV")->required();
    cur->add_option("--distortion", family, "Distortion family (bare name)")
        ->required();
    cur->add_option("--loss", loss_token, "Loss token");
    cur->add_option("--delta", delta, "Level appended to a bare loss token");
    cur->add_option("--tau-from", tau_from, "First tau")->required();
    cur->add_option("--tau-to", tau_to, "Last tau")->required();
    cur->add_option("--tau-steps", tau_steps, "Number of grid points")->required();
    cur->add_option("--ci-level", ci_level, "Confidence level");
    cur->add_option("--estimator", estimator_token, "auto|L|LM|M|mroot|grid|km");
    cur->add_option("--out", out_path, "Write CSV here instead of stdout");

    auto* var = app.add_subcommand("variance", "Asymptotic variance at the target");
    var->add_option("--model", model_token, "Sampling model token")->required();
    var->add_option("--distortion", distortion_token, "Distortion token");
    var->add_option("--loss", loss_token, "Loss token");
    var->add_option("--tau", tau, "Level appended to a bare distortion token");
    var->add_option("--delta", delta, "Level appended to a bare loss token");
    var->add_option("--t0", t0_opt, "Target override");
    var->add_option("--censor", censor_token, "Censoring model token");
    var->add_option("--pc", pc, "Censoring fraction (exponential censoring)");
    var->add_flag("--km", km, "Product-limit estimator variance");
    var->add_option("--out", out_path, "Write JSON here instead of stdout");

    auto* sim = app.add_subcommand("simulate", "Replication study from a config");
    sim->add_option("config", config_path, "Config file (blank-line-separated cells)")
        ->required();
    sim->add_option("--out", out_path, "Write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (est->parsed())
            return cmd_estimate(input, distortion_token, loss_token, tau, delta,
                                ci_level, variance_method, estimator_token,
                                out_path);
        if (cur->parsed())
            return cmd_curve(input, family, loss_token, delta, tau_from, tau_to,
                             tau_steps, ci_level, estimator_token, out_path);
        if (var->parsed())
            return cmd_variance(model_token, distortion_token, loss_token, tau,
                                delta, t0_opt, censor_token, pc, km, out_path);
        if (sim->parsed()) return cmd_simulate(config_path, out_path);
    } catch (const gex::breakdown_error& e) {
        std::cerr << "breakdown: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
