#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gex/rng.hpp"

using nlohmann::json;

namespace {

std::string binary() {
    const char* p = std::getenv("GEX_BIN");
    if (!p) FAIL("GEX_BIN is not set; run through ctest or export it");
    return p ? p : "";
}

struct RunResult {
    int code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = binary() + " " + args + " 2>cli_stderr.txt";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
    const int status = pclose(pipe);
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = out;
    return r;
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream f(path);
    f << body;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        rows.push_back(std::move(fields));
    }
    return rows;
}

const char* kFive = "value\n1\n1.5\n2\n2.5\n3\n";
const char* kCensored =
    "value,event\n0.5,1\n0.9,1\n1.2,0\n1.5,1\n2.0,0\n2.5,1\n3.0,1\n3.5,0\n";

}  // namespace

TEST_CASE("estimate reports a point with a confidence interval") {
    write_file("cli_five.csv", kFive);
    const auto r = run_cli(
        "estimate cli_five.csv --distortion uniform --loss quantile:0.5 "
        "--estimator mroot");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["point"].get<double>() == 2.0);
    CHECK(j["n"].get<int>() == 5);
    CHECK(j["method"].get<std::string>() == "mroot");
    CHECK(j["flags"].is_array());
    CHECK(j["flags"].empty());
    CHECK(j["var"].get<double>() > 0.0);
    REQUIRE(j["ci"].is_array());
    CHECK(j["ci"][0].get<double>() < 2.0);
    CHECK(j["ci"][1].get<double>() > 2.0);

    // auto estimator resolves the square loss to the self-normalized form
    const auto sq = run_cli("estimate cli_five.csv --loss square");
    REQUIRE(sq.code == 0);
    const json js = json::parse(sq.out);
    CHECK(js["method"].get<std::string>() == "M");
    CHECK(js["point"].get<double>() == 2.0);
    CHECK(js["var"].get<double>() ==
          doctest::Approx(0.5555555555555557).epsilon(1e-12));
    std::remove("cli_five.csv");
}

TEST_CASE("estimate variance can be turned off or degrade gracefully") {
    write_file("cli_five.csv", kFive);
    const auto off = run_cli(
        "estimate cli_five.csv --loss quantile:0.5 --estimator mroot "
        "--variance-method none");
    REQUIRE(off.code == 0);
    const json j = json::parse(off.out);
    CHECK(j["var"].is_null());
    CHECK(j["ci"].is_null());

    // the kernel density needs 5 observations; auto mode degrades to null
    write_file("cli_three.csv", "value\n1\n2\n3\n");
    const auto tiny = run_cli(
        "estimate cli_three.csv --loss quantile:0.5 --estimator mroot");
    REQUIRE(tiny.code == 0);
    const json jt = json::parse(tiny.out);
    CHECK(jt["point"].get<double>() == 2.0);
    CHECK(jt["var"].is_null());

    // asking for it explicitly is an error instead
    const auto forced = run_cli(
        "estimate cli_three.csv --loss quantile:0.5 --estimator mroot "
        "--variance-method plugin");
    CHECK(forced.code == 2);
    std::remove("cli_five.csv");
    std::remove("cli_three.csv");
}

TEST_CASE("estimate on censored data uses the product-limit curve") {
    write_file("cli_cens.csv", kCensored);
    const auto r =
        run_cli("estimate cli_cens.csv --loss quantile:0.5 --estimator km");
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["point"].get<double>() == 2.5);
    CHECK(j["method"].get<std::string>() == "km");

    const auto high =
        run_cli("estimate cli_cens.csv --loss quantile:0.99 --estimator km");
    CHECK(high.code == 3);
    std::remove("cli_cens.csv");
}

TEST_CASE("estimate exit codes by failure class") {
    write_file("cli_five.csv", kFive);
    CHECK(run_cli("estimate cli_five.csv --distortion es:0.999 --estimator M "
                  "--loss square").code == 3);
    CHECK(run_cli("estimate cli_five.csv --distortion nope --loss square")
              .code == 2);
    CHECK(run_cli("estimate cli_five.csv --loss square --estimator bogus")
              .code == 2);
    write_file("cli_bad.csv", "value\n1\noops\n");
    CHECK(run_cli("estimate cli_bad.csv --loss square").code == 2);
    CHECK(run_cli("estimate cli_missing.csv --loss square").code == 2);
    std::remove("cli_five.csv");
    std::remove("cli_bad.csv");
}

TEST_CASE("estimate writes to a file when asked") {
    write_file("cli_five.csv", kFive);
    const auto r = run_cli("estimate cli_five.csv --loss square --out cli_out.json");
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream f("cli_out.json");
    REQUIRE(f.good());
    const json j = json::parse(f);
    CHECK(j["point"].get<double>() == 2.0);
    std::remove("cli_five.csv");
    std::remove("cli_out.json");
}

TEST_CASE("variance subcommand selects the matching formula") {
    const auto general = run_cli(
        "variance --model expo --distortion extremile:0.9 --loss expectile:0.9");
    REQUIRE(general.code == 0);
    const json jg = json::parse(general.out);
    CHECK(jg["method"].get<std::string>() == "general");
    CHECK(std::abs(jg["t0"].get<double>() - 3.742262592014543) <= 1e-6);
    CHECK(jg["var"].get<double>() ==
          doctest::Approx(37.5808401943).epsilon(2e-3));

    const auto km =
        run_cli("variance --model expo --loss quantile:0.5 --pc 0.1 --km");
    REQUIRE(km.code == 0);
    const json jk = json::parse(km.out);
    CHECK(jk["method"].get<std::string>() == "censored-km");
    CHECK(jk["t0"].get<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(jk["var"].get<double>() ==
          doctest::Approx(1.044107530006151).epsilon(1e-9));

    const auto cl = run_cli("variance --model expo --loss quantile:0.5 --pc 0.1");
    REQUIRE(cl.code == 0);
    const json jc = json::parse(cl.out);
    CHECK(jc["method"].get<std::string>() == "censored-loss");
    CHECK(jc["var"].get<double>() ==
          doctest::Approx(1.2424932858057367).epsilon(1e-9));

    const auto sq = run_cli(
        "variance --model normal --distortion extremile:0.9 --loss square");
    REQUIRE(sq.code == 0);
    const json jsq = json::parse(sq.out);
    CHECK(jsq["method"].get<std::string>() == "square");
    CHECK(jsq["var"].get<double>() ==
          doctest::Approx(2.11586552701).epsilon(2e-3));

    const auto forced =
        run_cli("variance --model expo --loss quantile:0.5 --pc 0.1 --t0 0.8");
    REQUIRE(forced.code == 0);
    CHECK(json::parse(forced.out)["t0"].get<double>() == 0.8);
}

TEST_CASE("curve walks the level range") {
    // big exponential sample: the tail means at 0.5 and 0.9 are known
    gex::Rng rng(314, 0);
    std::ostringstream csv;
    csv << "value\n";
    char buf[32];
    for (int i = 0; i < 10000; ++i) {
        std::snprintf(buf, sizeof buf, "%.17g\n", -std::log(rng.uniform01()));
        csv << buf;
    }
    write_file("cli_expo.csv", csv.str());
    const auto r = run_cli(
        "curve cli_expo.csv --distortion es --loss square --estimator M "
        "--tau-from 0.5 --tau-to 0.9 --tau-steps 2");
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"tau", "point", "ci_low",
                                              "ci_high", "flag"});
    const double p50 = std::stod(rows[1][1]);
    const double p90 = std::stod(rows[2][1]);
    CHECK(std::abs(p50 - (1.0 + std::log(2.0))) < 0.1);
    CHECK(std::abs(p90 - (1.0 + std::log(10.0))) < 0.25);
    CHECK(p90 > p50);
    CHECK(std::stod(rows[1][2]) < p50);
    CHECK(std::stod(rows[1][3]) > p50);
    std::remove("cli_expo.csv");
}

TEST_CASE("curve rows degrade independently") {
    write_file("cli_flat.csv", "value\n5\n5\n5\n5\n5\n5\n5\n5\n5\n5\n");
    const auto flat = run_cli(
        "curve cli_flat.csv --distortion extremile --loss square --estimator M "
        "--tau-from 0.3 --tau-to 0.7 --tau-steps 3");
    REQUIRE(flat.code == 0);
    const auto frows = parse_csv(flat.out);
    REQUIRE(frows.size() == 4);
    for (std::size_t i = 1; i < frows.size(); ++i) {
        CHECK(std::stod(frows[i][1]) == 5.0);
        CHECK(frows[i][4].empty());
    }

    // the highest level breaks down on five points; the rest still report
    write_file("cli_five.csv", kFive);
    const auto part = run_cli(
        "curve cli_five.csv --distortion es --loss square --estimator M "
        "--tau-from 0.5 --tau-to 0.99 --tau-steps 3");
    REQUIRE(part.code == 0);
    const auto prows = parse_csv(part.out);
    REQUIRE(prows.size() == 4);
    CHECK(!prows[1][1].empty());
    CHECK(prows[3][1].empty());
    CHECK(prows[3][4] == "breakdown");

    // parameterized family names are rejected: the range supplies the level
    const auto bad = run_cli(
        "curve cli_five.csv --distortion es:0.5 --loss square --estimator M "
        "--tau-from 0.5 --tau-to 0.9 --tau-steps 2");
    CHECK(bad.code == 2);
    std::remove("cli_flat.csv");
    std::remove("cli_five.csv");
}

TEST_CASE("simulate runs blank-line-separated cells") {
    write_file("cli_sim.cfg",
               "# two quick cells\n"
               "dist=expo\ndistortion=uniform\nloss=quantile:0.5\n"
               "estimator=mroot\nn=50\nreps=3\nseed=1\n"
               "\n"
               "dist=normal\ndistortion=extremile:0.9\nloss=square\n"
               "estimator=M\nn=40\nreps=2\nseed=2\n");
    const auto r = run_cli("simulate cli_sim.cfg");
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0][0] == "cell");
    CHECK(rows[1][0] == "1");
    CHECK(rows[2][0] == "2");
    CHECK(std::abs(std::stod(rows[1][8]) - std::log(2.0)) < 1e-10);
    CHECK(rows[1][13].empty());
    CHECK(std::stoi(rows[1][12]) == 0);
    // bias, variance, mse all parse as numbers
    for (int col : {9, 10, 11}) CHECK(std::isfinite(std::stod(rows[1][col])));
    std::remove("cli_sim.cfg");
}

TEST_CASE("simulate cell errors go to the error column") {
    write_file("cli_sim_mixed.cfg",
               "dist=expo\ndistortion=uniform\nloss=quantile:0.5\n"
               "estimator=mroot\nn=30\nreps=2\nseed=1\n"
               "\n"
               "dist=expo\nbogus=1\n");
    const auto mixed = run_cli("simulate cli_sim_mixed.cfg");
    REQUIRE(mixed.code == 0);
    const auto rows = parse_csv(mixed.out);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1][13].empty());
    CHECK(rows[2][13].find("unknown key") != std::string::npos);

    // every cell failing turns into a failure exit
    write_file("cli_sim_dead.cfg",
               "dist=normal\ndistortion=es:0.97\nloss=square\n"
               "estimator=M\nn=20\nreps=2\nseed=1\n");
    CHECK(run_cli("simulate cli_sim_dead.cfg").code == 4);

    // structurally broken files never start running
    write_file("cli_sim_broken.cfg", "dist=expo\nnot a kv line\n");
    CHECK(run_cli("simulate cli_sim_broken.cfg").code == 2);
    CHECK(run_cli("simulate cli_sim_missing.cfg").code == 2);

    std::remove("cli_sim_mixed.cfg");
    std::remove("cli_sim_dead.cfg");
    std::remove("cli_sim_broken.cfg");
}

TEST_CASE("simulate carries censoring settings through") {
    write_file("cli_sim_cens.cfg",
               "dist=expo\ndistortion=uniform\nloss=quantile:0.5\n"
               "estimator=km\npc=0.3\nn=60\nreps=4\nseed=9\n");
    const auto r = run_cli("simulate cli_sim_cens.cfg");
    REQUIRE(r.code == 0);
    const auto rows = parse_csv(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][7] == "0.3");
    CHECK(std::abs(std::stod(rows[1][8]) - std::log(2.0)) < 1e-10);
    std::remove("cli_sim_cens.cfg");
}

TEST_CASE("usage errors and help") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("estimate --help").code == 0);
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("frobnicate").code == 2);
    write_file("cli_five.csv", kFive);
    CHECK(run_cli("estimate cli_five.csv --loss square --no-such-flag").code == 2);
    std::remove("cli_five.csv");
    std::remove("cli_stderr.txt");
}
