#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gex/common.hpp"
#include "gex/empirical.hpp"
#include "gex/rng.hpp"

using namespace gex;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
    const std::string path = "gex_test_" + name + ".csv";
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("sample construction sorts and pairs indicators") {
    const auto s = Sample::from_values({3.0, 1.0, 2.0});
    CHECK(s.values == std::vector<double>{1.0, 2.0, 3.0});
    CHECK_FALSE(s.censored());
    const auto c = Sample::from_censored({3.0, 1.0, 2.0}, {1, 0, 1});
    CHECK(c.values == std::vector<double>{1.0, 2.0, 3.0});
    REQUIRE(c.censored());
    CHECK(*c.events == std::vector<std::uint8_t>{0, 1, 1});
}

TEST_CASE("ecdf heights and tie handling") {
    const auto f = ecdf(Sample::from_values({1.0, 2.0, 3.0}));
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == doctest::Approx(0.25));
    CHECK(f(2.0) == doctest::Approx(0.5));
    CHECK(f(2.5) == doctest::Approx(0.5));
    CHECK(f(3.0) == doctest::Approx(0.75));
    CHECK(f(99.0) == doctest::Approx(0.75));
    const auto g = ecdf(Sample::from_values({1.0, 1.0, 2.0}));
    CHECK(g(1.0) == doctest::Approx(0.5));  // ties take the last rank of the group
    CHECK(g(2.0) == doctest::Approx(0.75));
}

TEST_CASE("empirical quantile pins and rank inversion") {
    const auto s = Sample::from_values({10.0, 20.0, 30.0});
    CHECK(empirical_quantile(s, 0.5) == 20.0);
    CHECK(empirical_quantile(s, 0.25) == 10.0);
    CHECK(empirical_quantile(s, 0.95) == 30.0);
    CHECK_THROWS_AS(empirical_quantile(s, 0.0), std::domain_error);
    CHECK_THROWS_AS(empirical_quantile(s, 1.0), std::domain_error);

    Rng rng(5, 0);
    std::vector<double> v(40);
    for (auto& x : v) x = rng.uniform01() * 10.0 - 5.0;
    const auto big = Sample::from_values(v);
    const double denom = static_cast<double>(big.n() + 1);
    for (int k = 1; k <= big.n(); ++k)
        CHECK(empirical_quantile(big, static_cast<double>(k) / denom) ==
              big.values[static_cast<std::size_t>(k - 1)]);
}

TEST_CASE("product-limit estimator") {
    const auto s = Sample::from_censored({1.0, 2.0, 3.0}, {1, 0, 1});
    const auto f = km_cdf(s);
    CHECK(f(0.5) == 0.0);
    CHECK(f(1.0) == doctest::Approx(1.0 / 3.0));
    CHECK(f(2.0) == doctest::Approx(1.0 / 3.0));  // censoring does not jump
    CHECK(f(3.0) == doctest::Approx(1.0));
    CHECK(km_quantile(s, 0.5) == 3.0);

    const auto t = Sample::from_censored({1.0, 2.0}, {0, 1});
    CHECK(km_cdf(t)(2.0) == doctest::Approx(1.0));

    // with no censoring the curve is the classical n-denominator ECDF
    Rng rng(9, 0);
    std::vector<double> v(25);
    for (auto& x : v) x = rng.uniform01();
    const auto all = Sample::from_censored(v, std::vector<std::uint8_t>(25, 1));
    const auto km = km_cdf(all);
    for (int k = 0; k < all.n(); ++k)
        CHECK(km(all.values[static_cast<std::size_t>(k)]) ==
              doctest::Approx(static_cast<double>(k + 1) / 25.0).epsilon(1e-12));

    CHECK_THROWS_AS(km_cdf(Sample::from_censored({1.0, 2.0}, {0, 0})),
                    breakdown_error);
    CHECK_THROWS_AS(km_quantile(s, 0.0), std::domain_error);
}

TEST_CASE("km quantile unreachable level breaks down") {
    // last observation censored: the curve tops out below 1
    const auto s = Sample::from_censored({1.0, 2.0, 3.0}, {1, 1, 0});
    CHECK_THROWS_AS(km_quantile(s, 0.9), breakdown_error);
}

TEST_CASE("kernel density approximates a normal density") {
    Rng rng(123, 0);
    std::vector<double> v(100000);
    for (auto& x : v) {
        // Box-Muller from the shared uniform stream
        const double u1 = rng.uniform01();
        const double u2 = rng.uniform01();
        x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }
    const auto s = Sample::from_values(v);
    const double at0 = kde(s, 0.0);
    CHECK(std::abs(at0 - 0.3989422804014327) < 0.05 * 0.3989422804014327);
    CHECK_THROWS_AS(kde(Sample::from_values({1.0, 2.0, 3.0, 4.0}), 0.0),
                    std::invalid_argument);
}

TEST_CASE("kde handles constant samples") {
    const auto s = Sample::from_values({2.0, 2.0, 2.0, 2.0, 2.0, 2.0});
    const double v = kde(s, 2.0);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
}

TEST_CASE("csv loading") {
    const auto p1 = write_temp("plain", "value\n3\n1\n2.5\n");
    const auto s1 = load_csv(p1);
    CHECK(s1.values == std::vector<double>{1.0, 2.5, 3.0});
    CHECK_FALSE(s1.censored());

    const auto p2 = write_temp("events", "value,event\r\n1.0,1\r\n2.0,0\r\n\n");
    const auto s2 = load_csv(p2);
    REQUIRE(s2.censored());
    CHECK(*s2.events == std::vector<std::uint8_t>{1, 0});

    const auto p3 = write_temp("badnum", "value\n1\noops\n");
    CHECK_THROWS_WITH_AS(load_csv(p3),
                         doctest::Contains("row 3"), std::invalid_argument);

    const auto p4 = write_temp("badev", "value,event\n1,2\n");
    CHECK_THROWS_AS(load_csv(p4), std::invalid_argument);

    const auto p5 = write_temp("badhdr", "x,y\n1,2\n");
    CHECK_THROWS_AS(load_csv(p5), std::invalid_argument);

    const auto p6 = write_temp("extracol", "value\n1,2\n");
    CHECK_THROWS_AS(load_csv(p6), std::invalid_argument);

    CHECK_THROWS_AS(load_csv("gex_test_no_such_file.csv"), std::invalid_argument);
    for (const auto& p : {p1, p2, p3, p4, p5, p6}) std::remove(p.c_str());
}

TEST_CASE("empty sample is rejected where it cannot mean anything") {
    const auto p = write_temp("empty", "value\n");
    CHECK_THROWS_AS(load_csv(p), std::invalid_argument);
    std::remove(p.c_str());
}
