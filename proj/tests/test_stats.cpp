#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "coalim/chain.hpp"
#include "coalim/stats.hpp"

#include <cmath>
#include <random>

using namespace coalim;
using doctest::Approx;

TEST_CASE("poisson pmf") {
    CHECK(poisson_pmf(2.0, 0) == Approx(std::exp(-2.0)));
    CHECK(poisson_pmf(2.0, 3) == Approx(std::exp(-2.0) * 8.0 / 6.0));
    CHECK(poisson_pmf(0.0, 0) == 1.0);
    CHECK(poisson_pmf(0.0, 2) == 0.0);
    CHECK(poisson_pmf(2.0, -1) == 0.0);
}

TEST_CASE("gof on exact Poisson draws is rarely rejected") {
    const double lambda = 2.772589;
    int accepted = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        std::poisson_distribution<std::int64_t> po(lambda);
        std::vector<std::int64_t> xs(5000);
        for (auto& x : xs) x = po(rng);
        const auto rep = poisson_gof(xs, lambda);
        if (rep.p_value > 0.001) ++accepted;
        std::int64_t mass = 0;
        for (auto h : rep.histogram) mass += h;
        CHECK(mass == 5000);
        CHECK(rep.total_variation >= 0.0);
        CHECK(rep.total_variation <= 1.0);
        for (const auto& b : rep.bins) CHECK(b.expected >= kMinExpectedPerBin);
        CHECK(rep.degrees_of_freedom == static_cast<int>(rep.bins.size()) - 1);
    }
    CHECK(accepted >= 99);
}

TEST_CASE("gof on all-zero samples") {
    std::vector<std::int64_t> xs(2000, 0);
    const auto rep = poisson_gof(xs, 5.0);
    CHECK(rep.p_value < 1e-100);
    CHECK(rep.total_variation == Approx(1.0 - std::exp(-5.0)).epsilon(1e-12));
}

TEST_CASE("gof preconditions") {
    std::vector<std::int64_t> few(999, 1);
    CHECK_THROWS_AS(poisson_gof(few, 1.0), InvalidArgument);
    std::vector<std::int64_t> ok(1000, 1);
    CHECK_THROWS_AS(poisson_gof(ok, 0.0), InvalidArgument);
}

TEST_CASE("tv distance and weighted pmf") {
    std::vector<double> exact;
    for (int k = 0; k < 60; ++k) exact.push_back(poisson_pmf(3.0, k));
    CHECK(poisson_tv_distance(exact, 3.0) < 1e-14);
    CHECK(poisson_tv_distance(std::vector<double>{1.0}, 3.0) == Approx(1.0 - std::exp(-3.0)));
    const std::vector<std::int64_t> xs{0, 1, 1, 3};
    const std::vector<double> w{2.0, 0.5, 0.5, 1.0};
    const auto pmf = weighted_pmf(xs, w);
    REQUIRE(pmf.size() == 4);
    CHECK(pmf[0] == Approx(0.5));
    CHECK(pmf[1] == Approx(0.25));
    CHECK(pmf[2] == 0.0);
    CHECK(pmf[3] == Approx(0.25));
}

TEST_CASE("correlation, chi-square tail and median") {
    CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}) == Approx(1.0));
    CHECK(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == Approx(-1.0));
    CHECK(chi_square_sf(0.0, 3) == Approx(1.0));
    CHECK(chi_square_sf(3.841458820694124, 1) == Approx(0.05).epsilon(1e-9));
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("path sup deviation") {
    const auto model = MutationModel::pim(1e-12, {1.0});
    const std::vector<double> y0{1.0};
    auto rng = Rng::for_stream(1, 0);
    const auto path = simulate_backward(TypeConfiguration({100}), model, 100, rng, scaled_steps(100, 0.5));
    // Pure coalescence moves exactly 1/n per 1/n of time.
    CHECK(path_sup_deviation(path, y0, 0.5) <= 1.0 / 100 + 1e-12);
    const auto start = simulate_backward(TypeConfiguration({33, 67}), MutationModel::pim(4.0, {0.5, 0.5}), 100, rng, 0);
    const std::vector<double> y{0.331, 0.672};
    CHECK(path_sup_deviation(start, y, 0.0) == Approx(0.001 + 0.002));
    CHECK_THROWS_AS(path_sup_deviation(path, y0, 1.0), DomainError);
}
