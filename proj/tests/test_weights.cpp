#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gebs/errors.hpp"
#include "gebs/weights.hpp"

using namespace gebs;
using Catch::Approx;

namespace {

double sum(const WeightVector& w) { return std::accumulate(w.begin(), w.end(), 0.0); }

// Multinomial pmf over all compositions of n into n parts, built without the library.
void compositions(int n, int parts, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
    if (parts == 1) {
        cur.push_back(n);
        out.push_back(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= n; ++k) {
        cur.push_back(k);
        compositions(n - k, parts - 1, cur, out);
        cur.pop_back();
    }
}

double multinomial_pmf(const std::vector<int>& counts) {
    const int n = static_cast<int>(counts.size());
    double logp = std::lgamma(n + 1.0);
    for (int c : counts) logp -= std::lgamma(c + 1.0);
    return std::exp(logp - n * std::log(static_cast<double>(n)));
}

}  // namespace

TEST_CASE("factories reject invalid parameters", "[weights]") {
    CHECK_THROWS_AS(WeightScheme::delete_d(4, 4), ParameterError);
    CHECK_THROWS_AS(WeightScheme::delete_d(4, 0), ParameterError);
    CHECK_THROWS_AS(WeightScheme::dirichlet(4, 0.0), ParameterError);
    CHECK_THROWS_AS(WeightScheme::uniform(4, 1.0, 1.0), ParameterError);
    CHECK_THROWS_AS(WeightScheme::uniform(4, -0.5, 1.0), ParameterError);
    CHECK_THROWS_AS(WeightScheme::exponential(4, -1.0), ParameterError);
    CHECK_NOTHROW(WeightScheme::downweight_d(5, 2));
}

TEST_CASE("sampled vectors satisfy the scheme invariants", "[weights]") {
    Rng rng(7);
    SECTION("multinomial sums to n exactly") {
        for (int rep = 0; rep < 200; ++rep) {
            auto w = sample(WeightScheme::multinomial(3), rng);
            REQUIRE(w.size() == 3);
            CHECK(sum(w) == 3.0);
        }
    }
    SECTION("delete-1 at n=4 zeroes one entry") {
        for (int rep = 0; rep < 50; ++rep) {
            auto w = sample(WeightScheme::delete_d(4, 1), rng);
            CHECK(std::count(w.begin(), w.end(), 0.0) == 1);
            CHECK(std::count_if(w.begin(), w.end(), [](double v) { return std::abs(v - 4.0 / 3.0) < 1e-15; }) == 3);
            CHECK(sum(w) == Approx(4.0).margin(1e-12));
        }
    }
    SECTION("downweight-1 at n=5 gives 1/5 and 6/5") {
        for (int rep = 0; rep < 50; ++rep) {
            auto w = sample(WeightScheme::downweight_d(5, 1), rng);
            CHECK(std::count_if(w.begin(), w.end(), [](double v) { return std::abs(v - 0.2) < 1e-15; }) == 1);
            CHECK(std::count_if(w.begin(), w.end(), [](double v) { return std::abs(v - 1.2) < 1e-15; }) == 4);
            CHECK(sum(w) == Approx(5.0).margin(1e-12));
        }
    }
    SECTION("continuous laws are nonnegative with mean one") {
        for (const auto& s : {WeightScheme::dirichlet(20, 1.0), WeightScheme::uniform(20, 0.5, 1.5),
                              WeightScheme::exponential(20, 2.0)}) {
            double total = 0.0;
            const int reps = 4000;
            for (int rep = 0; rep < reps; ++rep) {
                auto w = sample(s, rng);
                for (double v : w) REQUIRE(v >= 0.0);
                total += sum(w);
            }
            CHECK(total / (reps * 20.0) == Approx(1.0).margin(0.02));
        }
    }
    SECTION("m-out-of-n is rescaled by n/m") {
        auto w = sample(WeightScheme::m_out_of_n(10, 4), rng);
        CHECK(sum(w) == Approx(10.0).margin(1e-12));
        for (double v : w) CHECK(std::fmod(v, 2.5) == 0.0);
    }
}

TEST_CASE("sampling is a pure function of the seed", "[weights]") {
    auto s = WeightScheme::dirichlet(12, 0.7);
    Rng a(99), b(99);
    CHECK(sample(s, a) == sample(s, b));
}

TEST_CASE("closed-form moments", "[weights]") {
    for (std::size_t n : {3u, 7u, 25u}) {
        auto m = theoretical_moments(WeightScheme::multinomial(n));
        const double nd = static_cast<double>(n);
        CHECK(m.sigma2 == Approx((nd - 1) / nd).epsilon(1e-14));
        CHECK(m.c11 == Approx(-1.0 / (nd - 1)).epsilon(1e-12));
    }
    auto jk = theoretical_moments(WeightScheme::delete_d(5, 2));
    CHECK(jk.sigma2 == Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(jk.c11 == Approx(-0.25).epsilon(1e-12));

    auto un = theoretical_moments(WeightScheme::uniform(9, 0.5, 1.5));
    CHECK(un.sigma2 == Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(un.c11 == Approx(0.0).margin(1e-14));
    CHECK(un.c4 == Approx(1.8).epsilon(1e-12));  // uniform kurtosis 9/5

    auto di = theoretical_moments(WeightScheme::dirichlet(6, 2.0));
    CHECK(di.sigma2 == Approx(5.0 / 13.0).epsilon(1e-14));
    CHECK(di.c11 == Approx(-0.2).epsilon(1e-12));

    auto ex = theoretical_moments(WeightScheme::exponential(4, 1.0));
    CHECK(ex.sigma2 == Approx(1.0));
    CHECK(ex.c4 == Approx(9.0));

    auto deg = theoretical_moments(WeightScheme::unit(5));
    CHECK(deg.sigma2 == 0.0);
    CHECK_FALSE(deg.standardized_available);
}

TEST_CASE("c4 >= c22^2 >= 0", "[weights]") {
    for (const auto& s : {WeightScheme::multinomial(8), WeightScheme::delete_d(8, 3), WeightScheme::downweight_d(8, 2),
                          WeightScheme::dirichlet(8, 0.5), WeightScheme::exponential(8, 3.0),
                          WeightScheme::m_out_of_n(8, 3)}) {
        auto m = theoretical_moments(s);
        CHECK(m.c22 >= 0.0);
        CHECK(m.c4 >= m.c22 * m.c22 - 1e-12);
    }
}

TEST_CASE("multinomial sigma2 agrees with a hand-built pmf at n=3", "[weights]") {
    std::vector<std::vector<int>> all;
    std::vector<int> cur;
    compositions(3, 3, cur, all);
    REQUIRE(all.size() == 10);
    double total = 0.0, second = 0.0;
    for (const auto& c : all) {
        const double p = multinomial_pmf(c);
        total += p;
        second += p * c[0] * c[0];
    }
    CHECK(total == Approx(1.0).epsilon(1e-14));
    CHECK(second - 1.0 == Approx(theoretical_moments(WeightScheme::multinomial(3)).sigma2).epsilon(1e-14));
}

TEST_CASE("support enumeration", "[weights]") {
    SECTION("delete-1 at n=3") {
        auto atoms = enumerate_support(WeightScheme::delete_d(3, 1));
        REQUIRE(atoms.size() == 3);
        for (const auto& a : atoms) CHECK(a.probability == Approx(1.0 / 3.0));
    }
    SECTION("multinomial at n=2") {
        auto atoms = enumerate_support(WeightScheme::multinomial(2));
        REQUIRE(atoms.size() == 3);
        std::map<WeightVector, double> got;
        for (const auto& a : atoms) got[a.weights] = a.probability;
        CHECK(got[WeightVector{2, 0}] == Approx(0.25));
        CHECK(got[WeightVector{1, 1}] == Approx(0.5));
        CHECK(got[WeightVector{0, 2}] == Approx(0.25));
    }
    SECTION("multinomial at n=1") {
        auto atoms = enumerate_support(WeightScheme::multinomial(1));
        REQUIRE(atoms.size() == 1);
        CHECK(atoms[0].weights == WeightVector{1.0});
        CHECK(atoms[0].probability == 1.0);
    }
    SECTION("continuous and oversized laws") {
        CHECK_THROWS_AS(enumerate_support(WeightScheme::exponential(3, 1.0)), UnsupportedScheme);
        CHECK_THROWS_AS(enumerate_support(WeightScheme::multinomial(14), 1000), UnsupportedScheme);
    }
    SECTION("probabilities sum to one") {
        for (const auto& s : {WeightScheme::multinomial(6), WeightScheme::delete_d(7, 3), WeightScheme::downweight_d(6, 2),
                              WeightScheme::m_out_of_n(5, 3)}) {
            double total = 0.0;
            for (const auto& a : enumerate_support(s)) total += a.probability;
            CHECK(total == Approx(1.0).margin(1e-12));
        }
    }
}

TEST_CASE("moments of the enumerated support match the closed forms", "[weights]") {
    for (const auto& s : {WeightScheme::multinomial(5), WeightScheme::delete_d(5, 2), WeightScheme::delete_d(6, 1),
                          WeightScheme::downweight_d(6, 2), WeightScheme::m_out_of_n(5, 3)}) {
        auto atoms = enumerate_support(s);
        std::vector<WeightVector> draws;
        std::vector<double> probs;
        for (const auto& a : atoms) {
            draws.push_back(a.weights);
            probs.push_back(a.probability);
        }
        auto emp = empirical_moments(draws, probs);
        auto th = theoretical_moments(s);
        INFO(s.to_string());
        CHECK(emp.sigma2 == Approx(th.sigma2).margin(1e-10));
        CHECK(emp.c11 == Approx(th.c11).margin(1e-10));
        CHECK(emp.c22 == Approx(th.c22).margin(1e-10));
        CHECK(emp.c4 == Approx(th.c4).margin(1e-10));
        for (const auto& [pattern, value] : th.third_order) CHECK(emp.third_order.at(pattern) == Approx(value).margin(1e-10));
        for (const auto& [pattern, value] : th.fourth_order) CHECK(emp.fourth_order.at(pattern) == Approx(value).margin(1e-10));
    }
}

TEST_CASE("delete-1 atoms listed once reproduce the moments exactly", "[weights]") {
    const std::size_t n = 6;
    std::vector<WeightVector> draws;
    for (std::size_t i = 0; i < n; ++i) {
        WeightVector w(n, 6.0 / 5.0);
        w[i] = 0.0;
        draws.push_back(w);
    }
    auto emp = empirical_moments(draws);
    auto th = theoretical_moments(WeightScheme::delete_d(n, 1));
    CHECK(emp.sigma2 == Approx(th.sigma2).margin(1e-12));
    CHECK(emp.c11 == Approx(th.c11).margin(1e-12));
}

TEST_CASE("empirical moments from Monte Carlo draws", "[weights]") {
    Rng rng(11);
    auto s = WeightScheme::exponential(20, 1.0);
    std::vector<WeightVector> draws;
    for (int b = 0; b < 100000; ++b) draws.push_back(sample(s, rng));
    CHECK(empirical_moments(draws).sigma2 == Approx(1.0).margin(0.05));

    std::vector<WeightVector> flat(10, WeightVector(4, 1.0));
    CHECK(empirical_moments(flat).sigma2 == 0.0);

    std::vector<WeightVector> ragged{WeightVector(3, 1.0), WeightVector(4, 1.0)};
    CHECK_THROWS_AS(empirical_moments(ragged), ShapeError);
}

TEST_CASE("exchangeability of the first two moments", "[weights]") {
    Rng rng(3);
    const std::size_t n = 6;
    auto s = WeightScheme::dirichlet(n, 1.0);
    std::vector<double> m1(n, 0.0), m2(n, 0.0);
    const int reps = 10000;
    for (int b = 0; b < reps; ++b) {
        auto w = sample(s, rng);
        for (std::size_t i = 0; i < n; ++i) {
            m1[i] += w[i] / reps;
            m2[i] += w[i] * w[i] / reps;
        }
    }
    const double se = std::sqrt(theoretical_moments(s).sigma2 / reps);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(std::abs(m1[i] - 1.0) < 5 * se);
        CHECK(std::abs(m2[i] - m2[0]) < 0.1);
    }
}

TEST_CASE("scheme strings", "[weights]") {
    CHECK(parse_scheme("multinomial", 5) == WeightScheme::multinomial(5));
    CHECK(parse_scheme("jackknife:d=2", 5) == WeightScheme::delete_d(5, 2));
    CHECK(parse_scheme("downweight:d=2", 5) == WeightScheme::downweight_d(5, 2));
    CHECK(parse_scheme("dirichlet:alpha=1", 5) == WeightScheme::dirichlet(5, 1.0));
    CHECK(parse_scheme("uniform:0.5,1.5", 5) == WeightScheme::uniform(5, 0.5, 1.5));
    CHECK(parse_scheme("exp:1", 5) == WeightScheme::exponential(5, 1.0));
    CHECK(parse_scheme("moon:m=3", 5) == WeightScheme::m_out_of_n(5, 3));
    CHECK(parse_scheme("unit", 5) == WeightScheme::unit(5));
    CHECK_THROWS_AS(parse_scheme("poisson", 5), ParameterError);
    CHECK_THROWS_AS(parse_scheme("jackknife:d=9", 5), ParameterError);
    auto s = WeightScheme::downweight_d(9, 4);
    CHECK(parse_scheme(s.to_string(), 9) == s);
}

TEST_CASE("condition verdicts over the n grid", "[weights]") {
    const std::vector<std::size_t> grid{10, 20, 40, 80, 160, 320};
    auto p1 = [](std::size_t) { return 1.0; };
    auto sqrt_d = [](std::size_t n) { return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))); };

    auto multi = check_conditions([](std::size_t n) { return WeightScheme::multinomial(n); }, grid, p1);
    CHECK(multi.bw == Verdict::Pass);
    CHECK(multi.cltw == Verdict::Pass);
    CHECK(multi.vw_a == Verdict::Pass);

    auto jk = check_conditions([&](std::size_t n) { return WeightScheme::delete_d(n, sqrt_d(n)); }, grid, p1);
    CHECK(jk.variance_conditions());
    CHECK(jk.cltw == Verdict::Fail);

    auto unit = check_conditions([](std::size_t n) { return WeightScheme::unit(n); }, grid, p1);
    CHECK(unit.bw == Verdict::Fail);

    for (const auto& clause : multi.clauses)
        if (clause.verdict == Verdict::Pass) CHECK_FALSE(clause.evidence.empty());
}
