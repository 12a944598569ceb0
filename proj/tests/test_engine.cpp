#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "gebs/engine.hpp"
#include "gebs/errors.hpp"

using namespace gebs;
using Catch::Approx;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

double mean(const std::vector<double>& z) { return std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size()); }

LinearData random_linear(std::size_t n, std::size_t p, Rng& rng) {
    std::normal_distribution<double> z;
    Matrix x = Matrix::NullaryExpr(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p), [&] { return z(rng); });
    Vector beta = Vector::LinSpaced(static_cast<Eigen::Index>(p), 0.5, 1.5);
    return simulate_linear(x, beta, 1.0, rng);
}

Vector fit(const Model& m) { return solve_weighted(m, m.unit_weights()).beta; }

// Weighted least squares, solved directly.
Vector wls(const LinearData& d, const std::vector<double>& w) {
    Vector wv = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    Matrix xtwx = d.x.transpose() * wv.asDiagonal() * d.x;
    return xtwx.ldlt().solve(d.x.transpose() * wv.asDiagonal() * d.y);
}

// Jackknife variance (n - 1) / n * sum (theta_i - theta)^2 from explicit leave-one-out fits.
double jackknife_formula(const std::function<double(std::size_t)>& leave_out, double full, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += (leave_out(i) - full) * (leave_out(i) - full);
    return (static_cast<double>(n) - 1) / static_cast<double>(n) * s;
}

}  // namespace

TEST_CASE("unit weights reproduce the estimate", "[engine]") {
    MeanModel m({1.0, 4.0, 2.0});
    const Vector hat = fit(m);
    auto s = run_bootstrap(m, hat, WeightScheme::unit(3), 1, 5);
    REQUIRE(s.draws.size() == 1);
    CHECK(s.draws[0].status == DrawStatus::Converged);
    CHECK(s.draws[0].beta(0) == Approx(hat(0)).epsilon(1e-14));
    CHECK(s.sigma2 == 0.0);
}

TEST_CASE("linear draws match weighted least squares", "[engine]") {
    Rng rng(17);
    auto d = random_linear(30, 2, rng);
    LinearModel m(d);
    const Vector hat = fit(m);
    BootstrapOptions opt;
    opt.keep_weights = true;
    auto s = run_bootstrap(m, hat, WeightScheme::multinomial(30), 200, 3, opt);
    CHECK(s.fallback_count == 0);
    for (std::size_t b = 0; b < s.draws.size(); ++b)
        CHECK((s.draws[b].beta - wls(d, s.weights[b])).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("exact enumeration oracles", "[engine]") {
    SECTION("jackknife on three points") {
        MeanModel m({1.0, 2.0, 3.0});
        auto v = exact_variance_enumeration(m, fit(m), WeightScheme::delete_d(3, 1));
        CHECK(v.scalar() == Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(v.mc_stderr(0, 0) == 0.0);
    }
    SECTION("multinomial on two points") {
        // Atoms (2,0), (1,1), (0,2) give deviations -1, 0, 1 with mass 1/4, 1/2, 1/4; sigma2 = 1/2.
        MeanModel m({1.0, 3.0});
        auto v = exact_variance_enumeration(m, fit(m), WeightScheme::multinomial(2));
        CHECK(v.scalar() == Approx(1.0).epsilon(1e-12));
    }
    SECTION("multinomial on three points by brute force") {
        const std::vector<double> z{0.5, 2.0, -1.0};
        MeanModel m(z);
        const double zbar = mean(z);
        double expect = 0;
        for (int a = 0; a <= 3; ++a)
            for (int b = 0; a + b <= 3; ++b) {
                const int c = 3 - a - b;
                const double prob = 6.0 / (std::tgamma(a + 1) * std::tgamma(b + 1) * std::tgamma(c + 1)) / 27.0;
                const double mb = (a * z[0] + b * z[1] + c * z[2]) / 3.0;
                expect += prob * (mb - zbar) * (mb - zbar);
            }
        expect /= 2.0 / 3.0;
        auto v = exact_variance_enumeration(m, fit(m), WeightScheme::multinomial(3));
        CHECK(v.scalar() == Approx(expect).epsilon(1e-12));
        double ss = 0;
        for (double x : z) ss += (x - zbar) * (x - zbar);
        CHECK(v.scalar() == Approx(ss / 6.0).epsilon(1e-12));
    }
    SECTION("degenerate law") {
        MeanModel m({1.0, 2.0, 5.0});
        CHECK(exact_variance_enumeration(m, fit(m), WeightScheme::unit(3)).scalar() == 0.0);
    }
    SECTION("continuous law") {
        MeanModel m({1.0, 2.0});
        CHECK_THROWS_AS(exact_variance_enumeration(m, fit(m), WeightScheme::exponential(2, 1.0)), UnsupportedScheme);
    }
}

TEST_CASE("jackknife identity on the linear model", "[engine]") {
    Rng rng(31);
    auto d = random_linear(10, 1, rng);
    LinearModel m(d);
    const double formula = jackknife_formula(
        [&](std::size_t i) {
            std::vector<double> w(10, 1.0);
            w[i] = 0.0;
            return wls(d, w)(0);
        },
        wls(d, std::vector<double>(10, 1.0))(0), 10);
    CHECK(exact_variance_enumeration(m, fit(m), WeightScheme::delete_d(10, 1)).scalar() ==
          Approx(formula).margin(1e-10));
}

TEST_CASE("Monte Carlo agrees with enumeration", "[engine]") {
    MeanModel m({0.3, 1.7, -0.4, 2.2, 0.9});
    const Vector hat = fit(m);
    for (const auto& s : {WeightScheme::multinomial(5), WeightScheme::delete_d(5, 2)}) {
        auto exact = exact_variance_enumeration(m, hat, s);
        auto mc = variance_estimate(run_bootstrap(m, hat, s, 20000, 77));
        INFO(s.to_string());
        CHECK(std::abs(mc.scalar() - exact.scalar()) < 4 * mc.mc_stderr(0, 0));
    }
}

TEST_CASE("variance estimates for fallback-heavy samples", "[engine]") {
    BootstrapSample s;
    s.beta_hat = scalar(1.0);
    s.sigma2 = 1.0;
    s.draws = {Draw{scalar(1.0), DrawStatus::Fallback}, Draw{scalar(1.0), DrawStatus::Fallback}};
    s.fallback_count = 2;
    auto v = variance_estimate(s);
    CHECK(v.scalar() == 0.0);
    CHECK(v.degenerate);
    CHECK_THROWS_AS(check_degenerate(s, 0.2), DegenerateRun);

    s.draws.resize(1);
    CHECK_THROWS_AS(variance_estimate(s), InsufficientSample);
}

TEST_CASE("scale equivariance", "[engine]") {
    Rng rng(41);
    auto d = random_linear(25, 2, rng);
    LinearData d3 = d;
    d3.y *= 3.0;
    LinearModel m(d), m3(d3);
    const Vector h = fit(m), h3 = fit(m3);
    auto s = run_bootstrap(m, h, WeightScheme::exponential(25, 1.0), 100, 9);
    auto s3 = run_bootstrap(m3, h3, WeightScheme::exponential(25, 1.0), 100, 9);
    for (std::size_t b = 0; b < s.draws.size(); ++b)
        CHECK((3.0 * s.draws[b].beta - s3.draws[b].beta).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK((9.0 * variance_estimate(s).v_gbs - variance_estimate(s3).v_gbs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("samples do not depend on the worker count", "[engine]") {
    Rng rng(43);
    LinearModel m(random_linear(40, 3, rng));
    const Vector h = fit(m);
    BootstrapOptions one, many;
    one.threads = 1;
    many.threads = 6;
    auto a = run_bootstrap(m, h, WeightScheme::dirichlet(40, 1.0), 300, 123, one);
    auto b = run_bootstrap(m, h, WeightScheme::dirichlet(40, 1.0), 300, 123, many);
    for (std::size_t k = 0; k < a.draws.size(); ++k) CHECK(a.draws[k].beta == b.draws[k].beta);
}

TEST_CASE("fallback policies", "[engine]") {
    // Weight draws that zero out one side of the data leave no finite MLE.
    LogisticModel m({{-1.0, 0.0, 1.0}, {-0.5, 1.0, 1.0}, {0.5, 0.0, 1.0}, {1.0, 1.0, 1.0}});
    const Vector h = fit(m);
    BootstrapOptions keep;
    keep.max_fallback_rate = 1.0;
    auto s = run_bootstrap(m, h, WeightScheme::multinomial(4), 200, 2, keep);
    CHECK(s.fallback_count > 0);
    for (const auto& d : s.draws)
        if (d.status == DrawStatus::Fallback) CHECK(d.beta == h);
    CHECK_THROWS_AS(run_bootstrap(m, h, WeightScheme::multinomial(4), 200, 2), DegenerateRun);
    BootstrapOptions strict;
    strict.fallback = FallbackPolicy::Throw;
    CHECK_THROWS_AS(run_bootstrap(m, h, WeightScheme::multinomial(4), 200, 2, strict), NonConvergence);
}

TEST_CASE("empirical distributions and percentile intervals", "[engine]") {
    std::vector<double> flat(50, 2.5);
    auto ci = percentile_ci(flat, 0.95);
    CHECK(ci.lo == 2.5);
    CHECK(ci.hi == 2.5);

    std::vector<double> seq(1000);
    std::iota(seq.begin(), seq.end(), 1.0);
    auto c = percentile_ci(seq, 0.95);
    CHECK(c.lo == 26.0);
    CHECK(c.hi == 975.0);
    auto mapped = percentile_ci(seq, 0.95, [](double v) { return -v; });
    CHECK(mapped.lo == -975.0);
    CHECK(mapped.hi == -26.0);

    CHECK_THROWS_AS(percentile_ci(std::vector<double>(5, 1.0), 0.9), InsufficientSample);
    CHECK_THROWS_AS(percentile_ci(seq, 1.0), ParameterError);

    EmpiricalDistribution e({3.0, 1.0, 2.0, 2.0});
    CHECK(e.cdf(0.5) == 0.0);
    CHECK(e.cdf(2.0) == 0.75);
    CHECK(e.cdf(3.0) == 1.0);
    CHECK(e.quantile(0.5) == 2.0);
    CHECK(e.quantile(1.0) == 3.0);
    CHECK(e.mean() == 2.0);
    double prev = -1e300;
    for (double q = 0.05; q <= 1.0; q += 0.05) {
        CHECK(e.quantile(q) >= prev);
        prev = e.quantile(q);
    }
}

TEST_CASE("Kolmogorov-Smirnov distances", "[engine]") {
    EmpiricalDistribution a({0.1, 0.4, -2.0, 1.3});
    CHECK(ks_distance(a, a) == 0.0);
    CHECK(ks_distance_normal(EmpiricalDistribution({0.0})) == Approx(0.5));
    CHECK(ks_distance(EmpiricalDistribution({0.0, 1.0}), EmpiricalDistribution({2.0, 3.0})) == 1.0);
    CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("bootstrap distribution tracks the normal for the linear model", "[engine]") {
    Rng rng(55);
    LinearData d = random_linear(200, 1, rng);
    LinearModel m(d);
    const Vector h = fit(m);
    auto s = run_bootstrap(m, h, WeightScheme::multinomial(200), 2000, 8);
    auto f = bootstrap_distribution(m, s);
    CHECK(f.size() == 2000);
    CHECK(ks_distance_normal(f) < 0.08);

    // The contrast form with c = 1 equals the scalar form up to the sandwich scale.
    auto fc = bootstrap_distribution(m, s, scalar(1.0));
    CHECK(ks_distance_normal(fc) < 0.08);
    CHECK_THROWS_AS(bootstrap_distribution(m, s, scalar(2.0)), ParameterError);
}

TEST_CASE("projection scale is the sandwich standard error", "[engine]") {
    Rng rng(57);
    LinearData d = random_linear(60, 2, rng);
    LinearModel m(d);
    const Vector h = fit(m);
    Matrix a = Matrix::Zero(2, 2), s = Matrix::Zero(2, 2);
    for (std::size_t i = 0; i < m.size(); ++i) {
        a += m.jacobian(i, h);
        Vector phi = m.score(i, h);
        s += phi * phi.transpose();
    }
    Vector c(2);
    c << 0.6, 0.8;
    const Matrix ai = a.inverse();
    const double expect = std::sqrt((c.transpose() * ai * s * ai.transpose() * c)(0, 0));
    CHECK(projection_scale(m, h, c) == Approx(expect).epsilon(1e-10));
}

TEST_CASE("studentized statistics", "[engine]") {
    Rng rng(61);
    LinearData d = random_linear(50, 1, rng);
    LinearModel m(d);
    const Vector h = fit(m);
    BootstrapOptions opt;
    opt.keep_weights = true;
    auto s = run_bootstrap(m, h, WeightScheme::multinomial(50), 100, 4, opt);
    auto st = studentized_stats(m, h, s, 1.0);
    CHECK(st.gamma2_hat == 0.0);
    CHECK(st.gamma1_hat == Approx(-d.x.squaredNorm() / 50.0));
    REQUIRE(st.t_n);
    CHECK(*st.t_n == Approx(st.gamma1_hat / st.g_hat * std::sqrt(50.0) * (h(0) - 1.0)));
    for (double g : st.g_hat_B) CHECK(g >= 0.0);

    s.weights[0].assign(50, 1.0);
    auto st0 = studentized_stats(m, h, s, 1.0);
    CHECK(st0.g_hat_B[0] == 0.0);
    CHECK_FALSE(st0.t_nB[0]);

    BootstrapSample bare = run_bootstrap(m, h, WeightScheme::multinomial(50), 20, 4);
    CHECK_THROWS_AS(studentized_stats(m, h, bare), ParameterError);
}

TEST_CASE("T_nB tracks T_n for an AR(1) series", "[engine]") {
    const std::size_t n = 200, B = 2000, reps = 2000;
    const double phi = 0.3;
    BootstrapOptions opt;
    opt.keep_weights = true;

    std::vector<double> tn;
    for (std::size_t r = 0; r < reps; ++r) {
        Rng rng = make_stream(99, {r});
        Ar1Model m(simulate_ar1(phi, 1.0, 1.0, n, rng));
        const Vector h = fit(m);
        auto s = run_bootstrap(m, h, WeightScheme::multinomial(n), 2, r, opt);
        tn.push_back(*studentized_stats(m, h, s, phi).t_n);
    }

    Rng rng = make_stream(100, {0});
    Ar1Model m(simulate_ar1(phi, 1.0, 1.0, n, rng));
    const Vector h = fit(m);
    auto s = run_bootstrap(m, h, WeightScheme::multinomial(n), B, 5, opt);
    std::vector<double> tnb;
    for (const auto& t : studentized_stats(m, h, s, phi).t_nB)
        if (t) tnb.push_back(*t);
    CHECK(ks_distance(EmpiricalDistribution(tn), EmpiricalDistribution(tnb)) < 0.1);
}
