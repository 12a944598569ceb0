#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fd_check.hpp"
#include "gebs/dataset_io.hpp"
#include "gebs/errors.hpp"
#include "gebs/models.hpp"

using namespace gebs;
using Catch::Approx;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double x : v) out(k++) = x;
    return out;
}

LinearModel scalar_linear(std::vector<double> x, std::vector<double> y) {
    LinearData d;
    d.x = Matrix(static_cast<Eigen::Index>(x.size()), 1);
    d.y = Vector(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        d.x(static_cast<Eigen::Index>(i), 0) = x[i];
        d.y(static_cast<Eigen::Index>(i)) = y[i];
    }
    return LinearModel(d);
}

std::string write_temp(const std::string& name, const std::string& body) {
    auto path = std::filesystem::temp_directory_path() / ("gebs_models_" + name);
    std::ofstream(path) << body;
    return path.string();
}

NlsModel isomerization() { return NlsModel(load_nls_csv(bundled_data_path("isomerization.csv"))); }

}  // namespace

TEST_CASE("linear score", "[models]") {
    auto m = scalar_linear({1.0, 2.0}, {2.0, 1.0});
    CHECK(m.score(0, vec({2.0}))(0) == 0.0);
    CHECK(m.score(1, vec({0.0}))(0) == 2.0);
    CHECK(m.jacobian(1, vec({0.3}))(0, 0) == -4.0);
}

TEST_CASE("ar1 score", "[models]") {
    Ar1Model noiseless(Ar1Data{vec({0.0, 1.0, 0.2}), ""});
    CHECK(noiseless.score(1, vec({0.2}))(0) == Approx(0.0).margin(1e-15));

    Ar1Model m(Ar1Data{vec({0.0, 1.0, 2.0}), ""});
    CHECK(m.score(0, vec({0.0}))(0) == 0.0);
    CHECK(m.score(1, vec({0.0}))(0) == 2.0);
    REQUIRE(m.size() == 2);
}

TEST_CASE("logistic score", "[models]") {
    LogisticModel m({{1.0, 2.0, 2.0}});
    Vector s = m.score(0, vec({0.0, 0.0}));
    CHECK(s(0) == Approx(1.0));
    CHECK(s(1) == Approx(1.0));

    const double p = expit(0.4 + 0.5 * 1.5);
    LogisticModel at_mean({{1.5, 20 * p, 20.0}});
    CHECK(at_mean.score(0, vec({0.4, 0.5})).cwiseAbs().maxCoeff() < 1e-12);

    Matrix j = at_mean.jacobian(0, vec({0.4, 0.5}));
    const double c = -20 * p * (1 - p);
    CHECK(j(0, 0) == Approx(c));
    CHECK(j(0, 1) == Approx(c * 1.5));
    CHECK(j(1, 1) == Approx(c * 2.25));
}

TEST_CASE("logistic evaluation survives extreme logits", "[models]") {
    LogisticModel m({{10.0, 1.0, 1.0}, {-10.0, 0.0, 1.0}});
    for (double b : {-1e4, 1e4}) {
        Vector beta = vec({b, b});
        CHECK(m.score(0, beta).allFinite());
        CHECK(m.jacobian(1, beta).allFinite());
    }
    CHECK(expit(1e6) == 1.0);
    CHECK(expit(-1e6) >= 0.0);
    CHECK(logit(expit(0.7)) == Approx(0.7));
}

TEST_CASE("group and trial logistic scores aggregate identically", "[models]") {
    GlmData d{{3, 4}, {0.5, -1.0}, {2, 1}, ""};
    auto trials = LogisticModel::trials(d);
    auto groups = LogisticModel::groups(d);
    REQUIRE(trials.size() == 7);
    REQUIRE(d.trials() == 7);
    Vector beta = vec({0.3, -0.8});
    Vector st, sg;
    trials.accumulate(trials.unit_weights(), beta, st, nullptr);
    groups.accumulate(groups.unit_weights(), beta, sg, nullptr);
    CHECK((st - sg).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("nls score at an exact fit and on the numerator zero", "[models]") {
    Vector theta = vec({35.9193, 0.0708583, 0.0377385, 0.167166});
    NlsData d{{200.0, 300.0}, {100.0, 100.0}, {50.0, 163.2}, {0.0, 0.0}, ""};
    NlsModel probe(d);
    std::vector<double> y{probe.mean_function(0, theta), 5.0};
    NlsModel m = probe.with_response(y);
    CHECK(m.score(0, theta).cwiseAbs().maxCoeff() < 1e-12);

    // P = I / 1.632 makes f vanish; the score is y * grad f with zero theta1, theta3 slots.
    CHECK(m.mean_function(1, theta) == Approx(0.0).margin(1e-12));
    Vector s = m.score(1, theta);
    Vector g = m.gradient(1, theta);
    CHECK(s(0) == Approx(0.0).margin(1e-12));
    CHECK(s(2) == Approx(0.0).margin(1e-12));
    CHECK((s - 5.0 * g).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("nls domain", "[models]") {
    NlsData d{{1.0}, {1.0}, {1.0}, {1.0}, ""};
    NlsModel m(d);
    Vector bad = vec({1.0, -1.0, 0.5, -0.5});  // denominator 1 - 1 + 0.5 - 0.5 = 0
    CHECK_FALSE(m.in_domain(bad));
    CHECK_THROWS_AS(m.score(0, bad), DomainError);
    CHECK(m.in_domain(vec({1.0, 0.1, 0.1, 0.1})));
}

TEST_CASE("analytic derivatives match finite differences", "[models]") {
    Rng rng(2024);
    std::uniform_real_distribution<double> u(-1.0, 1.0);

    SECTION("linear with p = 3") {
        Matrix x = Matrix::NullaryExpr(30, 3, [&] { return u(rng); });
        Vector y = Vector::NullaryExpr(30, [&] { return u(rng); });
        LinearModel m(LinearData{x, y, ""});
        for (int k = 0; k < 20; ++k) {
            Vector b = Vector::NullaryExpr(3, [&] { return 3 * u(rng); });
            for (std::size_t i = 0; i < m.size(); i += 7) {
                CHECK(testing::jacobian_error(m, i, b) < 1e-5);
                CHECK(testing::hessian_error(m, i, b) < 1e-4);
            }
        }
    }
    SECTION("logistic") {
        std::vector<LogisticModel::Obs> obs;
        for (int i = 0; i < 12; ++i) obs.push_back({2 * u(rng), static_cast<double>(i % 3), 2.0});
        LogisticModel m(obs);
        for (int k = 0; k < 20; ++k) {
            Vector b = vec({2 * u(rng), 2 * u(rng)});
            for (std::size_t i = 0; i < m.size(); ++i) {
                CHECK(testing::jacobian_error(m, i, b) < 1e-5);
                CHECK(testing::hessian_error(m, i, b) < 1e-4);
            }
        }
    }
    SECTION("nls near the reported estimate") {
        auto m = isomerization();
        Vector center = isomerization_reference_estimate();
        for (int k = 0; k < 20; ++k) {
            Vector t = center.cwiseProduct(Vector::NullaryExpr(4, [&] { return 1.0 + 0.3 * u(rng); }));
            REQUIRE(m.in_domain(t));
            for (std::size_t i = 0; i < m.size(); i += 5) {
                CHECK(testing::jacobian_error(m, i, t) < 1e-5);
                CHECK(testing::hessian_error(m, i, t) < 1e-4);
            }
        }
    }
}

TEST_CASE("bundled isomerization data", "[models]") {
    auto m = isomerization();
    CHECK(m.size() == 24);
    auto psi = m.objective(m.unit_weights(), isomerization_reference_estimate());
    REQUIRE(psi);
    CHECK(*psi == Approx(3.23).margin(0.01));
}

TEST_CASE("ar1 simulator", "[models]") {
    Rng rng(5);
    auto flat = simulate_ar1(0.2, 0.0, 0.0, 20, rng);
    CHECK(flat.series.size() == 21);
    CHECK(flat.series.cwiseAbs().maxCoeff() == 0.0);

    // Residual variances alternate between the two levels.
    const std::size_t n = 20000;
    auto d = simulate_ar1(0.2, 1.0, 100.0, n, rng);
    double odd = 0.0, even = 0.0;
    for (std::size_t t = 1; t <= n; ++t) {
        const double e = d.series(static_cast<Eigen::Index>(t)) - 0.2 * d.series(static_cast<Eigen::Index>(t - 1));
        (t % 2 ? odd : even) += e * e;
    }
    odd /= n / 2.0;
    even /= n / 2.0;
    CHECK(odd == Approx(1.0).margin(0.06));     // sd of the estimate ~ sqrt(2 / 10000)
    CHECK(even == Approx(100.0).margin(6.0));
}

TEST_CASE("glm simulator success rates", "[models]") {
    Rng rng(8);
    const Vector beta = vec({-17.90, 6.28});
    const double x = 2.85;
    const double p = expit(beta(0) + beta(1) * x);
    const double trials = 100000;
    auto d = simulate_glm({trials}, {x}, beta, rng);
    const double se = std::sqrt(p * (1 - p) / trials);
    CHECK(std::abs(d.Y[0] / trials - p) < 3 * se);
}

TEST_CASE("scores have mean zero at the truth", "[models]") {
    Rng rng(13);
    const std::size_t n = 30, reps = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t r = 0; r < reps; ++r) {
        Ar1Model m(simulate_ar1(0.2, 1.0, 4.0, n, rng));
        Vector s;
        m.accumulate(m.unit_weights(), vec({0.2}), s, nullptr);
        const double v = s(0) / n;
        sum += v;
        sum2 += v * v;
    }
    const double mean = sum / reps;
    const double se = std::sqrt((sum2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean) < 4 * se);
}

TEST_CASE("dataset loaders", "[models]") {
    auto nls = load_nls_csv(write_temp("ok.csv", "H,P,I,y\n1,2,3,4\n5,6,7,8\n1,1,1,1\n2,2,2,2\n3,3,3,3\n"));
    CHECK(nls.size() == 5);
    CHECK_FALSE(nls.meta.empty());

    try {
        load_glm_csv(write_temp("bad.csv", "N,X,Y\n10,1.0,3\n5,2.0,6\n"));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 2);
    }
    CHECK_THROWS_AS(load_nls_csv(write_temp("missing.csv", "H,P,y\n1,2,3\n")), ParseError);
    CHECK_THROWS_AS(load_ar1_csv(write_temp("text.csv", "x\n0\nabc\n")), ParseError);

    auto fum = load_glm_csv(bundled_data_path("fumigant.csv"));
    CHECK(fum.groups() == 10);
}
