#include "gebs/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "gebs/errors.hpp"

namespace gebs {

namespace {

void check_weights(const Model& m, const std::vector<double>& w) {
    if (w.size() != m.size())
        throw ShapeError("weights have length " + std::to_string(w.size()) + ", model has " +
                         std::to_string(m.size()) + " summands");
}

void check_beta(const Model& m, const Vector& beta) {
    if (static_cast<std::size_t>(beta.size()) != m.dim())
        throw ShapeError("parameter has length " + std::to_string(beta.size()) + ", model needs " +
                         std::to_string(m.dim()));
}

Matrix scalar(double v) {
    Matrix out(1, 1);
    out(0, 0) = v;
    return out;
}

Vector scalar_vec(double v) {
    Vector out(1);
    out(0) = v;
    return out;
}

}  // namespace

void Model::accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                       Matrix* jac_out) const {
    check_weights(*this, w);
    check_beta(*this, beta);
    const auto p = static_cast<Eigen::Index>(dim());
    score_out = Vector::Zero(p);
    if (jac_out) *jac_out = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < size(); ++i) {
        if (w[i] == 0.0) continue;
        score_out += w[i] * score(i, beta);
        if (jac_out) *jac_out += w[i] * jacobian(i, beta);
    }
}

std::optional<double> Model::objective(const std::vector<double>&, const Vector&) const {
    return std::nullopt;
}

// ---------------------------------------------------------------------------

MeanModel::MeanModel(std::vector<double> z) : z_(std::move(z)) {
    if (z_.empty()) throw ShapeError("mean model needs at least one observation");
}

Vector MeanModel::score(std::size_t i, const Vector& beta) const {
    check_beta(*this, beta);
    return scalar_vec(z_.at(i) - beta(0));
}

Matrix MeanModel::jacobian(std::size_t, const Vector&) const { return scalar(-1.0); }

std::vector<Matrix> MeanModel::hessians(std::size_t, const Vector&) const { return {scalar(0.0)}; }

void MeanModel::accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                           Matrix* jac_out) const {
    check_weights(*this, w);
    check_beta(*this, beta);
    double s = 0, sw = 0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
        s += w[i] * (z_[i] - beta(0));
        sw += w[i];
    }
    score_out = scalar_vec(s);
    if (jac_out) *jac_out = scalar(-sw);
}

// ---------------------------------------------------------------------------

LinearModel::LinearModel(LinearData data) : data_(std::move(data)) {
    if (data_.x.rows() != data_.y.size()) throw ShapeError("design and response lengths differ");
    if (data_.x.rows() < 1 || data_.x.cols() < 1) throw ShapeError("linear model needs data");
}

Vector LinearModel::score(std::size_t i, const Vector& beta) const {
    check_beta(*this, beta);
    const auto r = static_cast<Eigen::Index>(i);
    const Vector xi = data_.x.row(r).transpose();
    return xi * (data_.y(r) - xi.dot(beta));
}

Matrix LinearModel::jacobian(std::size_t i, const Vector&) const {
    const Vector xi = data_.x.row(static_cast<Eigen::Index>(i)).transpose();
    return -xi * xi.transpose();
}

std::vector<Matrix> LinearModel::hessians(std::size_t, const Vector&) const {
    return std::vector<Matrix>(dim(), Matrix::Zero(data_.x.cols(), data_.x.cols()));
}

void LinearModel::accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                             Matrix* jac_out) const {
    check_weights(*this, w);
    check_beta(*this, beta);
    const Eigen::Map<const Vector> wv(w.data(), static_cast<Eigen::Index>(w.size()));
    const Vector resid = data_.y - data_.x * beta;
    score_out = data_.x.transpose() * wv.cwiseProduct(resid);
    if (jac_out) *jac_out = -(data_.x.transpose() * wv.asDiagonal() * data_.x);
}

std::optional<double> LinearModel::objective(const std::vector<double>& w, const Vector& beta) const {
    check_weights(*this, w);
    const Vector resid = data_.y - data_.x * beta;
    double s = 0;
    for (Eigen::Index i = 0; i < resid.size(); ++i) s += w[static_cast<std::size_t>(i)] * resid(i) * resid(i);
    return s;
}

// ---------------------------------------------------------------------------

Ar1Model::Ar1Model(Ar1Data data) : data_(std::move(data)) {
    if (data_.series.size() < 2) throw ShapeError("AR(1) model needs X_0 and at least one more value");
}

Vector Ar1Model::score(std::size_t i, const Vector& beta) const {
    check_beta(*this, beta);
    const auto t = static_cast<Eigen::Index>(i) + 1;
    const double prev = data_.series(t - 1);
    return scalar_vec(prev * (data_.series(t) - beta(0) * prev));
}

Matrix Ar1Model::jacobian(std::size_t i, const Vector&) const {
    const double prev = data_.series(static_cast<Eigen::Index>(i));
    return scalar(-prev * prev);
}

std::vector<Matrix> Ar1Model::hessians(std::size_t, const Vector&) const { return {scalar(0.0)}; }

void Ar1Model::accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                          Matrix* jac_out) const {
    check_weights(*this, w);
    check_beta(*this, beta);
    double s = 0, j = 0;
    const auto& x = data_.series;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto t = static_cast<Eigen::Index>(i) + 1;
        s += w[i] * x(t - 1) * (x(t) - beta(0) * x(t - 1));
        j -= w[i] * x(t - 1) * x(t - 1);
    }
    score_out = scalar_vec(s);
    if (jac_out) *jac_out = scalar(j);
}

std::optional<double> Ar1Model::objective(const std::vector<double>& w, const Vector& beta) const {
    check_weights(*this, w);
    double s = 0;
    const auto& x = data_.series;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const auto t = static_cast<Eigen::Index>(i) + 1;
        const double e = x(t) - beta(0) * x(t - 1);
        s += w[i] * e * e;
    }
    return s;
}

// ---------------------------------------------------------------------------

double expit(double t) {
    t = std::clamp(t, -LogisticModel::kLogitClamp, LogisticModel::kLogitClamp);
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

std::size_t GlmData::trials() const {
    double total = 0;
    for (double v : N) total += v;
    return static_cast<std::size_t>(total);
}

LogisticModel::LogisticModel(std::vector<Obs> obs, std::string meta) : obs_(std::move(obs)), meta_(std::move(meta)) {
    if (obs_.empty()) throw ShapeError("logistic model needs observations");
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        const auto& o = obs_[i];
        if (!(o.m > 0) || !(o.y >= 0) || !(o.y <= o.m) || !std::isfinite(o.x))
            throw ParameterError("logistic observation " + std::to_string(i) + " needs 0 <= y <= m, m > 0");
    }
}

LogisticModel LogisticModel::trials(const GlmData& data) {
    std::vector<Obs> obs;
    for (std::size_t g = 0; g < data.groups(); ++g) {
        const auto n = static_cast<std::size_t>(data.N[g]);
        const auto y = static_cast<std::size_t>(data.Y[g]);
        for (std::size_t j = 0; j < n; ++j) obs.push_back({data.X[g], j < y ? 1.0 : 0.0, 1.0});
    }
    return LogisticModel(std::move(obs), data.meta);
}

LogisticModel LogisticModel::groups(const GlmData& data) {
    std::vector<Obs> obs;
    for (std::size_t g = 0; g < data.groups(); ++g) obs.push_back({data.X[g], data.Y[g], data.N[g]});
    return LogisticModel(std::move(obs), data.meta);
}

Vector LogisticModel::score(std::size_t i, const Vector& beta) const {
    check_beta(*this, beta);
    const auto& o = obs_.at(i);
    const double p = expit(beta(0) + beta(1) * o.x);
    return Eigen::Vector2d(1.0, o.x) * (o.y - o.m * p);
}

Matrix LogisticModel::jacobian(std::size_t i, const Vector& beta) const {
    check_beta(*this, beta);
    const auto& o = obs_.at(i);
    const double p = expit(beta(0) + beta(1) * o.x);
    const Eigen::Vector2d z(1.0, o.x);
    return -o.m * p * (1 - p) * z * z.transpose();
}

std::vector<Matrix> LogisticModel::hessians(std::size_t i, const Vector& beta) const {
    check_beta(*this, beta);
    const auto& o = obs_.at(i);
    const double p = expit(beta(0) + beta(1) * o.x);
    const Eigen::Vector2d z(1.0, o.x);
    const double c = -o.m * p * (1 - p) * (1 - 2 * p);
    return {Matrix(c * z(0) * z * z.transpose()), Matrix(c * z(1) * z * z.transpose())};
}

void LogisticModel::accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                               Matrix* jac_out) const {
    check_weights(*this, w);
    check_beta(*this, beta);
    double s0 = 0, s1 = 0, j00 = 0, j01 = 0, j11 = 0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
        if (w[i] == 0.0) continue;
        const auto& o = obs_[i];
        const double p = expit(beta(0) + beta(1) * o.x);
        const double r = w[i] * (o.y - o.m * p);
        s0 += r;
        s1 += r * o.x;
        const double v = w[i] * o.m * p * (1 - p);
        j00 -= v;
        j01 -= v * o.x;
        j11 -= v * o.x * o.x;
    }
    score_out = Eigen::Vector2d(s0, s1);
    if (jac_out) {
        Matrix j(2, 2);
        j << j00, j01, j01, j11;
        *jac_out = j;
    }
}

// ---------------------------------------------------------------------------

NlsModel::NlsModel(NlsData data) : data_(std::move(data)) {
    const std::size_t n = data_.y.size();
    if (n == 0 || data_.H.size() != n || data_.P.size() != n || data_.I.size() != n)
        throw ShapeError("NLS columns must be nonempty and of equal length");
}

NlsModel::Derivs NlsModel::derivs(std::size_t i, const Vector& th, bool want_hess) const {
    if (th.size() != 4) throw ShapeError("NLS parameter has length 4");
    const double H = data_.H.at(i), P = data_.P[i], I = data_.I[i];
    const double u = P - I / 1.632;
    const double D = 1 + th(1) * H + th(2) * P + th(3) * I;
    if (!std::isfinite(D) || std::abs(D) < kDenominatorFloor) throw DomainError(i, "rate-law denominator vanishes");
    const double g = th(0) * th(2) * u;
    const Eigen::Vector4d ga(th(2) * u, 0, th(0) * u, 0);
    const Eigen::Vector4d v(0, H, P, I);
    Eigen::Matrix4d gab = Eigen::Matrix4d::Zero();
    gab(0, 2) = gab(2, 0) = u;

    Derivs d;
    const double D2 = D * D, D3 = D2 * D;
    d.f = g / D;
    d.grad = ga / D - g * v / D2;
    if (want_hess) {
        d.hess = gab / D - (ga * v.transpose() + v * ga.transpose()) / D2 + 2 * g * v * v.transpose() / D3;
    }
    return d;
}

double NlsModel::mean_function(std::size_t i, const Vector& theta) const { return derivs(i, theta, false).f; }

Vector NlsModel::gradient(std::size_t i, const Vector& theta) const { return derivs(i, theta, false).grad; }

Vector NlsModel::score(std::size_t i, const Vector& theta) const {
    const auto d = derivs(i, theta, false);
    return d.grad * (data_.y.at(i) - d.f);
}

Matrix NlsModel::jacobian(std::size_t i, const Vector& theta) const {
    const auto d = derivs(i, theta, true);
    return d.hess * (data_.y.at(i) - d.f) - d.grad * d.grad.transpose();
}

std::vector<Matrix> NlsModel::hessians(std::size_t i, const Vector& th) const {
    const auto d = derivs(i, th, true);
    const double r = data_.y.at(i) - d.f;
    const double H = data_.H[i], P = data_.P[i], I = data_.I[i];
    const double u = P - I / 1.632;
    const double D = 1 + th(1) * H + th(2) * P + th(3) * I;
    const double g = th(0) * th(2) * u;
    const double D2 = D * D, D3 = D2 * D, D4 = D3 * D;
    const Eigen::Vector4d ga(th(2) * u, 0, th(0) * u, 0);
    const Eigen::Vector4d v(0, H, P, I);
    auto gab = [&](int a, int b) { return ((a == 0 && b == 2) || (a == 2 && b == 0)) ? u : 0.0; };

    std::vector<Matrix> out(4, Matrix::Zero(4, 4));
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) {
                const double fabc = -(gab(a, b) * v(c) + gab(a, c) * v(b) + gab(b, c) * v(a)) / D2 +
                                    2 * (ga(a) * v(b) * v(c) + ga(b) * v(a) * v(c) + ga(c) * v(a) * v(b)) / D3 -
                                    6 * g * v(a) * v(b) * v(c) / D4;
                out[a](b, c) = fabc * r - d.hess(a, b) * d.grad(c) - d.hess(a, c) * d.grad(b) -
                               d.grad(a) * d.hess(b, c);
            }
    return out;
}

bool NlsModel::in_domain(const Vector& th) const {
    if (th.size() != 4 || !th.allFinite()) return false;
    for (std::size_t i = 0; i < size(); ++i) {
        const double D = 1 + th(1) * data_.H[i] + th(2) * data_.P[i] + th(3) * data_.I[i];
        if (std::abs(D) < kDenominatorFloor) return false;
    }
    return true;
}

void NlsModel::accumulate(const std::vector<double>& w, const Vector& theta, Vector& score_out,
                          Matrix* jac_out) const {
    check_weights(*this, w);
    check_beta(*this, theta);
    Eigen::Vector4d s = Eigen::Vector4d::Zero();
    Eigen::Matrix4d j = Eigen::Matrix4d::Zero();
    for (std::size_t i = 0; i < size(); ++i) {
        if (w[i] == 0.0) continue;
        const auto d = derivs(i, theta, jac_out != nullptr);
        const double r = data_.y[i] - d.f;
        s += w[i] * r * d.grad;
        if (jac_out) j += w[i] * (d.hess * r - d.grad * d.grad.transpose());
    }
    score_out = s;
    if (jac_out) *jac_out = j;
}

std::optional<double> NlsModel::objective(const std::vector<double>& w, const Vector& theta) const {
    check_weights(*this, w);
    double s = 0;
    for (std::size_t i = 0; i < size(); ++i) {
        if (w[i] == 0.0) continue;
        const double r = data_.y[i] - mean_function(i, theta);
        s += w[i] * r * r;
    }
    return s;
}

Vector NlsModel::default_start() const { return isomerization_reference_estimate(); }

NlsModel NlsModel::with_response(std::vector<double> y) const {
    NlsData d = data_;
    if (y.size() != d.y.size()) throw ShapeError("replacement response has the wrong length");
    d.y = std::move(y);
    return NlsModel(std::move(d));
}

Vector isomerization_reference_estimate() {
    Vector th(4);
    th << 35.9193, 0.0708583, 0.0377385, 0.167166;
    return th;
}

// ---------------------------------------------------------------------------

Ar1Data simulate_ar1(double phi, double sigma1_sq, double sigma2_sq, std::size_t n, Rng& rng) {
    if (n < 1) throw ParameterError("AR(1) simulation needs n >= 1");
    if (sigma1_sq < 0 || sigma2_sq < 0) throw ParameterError("error variances must be nonnegative");
    std::normal_distribution<double> z(0.0, 1.0);
    const double s1 = std::sqrt(sigma1_sq), s2 = std::sqrt(sigma2_sq);
    Ar1Data d;
    d.series = Vector::Zero(static_cast<Eigen::Index>(n) + 1);
    for (Eigen::Index t = 1; t <= static_cast<Eigen::Index>(n); ++t) {
        const double e = z(rng) * ((t % 2 == 1) ? s1 : s2);
        d.series(t) = phi * d.series(t - 1) + e;
    }
    d.meta = "simulated";
    return d;
}

GlmData simulate_glm(const std::vector<double>& N, const std::vector<double>& X, const Vector& beta, Rng& rng) {
    if (N.size() != X.size()) throw ShapeError("group sizes and covariates differ in length");
    if (beta.size() != 2) throw ShapeError("logistic parameter has length 2");
    GlmData d;
    d.N = N;
    d.X = X;
    d.Y.resize(N.size());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t g = 0; g < N.size(); ++g) {
        const double p = expit(beta(0) + beta(1) * X[g]);
        double y = 0;
        for (std::size_t j = 0; j < static_cast<std::size_t>(N[g]); ++j) y += u(rng) < p ? 1.0 : 0.0;
        d.Y[g] = y;
    }
    d.meta = "simulated";
    return d;
}

LinearData simulate_linear(const Matrix& x, const Vector& beta, double sigma, Rng& rng) {
    if (x.cols() != beta.size()) throw ShapeError("design and parameter dimensions differ");
    std::normal_distribution<double> z(0.0, 1.0);
    LinearData d;
    d.x = x;
    d.y = x * beta;
    for (Eigen::Index i = 0; i < d.y.size(); ++i) d.y(i) += sigma * z(rng);
    d.meta = "simulated";
    return d;
}

}  // namespace gebs
