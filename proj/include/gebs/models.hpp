#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gebs/rng.hpp"

namespace gebs {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// An estimating equation sum_i w_i phi_i(beta) = 0 bound to its data.
///
/// score(i, beta) is phi_i, jacobian(i, beta) has a-th row equal to the
/// gradient of phi_i(a), and hessians(i, beta)[a] is the matrix of second
/// derivatives of phi_i(a).
class Model {
public:
    virtual ~Model() = default;

    virtual std::string name() const = 0;
    virtual std::size_t dim() const = 0;
    /// Number of weight slots (summands).
    virtual std::size_t size() const = 0;

    virtual Vector score(std::size_t i, const Vector& beta) const = 0;
    virtual Matrix jacobian(std::size_t i, const Vector& beta) const = 0;
    virtual std::vector<Matrix> hessians(std::size_t i, const Vector& beta) const = 0;

    virtual bool in_domain(const Vector& beta) const { return beta.allFinite(); }

    /// score_out = sum_i w_i phi_i(beta); jac_out (when non-null) = sum_i w_i phi_1i(beta).
    /// Throws DomainError when beta is inadmissible.
    virtual void accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                            Matrix* jac_out) const;

    /// Weighted least-squares objective sum_i w_i (y_i - f_i)^2, for
    /// least-squares models only.
    virtual std::optional<double> objective(const std::vector<double>& w, const Vector& beta) const;

    virtual Vector default_start() const { return Vector::Zero(static_cast<Eigen::Index>(dim())); }

    std::vector<double> unit_weights() const { return std::vector<double>(size(), 1.0); }
};

using ModelPtr = std::shared_ptr<const Model>;

// ---------------------------------------------------------------------------
// Datasets

struct LinearData {
    Matrix x;  // n x p design
    Vector y;
    std::string meta;
};

struct Ar1Data {
    Vector series;  // X_0, ..., X_n
    std::string meta;
};

struct GlmData {
    std::vector<double> N;  // trials per group
    std::vector<double> X;  // covariate per group
    std::vector<double> Y;  // successes per group, 0 <= Y <= N
    std::string meta;

    std::size_t groups() const { return N.size(); }
    std::size_t trials() const;
};

struct NlsData {
    std::vector<double> H, P, I, y;
    std::string meta;

    std::size_t size() const { return y.size(); }
};

// ---------------------------------------------------------------------------
// Models

/// phi_i = z_i - beta.
class MeanModel final : public Model {
public:
    explicit MeanModel(std::vector<double> z);

    std::string name() const override { return "mean"; }
    std::size_t dim() const override { return 1; }
    std::size_t size() const override { return z_.size(); }
    Vector score(std::size_t i, const Vector& beta) const override;
    Matrix jacobian(std::size_t i, const Vector& beta) const override;
    std::vector<Matrix> hessians(std::size_t i, const Vector& beta) const override;
    void accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                    Matrix* jac_out) const override;

    const std::vector<double>& data() const { return z_; }

private:
    std::vector<double> z_;
};

/// Normal equations phi_i = x_i (y_i - x_i' beta).
class LinearModel final : public Model {
public:
    explicit LinearModel(LinearData data);

    std::string name() const override { return "linear"; }
    std::size_t dim() const override { return static_cast<std::size_t>(data_.x.cols()); }
    std::size_t size() const override { return static_cast<std::size_t>(data_.x.rows()); }
    Vector score(std::size_t i, const Vector& beta) const override;
    Matrix jacobian(std::size_t i, const Vector& beta) const override;
    std::vector<Matrix> hessians(std::size_t i, const Vector& beta) const override;
    void accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                    Matrix* jac_out) const override;
    std::optional<double> objective(const std::vector<double>& w, const Vector& beta) const override;

    const LinearData& data() const { return data_; }
    Vector fitted(const Vector& beta) const { return data_.x * beta; }

private:
    LinearData data_;
};

/// Least squares for X_t = beta X_{t-1} + e_t: phi_t = X_{t-1}(X_t - beta X_{t-1}),
/// t = 1..n, stored at slot t - 1.
class Ar1Model final : public Model {
public:
    explicit Ar1Model(Ar1Data data);

    std::string name() const override { return "ar1"; }
    std::size_t dim() const override { return 1; }
    std::size_t size() const override { return static_cast<std::size_t>(data_.series.size()) - 1; }
    Vector score(std::size_t i, const Vector& beta) const override;
    Matrix jacobian(std::size_t i, const Vector& beta) const override;
    std::vector<Matrix> hessians(std::size_t i, const Vector& beta) const override;
    void accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                    Matrix* jac_out) const override;
    std::optional<double> objective(const std::vector<double>& w, const Vector& beta) const override;

    const Ar1Data& data() const { return data_; }

private:
    Ar1Data data_;
};

/// Binomial logistic regression with logit t = beta_0 + beta_1 x.
/// Each observation carries (x, y, m) with 0 <= y <= m; the score is
/// (1, x)'(y - m p(t)). Trial-level data has m = 1 and y in {0, 1} (or a
/// fraction in [0, 1] for working responses).
class LogisticModel final : public Model {
public:
    struct Obs {
        double x;
        double y;
        double m;
    };

    static constexpr double kLogitClamp = 500.0;

    explicit LogisticModel(std::vector<Obs> obs, std::string meta = {});

    /// One slot per Bernoulli trial: group i contributes Y_i ones and N_i - Y_i zeros.
    static LogisticModel trials(const GlmData& data);
    /// One slot per group with m = N_i.
    static LogisticModel groups(const GlmData& data);

    std::string name() const override { return "logistic"; }
    std::size_t dim() const override { return 2; }
    std::size_t size() const override { return obs_.size(); }
    Vector score(std::size_t i, const Vector& beta) const override;
    Matrix jacobian(std::size_t i, const Vector& beta) const override;
    std::vector<Matrix> hessians(std::size_t i, const Vector& beta) const override;
    void accumulate(const std::vector<double>& w, const Vector& beta, Vector& score_out,
                    Matrix* jac_out) const override;

    const std::vector<Obs>& observations() const { return obs_; }

private:
    std::vector<Obs> obs_;
    std::string meta_;
};

/// Overflow-safe logistic function with the argument clamped to +-500.
double expit(double t);
double logit(double p);

/// Nonlinear least squares for the isomerization rate law
/// f = th1 th3 (P - I / 1.632) / (1 + th2 H + th3 P + th4 I),
/// phi_i = grad f (y_i - f).
class NlsModel final : public Model {
public:
    static constexpr double kDenominatorFloor = 1e-10;

    explicit NlsModel(NlsData data);

    std::string name() const override { return "nls"; }
    std::size_t dim() const override { return 4; }
    std::size_t size() const override { return data_.size(); }
    Vector score(std::size_t i, const Vector& theta) const override;
    Matrix jacobian(std::size_t i, const Vector& theta) const override;
    std::vector<Matrix> hessians(std::size_t i, const Vector& theta) const override;
    bool in_domain(const Vector& theta) const override;
    void accumulate(const std::vector<double>& w, const Vector& theta, Vector& score_out,
                    Matrix* jac_out) const override;
    std::optional<double> objective(const std::vector<double>& w, const Vector& theta) const override;
    Vector default_start() const override;

    double mean_function(std::size_t i, const Vector& theta) const;
    Vector gradient(std::size_t i, const Vector& theta) const;
    const NlsData& data() const { return data_; }
    /// Same design, new responses.
    NlsModel with_response(std::vector<double> y) const;

private:
    struct Derivs {
        double f;
        Eigen::Vector4d grad;
        Eigen::Matrix4d hess;
    };
    Derivs derivs(std::size_t i, const Vector& theta, bool want_hess) const;

    NlsData data_;
};

/// Least-squares estimate reported for the bundled isomerization data.
Vector isomerization_reference_estimate();

// ---------------------------------------------------------------------------
// Simulators

/// X_0 = 0, X_t = phi X_{t-1} + e_t with Var e_t = sigma1_sq for odd t and
/// sigma2_sq for even t.
Ar1Data simulate_ar1(double phi, double sigma1_sq, double sigma2_sq, std::size_t n, Rng& rng);

/// Y_i ~ Binomial(N_i, expit(beta_0 + beta_1 X_i)) drawn trial by trial.
GlmData simulate_glm(const std::vector<double>& N, const std::vector<double>& X, const Vector& beta, Rng& rng);

/// y = x beta + sigma * N(0, 1).
LinearData simulate_linear(const Matrix& x, const Vector& beta, double sigma, Rng& rng);

}  // namespace gebs
