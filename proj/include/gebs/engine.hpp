#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gebs/errors.hpp"
#include "gebs/models.hpp"
#include "gebs/solver.hpp"
#include "gebs/weights.hpp"

namespace gebs {

enum class DrawStatus { Converged, Fallback };

enum class FallbackPolicy {
    UseEstimate,  // a failed solve records beta_B = beta_hat
    Throw,        // a failed solve aborts the run
};

struct Draw {
    Vector beta;
    DrawStatus status = DrawStatus::Converged;
};

struct BootstrapSample {
    std::string method;
    Vector beta_hat;
    std::vector<Draw> draws;
    WeightScheme scheme;
    double sigma2 = 1.0;  // sigma_n^2 of the weights; 1 for residual-type baselines
    std::size_t fallback_count = 0;
    std::vector<WeightVector> weights;  // per draw, only when requested

    double fallback_rate() const {
        return draws.empty() ? 0.0 : static_cast<double>(fallback_count) / static_cast<double>(draws.size());
    }
};

class DegenerateRun : public Error {
public:
    DegenerateRun(const std::string& what, BootstrapSample sample) : Error(what), sample_(std::move(sample)) {}
    const BootstrapSample& sample() const noexcept { return sample_; }

private:
    BootstrapSample sample_;
};

struct BootstrapOptions {
    FallbackPolicy fallback = FallbackPolicy::UseEstimate;
    double max_fallback_rate = 0.2;
    std::size_t threads = 0;          // 0: default_thread_count()
    SolveOptions solve;               // init is overridden with beta_hat
    std::vector<Vector> extra_starts; // when set, each draw keeps the root of least weighted objective
    bool keep_weights = false;
};

/// Throws DegenerateRun when the fallback rate exceeds options.max_fallback_rate.
void check_degenerate(const BootstrapSample& sample, double max_fallback_rate);

/// B weighted resamples of the estimating equation, each solved from beta_hat.
/// Draw b uses the stream derive_seed(seed, {b}).
BootstrapSample run_bootstrap(const Model& model, const Vector& beta_hat, const WeightScheme& scheme, std::size_t B,
                              std::uint64_t seed, const BootstrapOptions& options = {});

/// Solves sum_i w_i phi_i = 0 for one weight vector; nullopt when the solve fails.
std::optional<Vector> solve_resample(const Model& model, const Vector& beta_hat, const std::vector<double>& w,
                                     const BootstrapOptions& options);

struct VarianceEstimate {
    Matrix v_gbs;      // sigma^-2 E_B (beta_B - beta_hat)(beta_B - beta_hat)'
    Matrix mc_stderr;  // elementwise Monte Carlo standard error (0 for exact expectations)
    std::string target = "variance of beta_hat; multiply by n for the root-n scale";
    bool degenerate = false;

    double scalar() const { return v_gbs(0, 0); }
};

VarianceEstimate variance_estimate(const BootstrapSample& sample);

/// V_GBS as an exact expectation over the scheme's enumerated support.
VarianceEstimate exact_variance_enumeration(const Model& model, const Vector& beta_hat, const WeightScheme& scheme,
                                            const BootstrapOptions& options = {});

/// Equal-mass distribution over finite values.
class EmpiricalDistribution {
public:
    explicit EmpiricalDistribution(std::vector<double> values);

    std::size_t size() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    double cdf(double x) const;
    /// Smallest value v with cdf(v) >= q, q in (0, 1].
    double quantile(double q) const;
    double mean() const;

private:
    std::vector<double> values_;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double length() const { return hi - lo; }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Equal-tail percentile interval: order statistics floor(B a/2)+1 and
/// ceil(B (1 - a/2)) of the (optionally mapped) values, a = 1 - level.
Interval percentile_ci(const std::vector<double>& values, double level,
                       const std::function<double(double)>& map = nullptr);

/// Per-draw scalars from a sample, mapped through fn(beta_B).
std::vector<double> project(const BootstrapSample& sample, const std::function<double(const Vector&)>& fn);

/// F_Bn support for p = 1: sigma^-1 |sum phi_1(beta_hat)|^{1/2} (beta_B - beta_hat).
EmpiricalDistribution bootstrap_distribution(const Model& model, const BootstrapSample& sample);

/// Projected form for p >= 1: sigma^-1 s_hat^-1 c'(beta_B - beta_hat) with
/// s_hat^2 = c' A^-1 S A^-T c, A = sum phi_1(beta_hat), S = sum phi phi'(beta_hat).
EmpiricalDistribution bootstrap_distribution(const Model& model, const BootstrapSample& sample, const Vector& contrast);

/// s_hat for a unit contrast c.
double projection_scale(const Model& model, const Vector& beta_hat, const Vector& contrast);

struct StudentizedStats {
    double gamma1_hat = 0.0;  // n^-1 sum phi_1(beta_hat)
    double gamma2_hat = 0.0;  // n^-1 sum phi_2(beta_hat)
    double g_hat = 0.0;       // sqrt(n^-1 sum phi^2(beta_hat))
    double v_gbs = 0.0;
    std::optional<double> t_n;              // when beta0 is supplied
    std::vector<double> g_hat_B;            // sqrt(n^-1 sum W_i^2 phi_i^2(beta_hat)) per draw
    std::vector<std::optional<double>> t_nB;  // nullopt when g_hat_B == 0
};

/// Requires p = 1 and a sample run with keep_weights.
StudentizedStats studentized_stats(const Model& model, const Vector& beta_hat, const BootstrapSample& sample,
                                   std::optional<double> beta0 = std::nullopt);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b);
/// Distance to the standard normal CDF.
double ks_distance_normal(const EmpiricalDistribution& a);

double normal_cdf(double x);

}  // namespace gebs
