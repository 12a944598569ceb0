#include "gebs/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace gebs {

namespace {

double scheme_sigma2(const WeightScheme& s) { return std::max(0.0, raw_mixed_moment(s, {2}) - 1.0); }

}  // namespace

void check_degenerate(const BootstrapSample& sample, double max_fallback_rate) {
    if (sample.fallback_rate() > max_fallback_rate)
        throw DegenerateRun(sample.method + ": " + std::to_string(sample.fallback_count) + " of " +
                                std::to_string(sample.draws.size()) + " resamples fell back to the estimate",
                            sample);
}

std::optional<Vector> solve_resample(const Model& model, const Vector& beta_hat, const std::vector<double>& w,
                                     const BootstrapOptions& options) {
    SolveOptions so = options.solve;
    if (options.extra_starts.empty()) {
        so.init = beta_hat;
        try {
            return solve_weighted(model, w, so).beta;
        } catch (const NonConvergence&) {
        } catch (const SingularSystem&) {
        } catch (const DomainError&) {
        }
        return std::nullopt;
    }
    std::vector<Vector> starts{beta_hat};
    starts.insert(starts.end(), options.extra_starts.begin(), options.extra_starts.end());
    try {
        return solve_multistart(model, w, starts, so).best().solution.beta;
    } catch (const EmptyRootSet&) {
        return std::nullopt;
    }
}

BootstrapSample run_bootstrap(const Model& model, const Vector& beta_hat, const WeightScheme& scheme, std::size_t B,
                              std::uint64_t seed, const BootstrapOptions& options) {
    if (B < 1) throw ParameterError("bootstrap needs B >= 1");
    if (scheme.n != model.size()) throw ShapeError("weight scheme length differs from the model size");
    if (static_cast<std::size_t>(beta_hat.size()) != model.dim()) throw ShapeError("beta_hat has the wrong length");

    BootstrapSample out;
    out.method = "gbs-" + scheme.to_string();
    out.beta_hat = beta_hat;
    out.scheme = scheme;
    out.sigma2 = scheme_sigma2(scheme);
    out.draws.resize(B);
    if (options.keep_weights) out.weights.resize(B);

    const std::size_t threads = options.threads ? options.threads : default_thread_count();
    parallel_for(B, threads, [&](std::size_t b) {
        Rng rng = make_stream(seed, {b});
        WeightVector w = sample(scheme, rng);
        auto beta = solve_resample(model, beta_hat, w, options);
        if (!beta && options.fallback == FallbackPolicy::Throw)
            throw NonConvergence("resample " + std::to_string(b) + " did not converge", Solution{});
        out.draws[b] = beta ? Draw{*beta, DrawStatus::Converged} : Draw{beta_hat, DrawStatus::Fallback};
        if (options.keep_weights) out.weights[b] = std::move(w);
    });
    out.fallback_count = static_cast<std::size_t>(std::count_if(
        out.draws.begin(), out.draws.end(), [](const Draw& d) { return d.status == DrawStatus::Fallback; }));
    check_degenerate(out, options.max_fallback_rate);
    return out;
}

VarianceEstimate variance_estimate(const BootstrapSample& sample) {
    if (sample.draws.size() < 2) throw InsufficientSample("variance estimate needs at least 2 draws");
    const auto p = sample.beta_hat.size();
    VarianceEstimate ve;
    ve.v_gbs = Matrix::Zero(p, p);
    ve.mc_stderr = Matrix::Zero(p, p);
    if (sample.fallback_count == sample.draws.size() || !(sample.sigma2 > 0)) {
        ve.degenerate = true;
        return ve;
    }
    Matrix sum_sq = Matrix::Zero(p, p);
    for (const auto& d : sample.draws) {
        const Vector dev = d.beta - sample.beta_hat;
        const Matrix term = dev * dev.transpose() / sample.sigma2;
        ve.v_gbs += term;
        sum_sq += term.cwiseProduct(term);
    }
    const double B = static_cast<double>(sample.draws.size());
    ve.v_gbs /= B;
    const Matrix var = (sum_sq / B - ve.v_gbs.cwiseProduct(ve.v_gbs)) * (B / (B - 1));
    ve.mc_stderr = (var.cwiseMax(0.0) / B).cwiseSqrt();
    ve.degenerate = sample.fallback_rate() > 0.2;
    return ve;
}

VarianceEstimate exact_variance_enumeration(const Model& model, const Vector& beta_hat, const WeightScheme& scheme,
                                            const BootstrapOptions& options) {
    if (scheme.n != model.size()) throw ShapeError("weight scheme length differs from the model size");
    const auto atoms = enumerate_support(scheme);
    const auto p = beta_hat.size();
    VarianceEstimate ve;
    ve.v_gbs = Matrix::Zero(p, p);
    ve.mc_stderr = Matrix::Zero(p, p);
    ve.target += " (exact expectation over the weight support)";
    const double sigma2 = scheme_sigma2(scheme);
    if (!(sigma2 > 0)) return ve;
    std::vector<Matrix> terms(atoms.size());
    const std::size_t threads = options.threads ? options.threads : default_thread_count();
    parallel_for(atoms.size(), threads, [&](std::size_t k) {
        auto beta = solve_resample(model, beta_hat, atoms[k].weights, options);
        const Vector dev = beta ? Vector(*beta - beta_hat) : Vector(Vector::Zero(p));
        terms[k] = atoms[k].probability * dev * dev.transpose();
    });
    for (const auto& t : terms) ve.v_gbs += t;
    ve.v_gbs /= sigma2;
    return ve;
}

// ---------------------------------------------------------------------------

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw InsufficientSample("empty distribution");
    for (double v : values_)
        if (!std::isfinite(v)) throw ParameterError("distribution values must be finite");
    std::sort(values_.begin(), values_.end());
}

double EmpiricalDistribution::cdf(double x) const {
    const auto it = std::upper_bound(values_.begin(), values_.end(), x);
    return static_cast<double>(it - values_.begin()) / static_cast<double>(values_.size());
}

double EmpiricalDistribution::quantile(double q) const {
    if (!(q > 0 && q <= 1)) throw ParameterError("quantile level must lie in (0, 1]");
    const double m = static_cast<double>(values_.size());
    auto k = static_cast<std::size_t>(std::ceil(q * m - 1e-9));
    k = std::clamp<std::size_t>(k, 1, values_.size());
    return values_[k - 1];
}

double EmpiricalDistribution::mean() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

Interval percentile_ci(const std::vector<double>& values, double level, const std::function<double(double)>& map) {
    if (!(level > 0 && level < 1)) throw ParameterError("confidence level must lie in (0, 1)");
    if (values.size() < 10) throw InsufficientSample("percentile interval needs at least 10 draws");
    std::vector<double> v(values);
    if (map)
        for (auto& x : v) x = map(x);
    std::sort(v.begin(), v.end());
    const double B = static_cast<double>(v.size());
    const double a = 1.0 - level;
    auto lo = static_cast<std::size_t>(std::floor(B * a / 2 + 1e-9)) + 1;
    auto hi = static_cast<std::size_t>(std::ceil(B * (1 - a / 2) - 1e-9));
    lo = std::clamp<std::size_t>(lo, 1, v.size());
    hi = std::clamp<std::size_t>(hi, lo, v.size());
    return {v[lo - 1], v[hi - 1]};
}

std::vector<double> project(const BootstrapSample& sample, const std::function<double(const Vector&)>& fn) {
    std::vector<double> out;
    out.reserve(sample.draws.size());
    for (const auto& d : sample.draws) out.push_back(fn(d.beta));
    return out;
}

EmpiricalDistribution bootstrap_distribution(const Model& model, const BootstrapSample& sample) {
    if (model.dim() != 1) throw ShapeError("this form of F_Bn needs p = 1; supply a contrast");
    if (!(sample.sigma2 > 0)) throw ParameterError("weights have zero variance");
    Vector s;
    Matrix j;
    model.accumulate(model.unit_weights(), sample.beta_hat, s, &j);
    const double scale = std::sqrt(std::abs(j(0, 0))) / std::sqrt(sample.sigma2);
    return EmpiricalDistribution(
        project(sample, [&](const Vector& b) { return scale * (b(0) - sample.beta_hat(0)); }));
}

double projection_scale(const Model& model, const Vector& beta_hat, const Vector& contrast) {
    const auto p = static_cast<Eigen::Index>(model.dim());
    if (contrast.size() != p) throw ShapeError("contrast has the wrong length");
    if (std::abs(contrast.norm() - 1.0) > 1e-9) throw ParameterError("contrast must have unit norm");
    Matrix A = Matrix::Zero(p, p), S = Matrix::Zero(p, p);
    for (std::size_t i = 0; i < model.size(); ++i) {
        const Vector phi = model.score(i, beta_hat);
        A += model.jacobian(i, beta_hat);
        S += phi * phi.transpose();
    }
    const Vector at = A.transpose().fullPivLu().solve(contrast);
    return std::sqrt(std::max(0.0, at.dot(S * at)));
}

EmpiricalDistribution bootstrap_distribution(const Model& model, const BootstrapSample& sample, const Vector& contrast) {
    if (!(sample.sigma2 > 0)) throw ParameterError("weights have zero variance");
    const double s_hat = projection_scale(model, sample.beta_hat, contrast);
    if (!(s_hat > 0)) throw ParameterError("projection scale is zero");
    const double scale = 1.0 / (s_hat * std::sqrt(sample.sigma2));
    return EmpiricalDistribution(
        project(sample, [&](const Vector& b) { return scale * contrast.dot(b - sample.beta_hat); }));
}

StudentizedStats studentized_stats(const Model& model, const Vector& beta_hat, const BootstrapSample& sample,
                                   std::optional<double> beta0) {
    if (model.dim() != 1) throw ShapeError("studentized statistics need p = 1");
    if (sample.weights.size() != sample.draws.size())
        throw ParameterError("studentized statistics need the per-draw weights (keep_weights)");
    if (!(sample.sigma2 > 0)) throw ParameterError("weights have zero variance");
    const std::size_t n = model.size();
    const double nd = static_cast<double>(n);
    StudentizedStats st;
    std::vector<double> phi(n);
    double g2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        phi[i] = model.score(i, beta_hat)(0);
        st.gamma1_hat += model.jacobian(i, beta_hat)(0, 0);
        st.gamma2_hat += model.hessians(i, beta_hat)[0](0, 0);
        g2 += phi[i] * phi[i];
    }
    st.gamma1_hat /= nd;
    st.gamma2_hat /= nd;
    st.g_hat = std::sqrt(g2 / nd);
    st.v_gbs = variance_estimate(sample).scalar();
    const double sigma = std::sqrt(sample.sigma2);
    const double root_n = std::sqrt(nd);
    if (beta0 && st.g_hat > 0) {
        st.t_n = st.gamma1_hat / st.g_hat * root_n * (beta_hat(0) - *beta0) -
                 0.5 / root_n / (st.gamma1_hat * st.gamma1_hat) / st.g_hat * st.gamma2_hat * (nd * st.v_gbs);
    }
    st.g_hat_B.resize(sample.draws.size());
    st.t_nB.resize(sample.draws.size());
    for (std::size_t b = 0; b < sample.draws.size(); ++b) {
        double gb2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double W = (sample.weights[b][i] - 1.0) / sigma;
            gb2 += W * W * phi[i] * phi[i];
        }
        st.g_hat_B[b] = std::sqrt(gb2 / nd);
        if (!(st.g_hat_B[b] > 0)) continue;
        const double u = root_n * (sample.draws[b].beta(0) - beta_hat(0)) / sigma;
        st.t_nB[b] = st.gamma1_hat / st.g_hat_B[b] * u + 0.5 / root_n * sigma / st.g_hat_B[b] * st.gamma2_hat * u * u;
    }
    return st;
}

double ks_distance(const EmpiricalDistribution& a, const EmpiricalDistribution& b) {
    const auto& x = a.values();
    const auto& y = b.values();
    const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0;
    while (i < x.size() || j < y.size()) {
        double v;
        if (j >= y.size() || (i < x.size() && x[i] <= y[j]))
            v = x[i];
        else
            v = y[j];
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance_normal(const EmpiricalDistribution& a) {
    const auto& x = a.values();
    const double n = static_cast<double>(x.size());
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double F = normal_cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

}  // namespace gebs
