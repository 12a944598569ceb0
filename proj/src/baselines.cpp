#include "gebs/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

namespace gebs {

namespace {

/// Builds the resampled model for draw b from a stream.
using Rebuild = std::function<std::unique_ptr<Model>(Rng&)>;

BootstrapSample drive(const std::string& method, const Model& model, const Vector& beta_hat, std::size_t B,
                      std::uint64_t seed, const Rebuild& rebuild, const BootstrapOptions& options) {
    if (B < 1) throw ParameterError("bootstrap needs B >= 1");
    BootstrapSample out;
    out.method = method;
    out.beta_hat = beta_hat;
    out.scheme = WeightScheme::unit(model.size());
    out.sigma2 = 1.0;
    out.draws.resize(B);
    const std::size_t threads = options.threads ? options.threads : default_thread_count();
    parallel_for(B, threads, [&](std::size_t b) {
        Rng rng = make_stream(seed, {b});
        const auto star = rebuild(rng);
        auto beta = solve_resample(*star, beta_hat, star->unit_weights(), options);
        if (!beta && options.fallback == FallbackPolicy::Throw)
            throw NonConvergence(method + " resample " + std::to_string(b) + " did not converge", Solution{});
        out.draws[b] = beta ? Draw{*beta, DrawStatus::Converged} : Draw{beta_hat, DrawStatus::Fallback};
    });
    out.fallback_count = static_cast<std::size_t>(std::count_if(
        out.draws.begin(), out.draws.end(), [](const Draw& d) { return d.status == DrawStatus::Fallback; }));
    check_degenerate(out, options.max_fallback_rate);
    return out;
}

std::vector<double> centered(std::vector<double> e) {
    double m = 0;
    for (double v : e) m += v;
    m /= static_cast<double>(e.size());
    for (auto& v : e) v -= m;
    return e;
}

std::vector<double> resample(const std::vector<double>& e, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, e.size() - 1);
    std::vector<double> out(e.size());
    for (auto& v : out) v = e[pick(rng)];
    return out;
}

Vector ar1_rebuild(double x0, double phi, const std::vector<double>& e) {
    Vector x(static_cast<Eigen::Index>(e.size()) + 1);
    x(0) = x0;
    for (std::size_t t = 1; t <= e.size(); ++t) {
        const auto k = static_cast<Eigen::Index>(t);
        x(k) = phi * x(k - 1) + e[t - 1];
    }
    return x;
}

struct Residuals {
    std::vector<double> fit;
    std::vector<double> e;
};

// Per-slot fitted values and residuals for the models with additive errors.
Residuals additive_residuals(const Model& model, const Vector& beta_hat) {
    Residuals r;
    if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
        const Vector f = lin->fitted(beta_hat);
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            r.fit.push_back(f(i));
            r.e.push_back(lin->data().y(i) - f(i));
        }
    } else if (const auto* ar = dynamic_cast<const Ar1Model*>(&model)) {
        const auto& x = ar->data().series;
        for (Eigen::Index t = 1; t < x.size(); ++t) {
            r.fit.push_back(beta_hat(0) * x(t - 1));
            r.e.push_back(x(t) - beta_hat(0) * x(t - 1));
        }
    } else if (const auto* nls = dynamic_cast<const NlsModel*>(&model)) {
        for (std::size_t i = 0; i < nls->size(); ++i) {
            r.fit.push_back(nls->mean_function(i, beta_hat));
            r.e.push_back(nls->data().y[i] - r.fit.back());
        }
    } else {
        throw UnsupportedModel("model '" + model.name() + "' has no additive residual structure");
    }
    return r;
}

// Model with the same design and responses fit + e_star.
std::unique_ptr<Model> with_errors(const Model& model, const Vector& beta_hat, const Residuals& r,
                                   const std::vector<double>& e_star) {
    if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
        LinearData d = lin->data();
        for (std::size_t i = 0; i < e_star.size(); ++i) d.y(static_cast<Eigen::Index>(i)) = r.fit[i] + e_star[i];
        return std::make_unique<LinearModel>(std::move(d));
    }
    if (const auto* ar = dynamic_cast<const Ar1Model*>(&model)) {
        Ar1Data d;
        d.series = ar1_rebuild(ar->data().series(0), beta_hat(0), e_star);
        d.meta = ar->data().meta;
        return std::make_unique<Ar1Model>(std::move(d));
    }
    const auto* nls = dynamic_cast<const NlsModel*>(&model);
    std::vector<double> y(e_star.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = r.fit[i] + e_star[i];
    return std::make_unique<NlsModel>(nls->with_response(std::move(y)));
}

}  // namespace

void BaselineSpec::validate() const {
    if (!(delta > 0)) throw ParameterError("wild bootstrap delta must be positive");
}

BootstrapSample residual_bootstrap(const Model& model, const Vector& beta_hat, std::size_t B, std::uint64_t seed,
                                   const BootstrapOptions& options) {
    const Residuals r = additive_residuals(model, beta_hat);
    const std::vector<double> pool = centered(r.e);
    return drive("rb", model, beta_hat, B, seed,
                 [&](Rng& rng) { return with_errors(model, beta_hat, r, resample(pool, rng)); }, options);
}

BootstrapSample wild_bootstrap(const Model& model, const Vector& beta_hat, std::size_t B, std::uint64_t seed,
                               const BaselineSpec& spec, const BootstrapOptions& options) {
    spec.validate();
    auto draw_multiplier = [&](Rng& rng) {
        if (spec.multiplier) return spec.multiplier(rng);
        std::normal_distribution<double> z(0.0, 1.0);
        return z(rng);
    };

    if (const auto* lg = dynamic_cast<const LogisticModel*>(&model)) {
        // Working logits t_tilde from offset binary responses, residuals on the logit scale.
        const auto& obs = lg->observations();
        std::vector<double> t_hat(obs.size()), resid(obs.size());
        for (std::size_t i = 0; i < obs.size(); ++i) {
            if (obs[i].m != 1.0) throw UnsupportedModel("wild bootstrap for logistic data needs trial-level slots");
            const double p = (obs[i].y + spec.delta) / (1.0 + 2.0 * spec.delta);
            t_hat[i] = beta_hat(0) + beta_hat(1) * obs[i].x;
            resid[i] = logit(p) - t_hat[i];
        }
        return drive("wb", model, beta_hat, B, seed,
                     [&](Rng& rng) -> std::unique_ptr<Model> {
                         std::vector<double> y_star(obs.size());
                         for (std::size_t i = 0; i < obs.size(); ++i) y_star[i] = t_hat[i] + draw_multiplier(rng) * resid[i];
                         if (spec.glm_refit == WbGlmRefit::LogitOls) {
                             LinearData d;
                             d.x.resize(static_cast<Eigen::Index>(obs.size()), 2);
                             d.y.resize(static_cast<Eigen::Index>(obs.size()));
                             for (std::size_t i = 0; i < obs.size(); ++i) {
                                 const auto k = static_cast<Eigen::Index>(i);
                                 d.x(k, 0) = 1.0;
                                 d.x(k, 1) = obs[i].x;
                                 d.y(k) = y_star[i];
                             }
                             return std::make_unique<LinearModel>(std::move(d));
                         }
                         std::vector<LogisticModel::Obs> o(obs.size());
                         for (std::size_t i = 0; i < obs.size(); ++i) o[i] = {obs[i].x, expit(y_star[i]), 1.0};
                         return std::make_unique<LogisticModel>(std::move(o));
                     },
                     options);
    }

    const Residuals r = additive_residuals(model, beta_hat);
    return drive("wb", model, beta_hat, B, seed,
                 [&](Rng& rng) {
                     std::vector<double> e_star(r.e.size());
                     for (std::size_t i = 0; i < e_star.size(); ++i) e_star[i] = draw_multiplier(rng) * r.e[i];
                     return with_errors(model, beta_hat, r, e_star);
                 },
                 options);
}

BootstrapSample run_baseline(const Model& model, const Vector& beta_hat, std::size_t B, std::uint64_t seed,
                             const BaselineSpec& spec, const BootstrapOptions& options) {
    return spec.kind == BaselineKind::ResidualBootstrap ? residual_bootstrap(model, beta_hat, B, seed, options)
                                                        : wild_bootstrap(model, beta_hat, B, seed, spec, options);
}

}  // namespace gebs
