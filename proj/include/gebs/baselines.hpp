#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "gebs/engine.hpp"
#include "gebs/models.hpp"

namespace gebs {

enum class BaselineKind { ResidualBootstrap, WildBootstrap };

/// Refit used by the wild bootstrap for logistic data, where the perturbed
/// responses Y* live on the logit scale.
enum class WbGlmRefit {
    FractionalLogistic,  // logistic score equations with response expit(Y*)
    LogitOls,            // least squares of Y* on (1, x)
};

struct BaselineSpec {
    BaselineKind kind = BaselineKind::WildBootstrap;
    std::function<double(Rng&)> multiplier;  // standard normal when empty
    double delta = 0.001;                    // logit residual offset for binary responses
    WbGlmRefit glm_refit = WbGlmRefit::FractionalLogistic;

    void validate() const;
};

/// Centered residuals resampled with replacement, responses rebuilt (AR(1)
/// recursively from the observed X_0), model refit from beta_hat.
/// Supports LinearModel, Ar1Model and NlsModel.
BootstrapSample residual_bootstrap(const Model& model, const Vector& beta_hat, std::size_t B, std::uint64_t seed,
                                   const BootstrapOptions& options = {});

/// Residuals multiplied by i.i.d. draws of spec.multiplier. Supports
/// LinearModel, Ar1Model, NlsModel and trial-level LogisticModel.
BootstrapSample wild_bootstrap(const Model& model, const Vector& beta_hat, std::size_t B, std::uint64_t seed,
                               const BaselineSpec& spec = {}, const BootstrapOptions& options = {});

/// Dispatches on spec.kind.
BootstrapSample run_baseline(const Model& model, const Vector& beta_hat, std::size_t B, std::uint64_t seed,
                             const BaselineSpec& spec, const BootstrapOptions& options = {});

}  // namespace gebs
