#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "gebs/errors.hpp"
#include "gebs/models.hpp"

namespace gebs {

struct SolveOptions {
    double tol = 1e-10;              // on ||score||_inf / (1 + ||score(init)||_inf)
    std::size_t max_iter = 100;
    std::size_t max_halvings = 30;
    double step_tol = 1e-6;          // final Newton step must be below step_tol * (1 + ||beta||_inf)
    double max_condition = 1e12;
    std::optional<Vector> init;      // model default when empty

    void validate() const;
};

struct Solution {
    Vector beta;
    double residual_norm = 0.0;
    std::size_t iterations = 0;
    Matrix jacobian_at_root;  // sum_i w_i phi_1i(beta)
    bool converged = false;
};

class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, Solution last) : Error(what), last_(std::move(last)) {}
    const Solution& last() const noexcept { return last_; }

private:
    Solution last_;
};

/// sum_i w_i phi_i(beta).
Vector weighted_score(const Model& model, const std::vector<double>& weights, const Vector& beta);

/// Damped Newton on the weighted score with step halving on ||score||^2 and a
/// Levenberg-Marquardt fallback. Jacobian columns are equilibrated first.
Solution solve_weighted(const Model& model, const std::vector<double>& weights, const SolveOptions& options = {});

struct Root {
    Solution solution;
    std::optional<double> objective;  // weighted Psi for least-squares models
};

struct RootSet {
    std::vector<Root> roots;

    /// Root with the smallest objective (the first root when objectives are absent).
    const Root& best() const;
};

/// Solves from every start and keeps distinct converged roots (radius
/// max(1e-6, 1e-6 ||beta||_inf)). Throws EmptyRootSet when no start converges.
RootSet solve_multistart(const Model& model, const std::vector<double>& weights, const std::vector<Vector>& starts,
                         const SolveOptions& options = {});

}  // namespace gebs
