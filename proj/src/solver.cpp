#include "gebs/solver.hpp"

#include <cmath>
#include <limits>

namespace gebs {

namespace {

double inf_norm(const Vector& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

struct Eval {
    Vector score;
    Matrix jac;
};

Eval evaluate(const Model& model, const std::vector<double>& w, const Vector& beta) {
    Eval e;
    model.accumulate(w, beta, e.score, &e.jac);
    if (!e.score.allFinite() || !e.jac.allFinite()) throw DomainError(0, "non-finite score");
    return e;
}

}  // namespace

void SolveOptions::validate() const {
    if (!(tol > 0)) throw ParameterError("solver tolerance must be positive");
    if (max_iter < 1) throw ParameterError("solver needs max_iter >= 1");
    if (!(step_tol > 0)) throw ParameterError("step tolerance must be positive");
}

Vector weighted_score(const Model& model, const std::vector<double>& weights, const Vector& beta) {
    Vector s;
    model.accumulate(weights, beta, s, nullptr);
    return s;
}

Solution solve_weighted(const Model& model, const std::vector<double>& weights, const SolveOptions& opt) {
    opt.validate();
    if (weights.size() != model.size()) throw ShapeError("weights do not match the model size");
    Vector beta = opt.init ? *opt.init : model.default_start();
    if (static_cast<std::size_t>(beta.size()) != model.dim()) throw ShapeError("initial value has the wrong length");
    if (!model.in_domain(beta)) throw ParameterError("initial value outside the model domain");

    Eval cur = evaluate(model, weights, beta);
    const double scale = 1.0 + inf_norm(cur.score);
    const bool least_squares = model.objective(weights, beta).has_value();

    Solution sol;
    auto snapshot = [&](std::size_t iters, bool converged) {
        sol.beta = beta;
        sol.residual_norm = inf_norm(cur.score) / scale;
        sol.iterations = iters;
        sol.jacobian_at_root = cur.jac;
        sol.converged = converged;
        return sol;
    };

    for (std::size_t iter = 0; iter <= opt.max_iter; ++iter) {
        // Column equilibration makes the condition check and the solve invariant
        // to parameter units.
        Vector colscale = cur.jac.colwise().norm().transpose();
        for (Eigen::Index j = 0; j < colscale.size(); ++j)
            if (!(colscale(j) > 0)) colscale(j) = 1.0;
        const Matrix js = cur.jac * colscale.cwiseInverse().asDiagonal();
        Eigen::JacobiSVD<Matrix> svd(js, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const auto& sv = svd.singularValues();
        const double smax = sv.size() ? sv(0) : 0.0;
        const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
        const double cond = smin > 0 ? smax / smin : std::numeric_limits<double>::infinity();
        const double res = inf_norm(cur.score) / scale;
        const Vector delta = -(svd.solve(cur.score).cwiseQuotient(colscale));
        const bool small_step = delta.allFinite() && inf_norm(delta) <= opt.step_tol * (1.0 + inf_norm(beta));
        if (!(cond <= opt.max_condition)) {
            if (res <= opt.tol && small_step && smax > 0) return snapshot(iter, true);
            // Singular at the start is a property of the problem; later it means the iterates diverged.
            if (iter == 0) throw SingularSystem(cond);
            throw NonConvergence("iterates reached a singular Jacobian (condition estimate " + std::to_string(cond) + ")",
                                 snapshot(iter, false));
        }
        if (res <= opt.tol && small_step) return snapshot(iter, true);
        if (iter == opt.max_iter) break;

        // Least-squares models descend the objective, whose gradient is -2 score;
        // other models descend ||score||^2.
        auto merit = [&](const Vector& at, const Eval& e) {
            if (least_squares) return *model.objective(weights, at);
            return e.score.squaredNorm();
        };
        const double f0 = merit(beta, cur);
        auto try_step = [&](const Vector& step) {
            const Vector cand = beta + step;
            if (!model.in_domain(cand)) return false;
            try {
                Eval next = evaluate(model, weights, cand);
                if (merit(cand, next) < f0) {
                    beta = cand;
                    cur = std::move(next);
                    return true;
                }
            } catch (const DomainError&) {
            }
            return false;
        };

        bool accepted = false;
        const bool descent = !least_squares || cur.score.dot(delta) > 0;
        double t = 1.0;
        for (std::size_t h = 0; descent && h <= opt.max_halvings && !accepted; ++h, t *= 0.5)
            accepted = try_step(t * delta);

        // Levenberg-Marquardt steps when the Newton direction stalls.
        if (!accepted) {
            const Vector dinv = colscale.cwiseInverse();
            Matrix h;
            Vector g;
            double lambda;
            if (least_squares) {
                h = -(dinv.asDiagonal() * js);
                h = 0.5 * (h + h.transpose()).eval();
                g = -(dinv.asDiagonal() * cur.score);
                Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
                const double lo = eig.eigenvalues().minCoeff();
                const double hi = eig.eigenvalues().cwiseAbs().maxCoeff();
                lambda = std::max(0.0, -lo) + 1e-8 * std::max(hi, 1e-300);
            } else {
                h = js.transpose() * js;
                g = js.transpose() * cur.score;
                lambda = 1e-6 * smax * smax;
            }
            for (std::size_t k = 0; k <= opt.max_halvings && !accepted; ++k, lambda *= 10.0) {
                const Matrix a = h + lambda * Matrix::Identity(h.rows(), h.cols());
                const Vector step = -(a.ldlt().solve(g).cwiseProduct(dinv));
                if (step.allFinite()) accepted = try_step(step);
            }
        }
        if (!accepted) {
            // No representable decrease: a stationary point at working precision.
            if (small_step && res <= std::sqrt(opt.tol)) return snapshot(iter, true);
            throw NonConvergence("line search found no decrease after " + std::to_string(opt.max_halvings) +
                                     " halvings",
                                 snapshot(iter, false));
        }
    }
    throw NonConvergence("no convergence after " + std::to_string(opt.max_iter) + " iterations",
                         snapshot(opt.max_iter, false));
}

const Root& RootSet::best() const {
    if (roots.empty()) throw EmptyRootSet("root set is empty");
    const Root* out = &roots.front();
    for (const auto& r : roots)
        if (r.objective && out->objective && *r.objective < *out->objective) out = &r;
    return *out;
}

RootSet solve_multistart(const Model& model, const std::vector<double>& weights, const std::vector<Vector>& starts,
                         const SolveOptions& options) {
    if (starts.empty()) throw ParameterError("multistart needs at least one start");
    RootSet set;
    for (const auto& s : starts) {
        SolveOptions o = options;
        o.init = s;
        Solution sol;
        try {
            sol = solve_weighted(model, weights, o);
        } catch (const NonConvergence&) {
            continue;
        } catch (const SingularSystem&) {
            continue;
        } catch (const DomainError&) {
            continue;
        } catch (const ParameterError&) {
            continue;
        }
        bool duplicate = false;
        for (const auto& r : set.roots) {
            const double radius = std::max(1e-6, 1e-6 * inf_norm(r.solution.beta));
            if (inf_norm(r.solution.beta - sol.beta) <= radius) {
                duplicate = true;
                break;
            }
        }
        if (duplicate) continue;
        Root root{sol, model.objective(weights, sol.beta)};
        set.roots.push_back(std::move(root));
    }
    if (set.roots.empty()) throw EmptyRootSet("no start converged");
    return set;
}

}  // namespace gebs
