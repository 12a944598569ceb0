#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gebs/rng.hpp"

namespace gebs {

enum class SchemeKind {
    Multinomial,
    MOutOfN,
    DeleteDJackknife,
    DownweightDJackknife,
    Dirichlet,
    IidUniform,
    IidExponential,
    Unit,  // w == 1, the degenerate law
};

/// An exchangeable weight law of length n with E[w_i] = 1.
///
/// Continuous laws are normalized by their mean: Dirichlet draws are scaled
/// by n, uniform draws on [lo, hi] are divided by (lo + hi) / 2 and
/// exponential draws are multiplied by the rate. m-out-of-n counts are
/// multiplied by n / m.
struct WeightScheme {
    SchemeKind kind = SchemeKind::Multinomial;
    std::size_t n = 1;
    std::size_t count = 0;  // m for MOutOfN, d for the jackknives
    double alpha = 1.0;     // Dirichlet concentration
    double lo = 0.0;        // IidUniform support
    double hi = 0.0;
    double rate = 1.0;      // IidExponential

    static WeightScheme multinomial(std::size_t n);
    static WeightScheme m_out_of_n(std::size_t n, std::size_t m);
    static WeightScheme delete_d(std::size_t n, std::size_t d);
    static WeightScheme downweight_d(std::size_t n, std::size_t d);
    static WeightScheme dirichlet(std::size_t n, double alpha);
    static WeightScheme uniform(std::size_t n, double lo, double hi);
    static WeightScheme exponential(std::size_t n, double rate);
    static WeightScheme unit(std::size_t n);

    /// Throws ParameterError when the parameters do not define a valid law.
    void validate() const;

    /// Same law, different length.
    WeightScheme with_n(std::size_t new_n) const;

    /// Weight sum is the nonrandom constant n.
    bool fixed_sum() const;
    bool finite_support() const;

    /// Canonical CLI string, e.g. "jackknife:d=2".
    std::string to_string() const;
};

bool operator==(const WeightScheme& a, const WeightScheme& b);

/// Parses a CLI scheme string (`multinomial`, `jackknife:d=2`,
/// `downweight:d=2`, `dirichlet:alpha=1`, `uniform:0.5,1.5`, `exp:1`,
/// `moon:m=10`, `unit`) for weight vectors of length n.
WeightScheme parse_scheme(const std::string& spec, std::size_t n);

using WeightVector = std::vector<double>;

/// One draw from the scheme's law.
WeightVector sample(const WeightScheme& scheme, Rng& rng);

/// Index pattern (i_1, ..., i_k) of a mixed moment c_{i_1...i_k}, sorted descending.
using MomentPattern = std::vector<int>;

std::string pattern_name(const MomentPattern& pattern);

/// All patterns with positive parts summing to `order`, e.g. order 3 gives
/// {3}, {2,1}, {1,1,1}.
std::vector<MomentPattern> patterns_of_order(int order);

/// Moments of the standardized weights W_i = (w_i - 1) / sigma_n.
/// A pattern that needs more distinct indices than n, or any pattern of a
/// degenerate law, is absent from the maps.
struct WeightMoments {
    double sigma2 = 0.0;
    double c11 = 0.0;
    double c22 = 0.0;
    double c4 = 0.0;
    std::map<MomentPattern, double> third_order;
    std::map<MomentPattern, double> fourth_order;
    bool standardized_available = false;  // false when sigma2 == 0
};

/// Exact moments from closed-form mixed raw moments of each law.
WeightMoments theoretical_moments(const WeightScheme& scheme);

/// E[prod_j (w_j)^{k_j}] over distinct indices j, in closed form.
double raw_mixed_moment(const WeightScheme& scheme, const std::vector<int>& exponents);

/// Plug-in moments averaged over all ordered tuples of distinct indices.
/// Centering uses the known mean 1. `probabilities`, when given, weights the
/// draws (for exact expectations over an enumerated support).
WeightMoments empirical_moments(const std::vector<WeightVector>& draws,
                                const std::vector<double>& probabilities = {});

struct SupportAtom {
    WeightVector weights;
    double probability;
};

inline constexpr std::size_t kDefaultSupportCap = 1'000'000;

/// Exhaustive support of a finite law. Throws UnsupportedScheme for
/// continuous laws or when the atom count exceeds `cap`.
std::vector<SupportAtom> enumerate_support(const WeightScheme& scheme,
                                           std::size_t cap = kDefaultSupportCap);

// ---------------------------------------------------------------------------
// Condition checks over an n-grid.

enum class Verdict { Pass, Fail, Undetermined };

std::string to_string(Verdict v);

/// One rate comparison: the log-log slope of |value| / bound against n.
struct RateEvidence {
    std::string quantity;   // e.g. "sigma2 / min(n/p, n)"
    std::string relation;   // "o(1)", "O(1)", "->1", "in C+", "->0"
    std::vector<double> values;
    double slope = 0.0;
    Verdict verdict = Verdict::Undetermined;
};

struct ConditionClause {
    std::string name;  // "2.1", "2.2", ...
    Verdict verdict = Verdict::Undetermined;
    std::vector<RateEvidence> evidence;
};

struct ConditionReport {
    std::vector<std::size_t> n_grid;
    std::vector<WeightMoments> moments;  // per grid point
    Verdict bw = Verdict::Undetermined;
    Verdict cltw = Verdict::Undetermined;
    Verdict vw_a = Verdict::Undetermined;
    Verdict vw_b = Verdict::Undetermined;
    std::vector<ConditionClause> clauses;

    bool variance_conditions() const { return bw == Verdict::Pass && (vw_a == Verdict::Pass || vw_b == Verdict::Pass); }
};

/// Constants of the finite-n rate checker.
struct ConditionCheckOptions {
    double slope_tolerance = 0.2;   // o(.) needs slope <= -tol, O(.) needs slope <= +tol
    double limit_tolerance = 0.05;  // c22 -> 1 needs |c22 - 1| <= this at the largest n
    double zero_floor = 1e-14;      // magnitudes below this count as exactly zero
    std::size_t m0 = 2;             // set W: at least m0 weights above k2
    double k2 = 0.25;
    std::size_t w_set_draws = 2000; // Monte Carlo draws for P_B[W]
    std::uint64_t seed = 20050101;
};

/// Evaluates BW (2.1)-(2.3), CLTW (2.4) and VW (2.5)-(2.7) over an increasing
/// n-grid. `scheme_at(n)` builds the law at each n (so d may depend on n),
/// `p_rule(n)` gives the parameter dimension; a_n^2 is taken proportional to n.
ConditionReport check_conditions(const std::function<WeightScheme(std::size_t)>& scheme_at,
                                 const std::vector<std::size_t>& n_grid,
                                 const std::function<double(std::size_t)>& p_rule,
                                 const ConditionCheckOptions& options = {});

}  // namespace gebs
