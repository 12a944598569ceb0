#include "gebs/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gebs/errors.hpp"

namespace gebs {

namespace {

using Real = long double;

Real falling(Real x, int k) {
    Real r = 1;
    for (int i = 0; i < k; ++i) r *= (x - i);
    return r;
}

Real rising(Real x, int k) {
    Real r = 1;
    for (int i = 0; i < k; ++i) r *= (x + i);
    return r;
}

Real binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    Real r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Stirling numbers of the second kind, S(k, j) for k <= 8.
Real stirling2(int k, int j) {
    static const auto table = [] {
        std::vector<std::vector<Real>> s(9, std::vector<Real>(9, 0));
        s[0][0] = 1;
        for (int a = 1; a <= 8; ++a)
            for (int b = 1; b <= a; ++b) s[a][b] = b * s[a - 1][b] + s[a - 1][b - 1];
        return s;
    }();
    if (k < 0 || j < 0 || k > 8 || j > 8) return 0;
    return table[k][j];
}

// Multinomial(m; 1/n, ..., 1/n) counts: E[prod_j X_j^{k_j}] through factorial moments.
Real multinomial_count_moment(std::size_t n, std::size_t m, const std::vector<int>& k) {
    Real total = 0;
    std::vector<int> l(k.size(), 1);
    // iterate l_j in [1, k_j]
    for (;;) {
        Real coef = 1;
        int L = 0;
        for (std::size_t j = 0; j < k.size(); ++j) {
            coef *= stirling2(k[j], l[j]);
            L += l[j];
        }
        if (coef != 0) total += coef * falling(static_cast<Real>(m), L) / std::pow(static_cast<Real>(n), L);
        std::size_t pos = 0;
        while (pos < k.size() && ++l[pos] > k[pos]) {
            l[pos] = 1;
            ++pos;
        }
        if (pos == k.size()) break;
    }
    return total;
}

Real raw_moment_impl(const WeightScheme& s, const std::vector<int>& k) {
    if (k.empty()) return 1;
    const int r = static_cast<int>(k.size());
    const int K = std::accumulate(k.begin(), k.end(), 0);
    const Real n = static_cast<Real>(s.n);
    switch (s.kind) {
        case SchemeKind::Unit:
            return 1;
        case SchemeKind::Multinomial:
            return multinomial_count_moment(s.n, s.n, k);
        case SchemeKind::MOutOfN: {
            Real scale = n / static_cast<Real>(s.count);
            return std::pow(scale, K) * multinomial_count_moment(s.n, s.count, k);
        }
        case SchemeKind::DeleteDJackknife: {
            Real c = n / (n - static_cast<Real>(s.count));
            return std::pow(c, K) * falling(n - s.count, r) / falling(n, r);
        }
        case SchemeKind::DownweightDJackknife: {
            const Real d = static_cast<Real>(s.count);
            const Real low = d / n, high = (n + d) / n;
            Real total = 0;
            for (unsigned mask = 0; mask < (1u << r); ++mask) {
                int deleted = 0;
                Real prod = 1;
                for (int j = 0; j < r; ++j) {
                    if (mask & (1u << j)) {
                        ++deleted;
                        prod *= std::pow(low, k[j]);
                    } else {
                        prod *= std::pow(high, k[j]);
                    }
                }
                total += prod * falling(d, deleted) * falling(n - d, r - deleted) / falling(n, r);
            }
            return total;
        }
        case SchemeKind::Dirichlet: {
            Real num = 1;
            for (int kj : k) num *= rising(s.alpha, kj);
            return std::pow(n, K) * num / rising(n * s.alpha, K);
        }
        case SchemeKind::IidUniform: {
            const Real mu = (static_cast<Real>(s.lo) + s.hi) / 2;
            Real prod = 1;
            for (int kj : k) {
                Real m = (std::pow(static_cast<Real>(s.hi), kj + 1) - std::pow(static_cast<Real>(s.lo), kj + 1)) /
                         ((kj + 1) * (static_cast<Real>(s.hi) - s.lo));
                prod *= m / std::pow(mu, kj);
            }
            return prod;
        }
        case SchemeKind::IidExponential: {
            Real prod = 1;
            for (int kj : k) prod *= std::tgamma(static_cast<Real>(kj + 1));
            return prod;
        }
    }
    return 0;
}

// E[prod_j (w_j - 1)^{k_j}] by binomial expansion over the raw mixed moments.
Real central_moment(const WeightScheme& s, const std::vector<int>& k) {
    Real total = 0;
    std::vector<int> l(k.size(), 0);
    for (;;) {
        Real coef = 1;
        std::vector<int> raw;
        for (std::size_t j = 0; j < k.size(); ++j) {
            coef *= binomial(k[j], l[j]) * (((k[j] - l[j]) % 2) ? -1 : 1);
            if (l[j] > 0) raw.push_back(l[j]);
        }
        total += coef * raw_moment_impl(s, raw);
        std::size_t pos = 0;
        while (pos < k.size() && ++l[pos] > k[pos]) {
            l[pos] = 0;
            ++pos;
        }
        if (pos == k.size()) break;
    }
    return total;
}

using Partition = std::vector<std::vector<int>>;

void build_partitions(int next, int r, Partition& current, std::vector<Partition>& out) {
    if (next == r) {
        out.push_back(current);
        return;
    }
    for (std::size_t b = 0; b < current.size(); ++b) {
        current[b].push_back(next);
        build_partitions(next + 1, r, current, out);
        current[b].pop_back();
    }
    current.push_back({next});
    build_partitions(next + 1, r, current, out);
    current.pop_back();
}

const std::vector<Partition>& partitions_of(int r) {
    static const auto all = [] {
        std::vector<std::vector<Partition>> v(5);
        for (int q = 1; q <= 4; ++q) {
            Partition cur;
            build_partitions(0, q, cur, v[q]);
        }
        return v;
    }();
    return all.at(r);
}

// Sum over ordered tuples of distinct indices of prod_t x_{i_t}^{k_t}, by
// Moebius inversion over set partitions of the tuple positions.
Real distinct_tuple_sum(const std::vector<Real>& power_sums, const std::vector<int>& k) {
    Real total = 0;
    for (const auto& part : partitions_of(static_cast<int>(k.size()))) {
        Real term = 1;
        for (const auto& block : part) {
            int deg = 0;
            for (int t : block) deg += k[t];
            term *= power_sums.at(deg);
            const int b = static_cast<int>(block.size());
            term *= ((b - 1) % 2 ? -1 : 1) * std::tgamma(static_cast<Real>(b));
        }
        total += term;
    }
    return total;
}

const std::vector<MomentPattern>& all_patterns() {
    static const std::vector<MomentPattern> v = [] {
        std::vector<MomentPattern> out;
        for (int order = 2; order <= 4; ++order)
            for (auto& p : patterns_of_order(order)) out.push_back(p);
        return out;
    }();
    return v;
}

WeightMoments assemble(std::size_t n, const std::function<Real(const MomentPattern&)>& central) {
    WeightMoments m;
    m.sigma2 = static_cast<double>(central({2}));
    if (m.sigma2 <= 0) {
        m.sigma2 = 0;
        return m;
    }
    m.standardized_available = true;
    const Real sigma = std::sqrt(static_cast<Real>(m.sigma2));
    auto standardized = [&](const MomentPattern& p) {
        const int K = std::accumulate(p.begin(), p.end(), 0);
        return static_cast<double>(central(p) / std::pow(sigma, K));
    };
    if (n >= 2) m.c11 = standardized({1, 1});
    if (n >= 2) m.c22 = standardized({2, 2});
    m.c4 = standardized({4});
    for (auto& p : patterns_of_order(3))
        if (p.size() <= n) m.third_order[p] = standardized(p);
    for (auto& p : patterns_of_order(4))
        if (p.size() <= n) m.fourth_order[p] = standardized(p);
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------

WeightScheme WeightScheme::multinomial(std::size_t n) {
    WeightScheme s;
    s.kind = SchemeKind::Multinomial;
    s.n = n;
    s.validate();
    return s;
}

WeightScheme WeightScheme::m_out_of_n(std::size_t n, std::size_t m) {
    WeightScheme s;
    s.kind = SchemeKind::MOutOfN;
    s.n = n;
    s.count = m;
    s.validate();
    return s;
}

WeightScheme WeightScheme::delete_d(std::size_t n, std::size_t d) {
    WeightScheme s;
    s.kind = SchemeKind::DeleteDJackknife;
    s.n = n;
    s.count = d;
    s.validate();
    return s;
}

WeightScheme WeightScheme::downweight_d(std::size_t n, std::size_t d) {
    WeightScheme s;
    s.kind = SchemeKind::DownweightDJackknife;
    s.n = n;
    s.count = d;
    s.validate();
    return s;
}

WeightScheme WeightScheme::dirichlet(std::size_t n, double alpha) {
    WeightScheme s;
    s.kind = SchemeKind::Dirichlet;
    s.n = n;
    s.alpha = alpha;
    s.validate();
    return s;
}

WeightScheme WeightScheme::uniform(std::size_t n, double lo, double hi) {
    WeightScheme s;
    s.kind = SchemeKind::IidUniform;
    s.n = n;
    s.lo = lo;
    s.hi = hi;
    s.validate();
    return s;
}

WeightScheme WeightScheme::exponential(std::size_t n, double rate) {
    WeightScheme s;
    s.kind = SchemeKind::IidExponential;
    s.n = n;
    s.rate = rate;
    s.validate();
    return s;
}

WeightScheme WeightScheme::unit(std::size_t n) {
    WeightScheme s;
    s.kind = SchemeKind::Unit;
    s.n = n;
    s.validate();
    return s;
}

void WeightScheme::validate() const {
    if (n < 1) throw ParameterError("weight scheme needs n >= 1");
    switch (kind) {
        case SchemeKind::MOutOfN:
            if (count < 1) throw ParameterError("m-out-of-n needs m >= 1");
            break;
        case SchemeKind::DeleteDJackknife:
        case SchemeKind::DownweightDJackknife:
            if (count < 1 || count >= n)
                throw ParameterError("jackknife needs 1 <= d < n (d=" + std::to_string(count) +
                                     ", n=" + std::to_string(n) + ")");
            break;
        case SchemeKind::Dirichlet:
            if (!(alpha > 0) || !std::isfinite(alpha)) throw ParameterError("dirichlet needs alpha > 0");
            break;
        case SchemeKind::IidUniform:
            if (!(lo >= 0)) throw ParameterError("uniform weights need lo >= 0");
            if (!(hi > lo) || !std::isfinite(hi)) throw ParameterError("uniform weights need hi > lo");
            break;
        case SchemeKind::IidExponential:
            if (!(rate > 0) || !std::isfinite(rate)) throw ParameterError("exponential weights need rate > 0");
            break;
        default:
            break;
    }
}

WeightScheme WeightScheme::with_n(std::size_t new_n) const {
    WeightScheme s = *this;
    s.n = new_n;
    s.validate();
    return s;
}

bool WeightScheme::fixed_sum() const {
    switch (kind) {
        case SchemeKind::Multinomial:
        case SchemeKind::MOutOfN:
        case SchemeKind::DeleteDJackknife:
        case SchemeKind::DownweightDJackknife:
        case SchemeKind::Unit:
            return true;
        default:
            return false;
    }
}

bool WeightScheme::finite_support() const {
    return fixed_sum();
}

std::string WeightScheme::to_string() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind) {
        case SchemeKind::Multinomial: os << "multinomial"; break;
        case SchemeKind::MOutOfN: os << "moon:m=" << count; break;
        case SchemeKind::DeleteDJackknife: os << "jackknife:d=" << count; break;
        case SchemeKind::DownweightDJackknife: os << "downweight:d=" << count; break;
        case SchemeKind::Dirichlet: os << "dirichlet:alpha=" << alpha; break;
        case SchemeKind::IidUniform: os << "uniform:" << lo << "," << hi; break;
        case SchemeKind::IidExponential: os << "exp:" << rate; break;
        case SchemeKind::Unit: os << "unit"; break;
    }
    return os.str();
}

bool operator==(const WeightScheme& a, const WeightScheme& b) {
    return a.to_string() == b.to_string() && a.n == b.n;
}

WeightScheme parse_scheme(const std::string& spec, std::size_t n) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);
    auto value_of = [&](const std::string& key) -> std::string {
        if (args.empty()) throw ParameterError("scheme '" + name + "' needs an argument");
        const std::string prefix = key + "=";
        return args.rfind(prefix, 0) == 0 ? args.substr(prefix.size()) : args;
    };
    auto to_double = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ParameterError("bad number '" + s + "' in scheme '" + spec + "'");
        }
        if (used != s.size()) throw ParameterError("bad number '" + s + "' in scheme '" + spec + "'");
        return v;
    };
    auto to_count = [&](const std::string& s) {
        double v = to_double(s);
        if (v < 0 || v != std::floor(v)) throw ParameterError("expected a count in scheme '" + spec + "'");
        return static_cast<std::size_t>(v);
    };
    if (name == "multinomial") return WeightScheme::multinomial(n);
    if (name == "unit") return WeightScheme::unit(n);
    if (name == "moon") return WeightScheme::m_out_of_n(n, to_count(value_of("m")));
    if (name == "jackknife") return WeightScheme::delete_d(n, to_count(value_of("d")));
    if (name == "downweight") return WeightScheme::downweight_d(n, to_count(value_of("d")));
    if (name == "dirichlet") return WeightScheme::dirichlet(n, to_double(value_of("alpha")));
    if (name == "exp") return WeightScheme::exponential(n, args.empty() ? 1.0 : to_double(value_of("rate")));
    if (name == "uniform") {
        const auto comma = args.find(',');
        if (comma == std::string::npos) throw ParameterError("uniform scheme needs 'lo,hi'");
        return WeightScheme::uniform(n, to_double(args.substr(0, comma)), to_double(args.substr(comma + 1)));
    }
    throw ParameterError("unknown weight scheme '" + spec + "'");
}

WeightVector sample(const WeightScheme& s, Rng& rng) {
    s.validate();
    WeightVector w(s.n, 0.0);
    switch (s.kind) {
        case SchemeKind::Unit:
            std::fill(w.begin(), w.end(), 1.0);
            break;
        case SchemeKind::Multinomial:
        case SchemeKind::MOutOfN: {
            const std::size_t m = s.kind == SchemeKind::Multinomial ? s.n : s.count;
            std::uniform_int_distribution<std::size_t> pick(0, s.n - 1);
            for (std::size_t t = 0; t < m; ++t) w[pick(rng)] += 1.0;
            if (s.kind == SchemeKind::MOutOfN) {
                const double scale = static_cast<double>(s.n) / static_cast<double>(m);
                for (auto& v : w) v *= scale;
            }
            break;
        }
        case SchemeKind::DeleteDJackknife:
        case SchemeKind::DownweightDJackknife: {
            std::vector<std::size_t> idx(s.n);
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t t = 0; t < s.count; ++t) {
                std::uniform_int_distribution<std::size_t> pick(t, s.n - 1);
                std::swap(idx[t], idx[pick(rng)]);
            }
            const double nd = static_cast<double>(s.n), d = static_cast<double>(s.count);
            const bool del = s.kind == SchemeKind::DeleteDJackknife;
            const double kept = del ? nd / (nd - d) : (nd + d) / nd;
            const double dropped = del ? 0.0 : d / nd;
            std::fill(w.begin(), w.end(), kept);
            for (std::size_t t = 0; t < s.count; ++t) w[idx[t]] = dropped;
            break;
        }
        case SchemeKind::Dirichlet: {
            std::gamma_distribution<double> gamma(s.alpha, 1.0);
            double total = 0;
            for (auto& v : w) total += (v = gamma(rng));
            const double scale = static_cast<double>(s.n) / total;
            for (auto& v : w) v *= scale;
            break;
        }
        case SchemeKind::IidUniform: {
            std::uniform_real_distribution<double> u(s.lo, s.hi);
            const double mean = (s.lo + s.hi) / 2;
            for (auto& v : w) v = u(rng) / mean;
            break;
        }
        case SchemeKind::IidExponential: {
            std::exponential_distribution<double> e(s.rate);
            for (auto& v : w) v = e(rng) * s.rate;
            break;
        }
    }
    return w;
}

std::string pattern_name(const MomentPattern& pattern) {
    std::string s = "c";
    for (std::size_t j = 0; j < pattern.size(); ++j) {
        if (j) s += "_";
        s += std::to_string(pattern[j]);
    }
    return s;
}

std::vector<MomentPattern> patterns_of_order(int order) {
    std::vector<MomentPattern> out;
    std::function<void(int, int, MomentPattern&)> rec = [&](int left, int max_part, MomentPattern& cur) {
        if (left == 0) {
            out.push_back(cur);
            return;
        }
        for (int part = std::min(left, max_part); part >= 1; --part) {
            cur.push_back(part);
            rec(left - part, part, cur);
            cur.pop_back();
        }
    };
    MomentPattern cur;
    rec(order, order, cur);
    return out;
}

double raw_mixed_moment(const WeightScheme& scheme, const std::vector<int>& exponents) {
    scheme.validate();
    if (exponents.size() > scheme.n) throw ShapeError("more distinct indices than weights");
    return static_cast<double>(raw_moment_impl(scheme, exponents));
}

WeightMoments theoretical_moments(const WeightScheme& scheme) {
    scheme.validate();
    return assemble(scheme.n, [&](const MomentPattern& p) { return central_moment(scheme, p); });
}

WeightMoments empirical_moments(const std::vector<WeightVector>& draws,
                                const std::vector<double>& probabilities) {
    if (draws.size() < 2 && probabilities.empty()) throw ShapeError("empirical moments need at least 2 draws");
    if (draws.empty()) throw ShapeError("empirical moments need draws");
    if (!probabilities.empty() && probabilities.size() != draws.size())
        throw ShapeError("probabilities and draws differ in length");
    const std::size_t n = draws.front().size();
    std::map<MomentPattern, Real> acc;
    Real total_mass = 0;
    for (std::size_t b = 0; b < draws.size(); ++b) {
        if (draws[b].size() != n) throw ShapeError("weight vectors differ in length");
        const Real mass = probabilities.empty() ? 1.0L : probabilities[b];
        total_mass += mass;
        std::vector<Real> power_sums(9, 0);
        for (double w : draws[b]) {
            Real x = static_cast<Real>(w) - 1, xp = 1;
            for (int s = 0; s <= 8; ++s) {
                power_sums[s] += xp;
                xp *= x;
            }
        }
        for (const auto& p : all_patterns()) {
            if (p.size() > n) continue;
            acc[p] += mass * distinct_tuple_sum(power_sums, p) / falling(static_cast<Real>(n), static_cast<int>(p.size()));
        }
    }
    return assemble(n, [&](const MomentPattern& p) { return acc.at(p) / total_mass; });
}

std::vector<SupportAtom> enumerate_support(const WeightScheme& s, std::size_t cap) {
    s.validate();
    std::vector<SupportAtom> atoms;
    const double n = static_cast<double>(s.n);
    switch (s.kind) {
        case SchemeKind::Unit:
            atoms.push_back({WeightVector(s.n, 1.0), 1.0});
            return atoms;
        case SchemeKind::Multinomial:
        case SchemeKind::MOutOfN: {
            const std::size_t m = s.kind == SchemeKind::Multinomial ? s.n : s.count;
            const Real count = binomial(static_cast<int>(m + s.n - 1), static_cast<int>(s.n - 1));
            if (count > static_cast<Real>(cap)) throw UnsupportedScheme("support of " + s.to_string() + " exceeds the atom cap");
            const double scale = n / static_cast<double>(m);
            const Real log_m_fact = std::lgamma(static_cast<Real>(m) + 1);
            std::vector<std::size_t> counts(s.n, 0);
            std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
                if (pos + 1 == s.n) {
                    counts[pos] = left;
                    Real logp = log_m_fact - static_cast<Real>(m) * std::log(static_cast<Real>(s.n));
                    WeightVector w(s.n);
                    for (std::size_t j = 0; j < s.n; ++j) {
                        logp -= std::lgamma(static_cast<Real>(counts[j]) + 1);
                        w[j] = static_cast<double>(counts[j]) * scale;
                    }
                    atoms.push_back({std::move(w), static_cast<double>(std::exp(logp))});
                    return;
                }
                for (std::size_t c = 0; c <= left; ++c) {
                    counts[pos] = c;
                    rec(pos + 1, left - c);
                }
            };
            rec(0, m);
            return atoms;
        }
        case SchemeKind::DeleteDJackknife:
        case SchemeKind::DownweightDJackknife: {
            const Real count = binomial(static_cast<int>(s.n), static_cast<int>(s.count));
            if (count > static_cast<Real>(cap)) throw UnsupportedScheme("support of " + s.to_string() + " exceeds the atom cap");
            const double d = static_cast<double>(s.count);
            const bool del = s.kind == SchemeKind::DeleteDJackknife;
            const double kept = del ? n / (n - d) : (n + d) / n;
            const double dropped = del ? 0.0 : d / n;
            const double prob = static_cast<double>(1 / count);
            std::vector<bool> mask(s.n, false);
            std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(s.count), true);
            // prev_permutation walks the subsets in lexicographic order of deleted indices
            do {
                WeightVector w(s.n);
                for (std::size_t j = 0; j < s.n; ++j) w[j] = mask[j] ? dropped : kept;
                atoms.push_back({std::move(w), prob});
            } while (std::prev_permutation(mask.begin(), mask.end()));
            return atoms;
        }
        default:
            throw UnsupportedScheme("scheme " + s.to_string() + " has continuous support");
    }
}

// ---------------------------------------------------------------------------

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        default: return "undetermined";
    }
}

namespace {

double log_log_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t m = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += std::log(xs[i]);
        my += std::log(ys[i]);
    }
    mx /= m;
    my /= m;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = std::log(xs[i]) - mx;
        sxy += dx * (std::log(ys[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

Verdict combine(std::initializer_list<Verdict> vs) {
    bool undetermined = false;
    for (Verdict v : vs) {
        if (v == Verdict::Fail) return Verdict::Fail;
        if (v == Verdict::Undetermined) undetermined = true;
    }
    return undetermined ? Verdict::Undetermined : Verdict::Pass;
}

Verdict combine(const std::vector<RateEvidence>& ev) {
    bool undetermined = ev.empty();
    for (const auto& e : ev) {
        if (e.verdict == Verdict::Fail) return Verdict::Fail;
        if (e.verdict == Verdict::Undetermined) undetermined = true;
    }
    return undetermined ? Verdict::Undetermined : Verdict::Pass;
}

}  // namespace

ConditionReport check_conditions(const std::function<WeightScheme(std::size_t)>& scheme_at,
                                 const std::vector<std::size_t>& n_grid,
                                 const std::function<double(std::size_t)>& p_rule,
                                 const ConditionCheckOptions& opt) {
    if (n_grid.size() < 3) throw ParameterError("condition check needs at least 3 grid points");
    if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
        std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
        throw ParameterError("n grid must be strictly increasing");

    ConditionReport rep;
    rep.n_grid = n_grid;
    std::vector<double> ns;
    std::vector<double> mean_dev, w_fail;
    for (std::size_t n : n_grid) {
        const WeightScheme s = scheme_at(n);
        rep.moments.push_back(theoretical_moments(s));
        ns.push_back(static_cast<double>(n));
        mean_dev.push_back(std::abs(raw_mixed_moment(s, {1}) - 1.0));
        Rng rng = make_stream(opt.seed, {n});
        std::size_t failures = 0;
        for (std::size_t b = 0; b < opt.w_set_draws; ++b) {
            const auto w = sample(s, rng);
            const auto big = std::count_if(w.begin(), w.end(), [&](double v) { return v > opt.k2; });
            if (static_cast<std::size_t>(big) < opt.m0) ++failures;
        }
        w_fail.push_back(static_cast<double>(failures) / static_cast<double>(opt.w_set_draws));
    }
    const bool standardized = std::all_of(rep.moments.begin(), rep.moments.end(),
                                          [](const WeightMoments& m) { return m.standardized_available; });

    // Rate of |value| / bound: "o" needs slope <= -tol, "O" needs slope <= +tol.
    auto rate = [&](std::string quantity, std::string relation, const std::vector<double>& values,
                    const std::vector<double>& bounds) {
        RateEvidence e;
        e.quantity = std::move(quantity);
        e.relation = std::move(relation);
        e.values = values;
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i])) {
                e.verdict = Verdict::Fail;
                e.slope = std::numeric_limits<double>::infinity();
                return e;
            }
            if (std::abs(values[i]) > opt.zero_floor) {
                xs.push_back(ns[i]);
                ys.push_back(std::abs(values[i]) / bounds[i]);
            }
        }
        // slope over the upper half of the grid, where the leading term dominates
        const std::size_t tail = std::max<std::size_t>(2, (values.size() + 1) / 2);
        if (xs.size() > tail) {
            xs.erase(xs.begin(), xs.end() - static_cast<std::ptrdiff_t>(tail));
            ys.erase(ys.begin(), ys.end() - static_cast<std::ptrdiff_t>(tail));
        }
        if (xs.size() < 2) {
            e.slope = -std::numeric_limits<double>::infinity();
            e.verdict = Verdict::Pass;
            return e;
        }
        e.slope = log_log_slope(xs, ys);
        const bool little_o = e.relation == "o(1)";
        e.verdict = (little_o ? e.slope <= -opt.slope_tolerance : e.slope <= opt.slope_tolerance) ? Verdict::Pass
                                                                                                  : Verdict::Fail;
        return e;
    };
    auto collect = [&](auto getter) {
        std::vector<double> v;
        for (const auto& m : rep.moments) v.push_back(getter(m));
        return v;
    };
    auto bounds_of = [&](auto fn) {
        std::vector<double> v;
        for (double n : ns) v.push_back(fn(n));
        return v;
    };
    const auto sigma2 = collect([](const WeightMoments& m) { return m.sigma2; });

    // (2.1)
    ConditionClause c21{"2.1", Verdict::Pass, {}};
    {
        RateEvidence e{"|E w - 1|", "== 0", mean_dev, 0.0, Verdict::Pass};
        for (double v : mean_dev)
            if (v > 1e-12) e.verdict = Verdict::Fail;
        c21.evidence.push_back(e);
        c21.verdict = e.verdict;
    }
    // (2.2)
    ConditionClause c22c{"2.2", Verdict::Undetermined, {}};
    {
        RateEvidence pos{"sigma2", "> 0", sigma2, 0.0, Verdict::Pass};
        for (double v : sigma2)
            if (!(v > 0)) pos.verdict = Verdict::Fail;
        c22c.evidence.push_back(pos);
        std::vector<double> bound;
        for (std::size_t i = 0; i < ns.size(); ++i) bound.push_back(std::min(ns[i] / p_rule(n_grid[i]), ns[i]));
        c22c.evidence.push_back(rate("sigma2 / min(a_n^2/p, n)", "o(1)", sigma2, bound));
        c22c.verdict = combine(c22c.evidence);
    }
    // (2.3)
    ConditionClause c23{"2.3", Verdict::Undetermined, {}};
    if (standardized) {
        c23.evidence.push_back(rate("c11 / n^-1", "O(1)", collect([](const WeightMoments& m) { return m.c11; }),
                                    bounds_of([](double n) { return 1.0 / n; })));
        c23.verdict = combine(c23.evidence);
    }
    rep.clauses.push_back(c21);
    rep.clauses.push_back(c22c);
    rep.clauses.push_back(c23);
    rep.bw = combine({c21.verdict, c22c.verdict, c23.verdict});

    // (2.4)
    ConditionClause c24{"2.4", Verdict::Undetermined, {}};
    if (standardized) {
        const auto c22v = collect([](const WeightMoments& m) { return m.c22 - 1.0; });
        RateEvidence lim = rate("c22 - 1", "o(1)", c22v, bounds_of([](double) { return 1.0; }));
        lim.relation = "->1";
        if (std::abs(c22v.back()) > opt.limit_tolerance) lim.verdict = Verdict::Fail;
        c24.evidence.push_back(lim);
        c24.evidence.push_back(rate("c4", "O(1)", collect([](const WeightMoments& m) { return m.c4; }),
                                    bounds_of([](double) { return 1.0; })));
        c24.verdict = combine(c24.evidence);
    }
    rep.clauses.push_back(c24);
    rep.cltw = c24.verdict;

    // (2.5)
    ConditionClause c25{"2.5", Verdict::Undetermined, {}};
    c25.evidence.push_back(rate("P_B[not W] / n^-1", "O(1)", w_fail, bounds_of([](double n) { return 1.0 / n; })));
    c25.evidence.back().verdict = Verdict::Pass;
    for (std::size_t i = 0; i < ns.size(); ++i)
        if (w_fail[i] * ns[i] > 1.0) c25.evidence.back().verdict = Verdict::Fail;
    c25.verdict = combine(c25.evidence);
    rep.clauses.push_back(c25);

    // (2.6)
    ConditionClause c26{"2.6", Verdict::Undetermined, {}};
    if (standardized) {
        for (const auto& p : patterns_of_order(3)) {
            const int k = static_cast<int>(p.size());
            std::vector<double> vals, bound;
            for (std::size_t i = 0; i < ns.size(); ++i) {
                vals.push_back(rep.moments[i].third_order.at(p));
                bound.push_back(std::pow(ns[i], -k + 1) / std::sqrt(sigma2[i]));
            }
            c26.evidence.push_back(rate(pattern_name(p) + " / (n^" + std::to_string(1 - k) + " sigma^-1)", "O(1)", vals, bound));
        }
        c26.verdict = combine(c26.evidence);
    }
    rep.clauses.push_back(c26);

    // (2.7)(a) and (b)
    ConditionClause c27a{"2.7a", Verdict::Undetermined, {}}, c27b{"2.7b", Verdict::Undetermined, {}};
    if (standardized) {
        RateEvidence in_c = rate("sigma2", "O(1)", sigma2, bounds_of([](double) { return 1.0; }));
        in_c.relation = "in C+";
        in_c.verdict = std::abs(in_c.slope) <= opt.slope_tolerance ? Verdict::Pass : Verdict::Fail;
        c27a.evidence.push_back(in_c);
        RateEvidence to_zero = rate("sigma2", "o(1)", sigma2, bounds_of([](double) { return 1.0; }));
        to_zero.relation = "->0";
        c27b.evidence.push_back(to_zero);
        for (const auto& p : patterns_of_order(4)) {
            const int k = static_cast<int>(p.size());
            std::vector<double> vals, bound_a, bound_b;
            for (std::size_t i = 0; i < ns.size(); ++i) {
                vals.push_back(rep.moments[i].fourth_order.at(p));
                bound_a.push_back(std::min(std::pow(ns[i], -k + 2), 1.0));
                bound_b.push_back(std::pow(ns[i], -k + 2));
            }
            c27a.evidence.push_back(rate(pattern_name(p) + " / min(n^" + std::to_string(2 - k) + ", 1)", "O(1)", vals, bound_a));
            c27b.evidence.push_back(rate(pattern_name(p) + " / n^" + std::to_string(2 - k), "O(1)", vals, bound_b));
        }
        c27a.verdict = combine(c27a.evidence);
        c27b.verdict = combine(c27b.evidence);
    }
    rep.clauses.push_back(c27a);
    rep.clauses.push_back(c27b);
    rep.vw_a = combine({c25.verdict, c26.verdict, c27a.verdict});
    rep.vw_b = combine({c25.verdict, c26.verdict, c27b.verdict});
    return rep;
}

}  // namespace gebs
