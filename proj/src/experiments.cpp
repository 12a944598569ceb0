#include "gebs/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "gebs/baselines.hpp"
#include "gebs/dataset_io.hpp"
#include "gebs/engine.hpp"
#include "gebs/errors.hpp"
#include "gebs/histogram.hpp"
#include "gebs/solver.hpp"
#include "gebs/weights.hpp"

namespace gebs {

namespace {

constexpr double kAr1Phi = 0.2;
constexpr double kAr1Sigma1Sq = 1.0;
constexpr double kAr1Sigma2Sq = 100.0;
constexpr double kCiLevel = 0.95;
const std::vector<std::size_t> kConditionGrid{10, 20, 40, 80, 160, 320};

std::uint64_t method_id(const std::string& m) {
    const auto& k = known_methods();
    return static_cast<std::uint64_t>(std::find(k.begin(), k.end(), m) - k.begin());
}

bool is_gbs(const std::string& m) { return m.rfind("gbs-", 0) == 0; }

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

struct MethodRun {
    BootstrapSample sample;
    bool degenerate = false;
};

MethodRun run_method(const ExperimentConfig& cfg, const Model& model, const Vector& beta_hat,
                     const std::string& method, std::uint64_t seed, const BootstrapOptions& opts) {
    MethodRun r;
    try {
        if (method == "rb") {
            r.sample = residual_bootstrap(model, beta_hat, cfg.boots, seed, opts);
        } else if (method == "wb") {
            r.sample = wild_bootstrap(model, beta_hat, cfg.boots, seed, BaselineSpec{}, opts);
        } else {
            const auto scheme = parse_scheme(scheme_spec_for(cfg, method, model.size()), model.size());
            r.sample = run_bootstrap(model, beta_hat, scheme, cfg.boots, seed, opts);
        }
        r.sample.method = method;
    } catch (const DegenerateRun& e) {
        r.sample = e.sample();
        r.sample.method = method;
        r.degenerate = true;
    }
    return r;
}

std::size_t worker_count(const ExperimentConfig& cfg) {
    return cfg.threads ? cfg.threads : default_thread_count();
}

// ---------------------------------------------------------------------------

ExperimentReport run_ar1(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.config = cfg;
    const std::size_t M = cfg.methods.size();
    std::vector<std::vector<double>> est(M, std::vector<double>(cfg.sims));
    std::vector<std::vector<double>> fb(M, std::vector<double>(cfg.sims));
    std::vector<std::vector<char>> deg(M, std::vector<char>(cfg.sims, 0));
    std::vector<double> sq_err(cfg.sims);
    const double n = static_cast<double>(cfg.n);

    parallel_for(cfg.sims, worker_count(cfg), [&](std::size_t s) {
        Rng rng = make_stream(cfg.seed, {1, s});
        const Ar1Model model(simulate_ar1(kAr1Phi, kAr1Sigma1Sq, kAr1Sigma2Sq, cfg.n, rng));
        const Vector beta_hat = solve_weighted(model, model.unit_weights()).beta;
        sq_err[s] = n * (beta_hat(0) - kAr1Phi) * (beta_hat(0) - kAr1Phi);
        BootstrapOptions opts;
        opts.threads = 1;
        for (std::size_t j = 0; j < M; ++j) {
            const auto& m = cfg.methods[j];
            const auto run = run_method(cfg, model, beta_hat, m, derive_seed(cfg.seed, {2, s, method_id(m)}), opts);
            est[j][s] = n * variance_estimate(run.sample).scalar();
            fb[j][s] = run.sample.fallback_rate();
            deg[j][s] = run.degenerate;
        }
    });

    for (std::size_t j = 0; j < M; ++j) {
        VarianceRow row;
        row.method = cfg.methods[j];
        row.mean_var_est = mean_of(est[j]);
        row.var_var_est = var_of(est[j]);
        row.fallback_rate = mean_of(fb[j]);
        row.degenerate_cells = static_cast<std::size_t>(std::count(deg[j].begin(), deg[j].end(), 1));
        if (row.degenerate_cells) rep.degenerate = true;
        rep.variance_rows.push_back(row);
    }
    VarianceRow truth;
    truth.method = "truth";
    truth.mean_var_est = mean_of(sq_err);
    truth.var_var_est = var_of(sq_err) / static_cast<double>(cfg.sims);
    rep.variance_rows.push_back(truth);

    rep.notes.push_back("model: X_t = 0.2 X_{t-1} + e_t, X_0 = 0, Var e_t = 1 (t odd), 100 (t even)");
    rep.notes.push_back("cells estimate V_n = E(sqrt(n)(phi_hat - phi))^2; gbs cells are n V_GBS, rb/wb cells n E*(phi* - phi_hat)^2");
    rep.notes.push_back("truth row: mean of n(phi_hat - phi)^2 over replicates; var_var_est is its Monte Carlo variance");
    if (std::find(cfg.methods.begin(), cfg.methods.end(), "wb") != cfg.methods.end())
        rep.notes.push_back("wb: residuals e_t = X_t - phi_hat X_{t-1} times i.i.d. N(0,1), series rebuilt recursively");
    if (std::find(cfg.methods.begin(), cfg.methods.end(), "rb") != cfg.methods.end())
        rep.notes.push_back("rb: centered residuals resampled with replacement, series rebuilt recursively");
    return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_glm(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.config = cfg;
    const std::string path = bundled_data_path("fumigant.csv");
    GlmData base;
    try {
        base = load_glm_csv(path);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("glm experiment needs the bundled covariates: ") + e.what());
    }
    const Vector beta0 = fumigant_true_beta();
    const std::size_t G = base.groups();
    std::vector<double> truth(G);
    for (std::size_t g = 0; g < G; ++g) truth[g] = beta0(0) + beta0(1) * base.X[g];

    const std::size_t M = cfg.methods.size();
    // [method][sim][case]
    std::vector<std::vector<std::vector<double>>> len(M, std::vector<std::vector<double>>(cfg.sims));
    std::vector<std::vector<std::vector<char>>> hit(M, std::vector<std::vector<char>>(cfg.sims));
    std::vector<std::vector<double>> fb(M, std::vector<double>(cfg.sims, 0.0));
    std::vector<std::vector<char>> deg(M, std::vector<char>(cfg.sims, 0));
    std::vector<char> fit_failed(cfg.sims, 0);

    parallel_for(cfg.sims, worker_count(cfg), [&](std::size_t s) {
        Rng rng = make_stream(cfg.seed, {1, s});
        const GlmData d = simulate_glm(base.N, base.X, beta0, rng);
        const LogisticModel model = LogisticModel::trials(d);
        Vector beta_hat;
        try {
            beta_hat = solve_weighted(model, model.unit_weights()).beta;
        } catch (const Error&) {
            fit_failed[s] = 1;
            return;
        }
        BootstrapOptions opts;
        opts.threads = 1;
        for (std::size_t j = 0; j < M; ++j) {
            const auto& m = cfg.methods[j];
            const auto run = run_method(cfg, model, beta_hat, m, derive_seed(cfg.seed, {2, s, method_id(m)}), opts);
            fb[j][s] = run.sample.fallback_rate();
            deg[j][s] = run.degenerate;
            len[j][s].resize(G);
            hit[j][s].resize(G);
            for (std::size_t g = 0; g < G; ++g) {
                const double x = base.X[g];
                const auto ci = percentile_ci(project(run.sample, [&](const Vector& b) { return b(0) + b(1) * x; }), kCiLevel);
                len[j][s][g] = ci.length();
                hit[j][s][g] = ci.contains(truth[g]);
            }
        }
    });

    const auto failed = static_cast<std::size_t>(std::count(fit_failed.begin(), fit_failed.end(), 1));
    for (std::size_t g = 0; g < G; ++g) {
        for (std::size_t j = 0; j < M; ++j) {
            CoverageRow row;
            row.case_index = g + 1;
            row.true_logit = truth[g];
            row.method = cfg.methods[j];
            std::vector<double> lens;
            std::size_t covered = 0;
            std::vector<double> fbs;
            for (std::size_t s = 0; s < cfg.sims; ++s) {
                if (fit_failed[s]) continue;
                lens.push_back(len[j][s][g]);
                covered += hit[j][s][g] ? 1 : 0;
                fbs.push_back(fb[j][s]);
                row.degenerate_cells += deg[j][s] ? 1 : 0;
            }
            row.mean_ci_length = mean_of(lens);
            row.coverage_pct = lens.empty() ? 0.0 : 100.0 * static_cast<double>(covered) / static_cast<double>(lens.size());
            row.fallback_rate = mean_of(fbs);
            if (row.degenerate_cells) rep.degenerate = true;
            rep.coverage_rows.push_back(row);
        }
    }
    rep.notes.push_back("data: group sizes and log-concentrations from " + std::string("fumigant.csv") +
                        "; responses simulated from beta = (-17.90, 6.28)");
    rep.notes.push_back("true_logit t_i = -17.90 + 6.28 X_i; intervals are 95% percentile intervals of t_i = b0 + b1 X_i");
    rep.notes.push_back("gbs weights index the N individual trials (multinomial over N; exponential weights also number N)");
    if (std::find(cfg.methods.begin(), cfg.methods.end(), "wb") != cfg.methods.end())
        rep.notes.push_back("wb: Y*_ij = t_hat_i + U_ij r_ij, r_ij = logit((Y_ij + 0.001)/1.002) - t_hat_i, U ~ N(0,1); refit by logistic score equations with response expit(Y*_ij)");
    rep.notes.push_back("n is fixed by the bundled data (10 groups)");
    if (failed) rep.notes.push_back("replicates without a finite MLE: " + std::to_string(failed));
    return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_nls(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.config = cfg;
    const std::string path = bundled_data_path("isomerization.csv");
    NlsData data;
    try {
        data = load_nls_csv(path);
    } catch (const ParseError& e) {
        throw ConfigError(std::string("nls experiment needs the bundled isomerization data: ") + e.what());
    }
    const NlsModel model(data);
    const auto unit = model.unit_weights();
    SolveOptions so;
    so.init = isomerization_reference_estimate();
    const Solution fit = solve_weighted(model, unit, so);
    const Vector theta_hat = fit.beta;
    const Vector second = isomerization_second_start();

    try {
        const auto roots = solve_multistart(model, unit, {isomerization_reference_estimate(), second});
        for (const auto& r : roots.roots) {
            RootRow row;
            row.theta.assign(r.solution.beta.data(), r.solution.beta.data() + r.solution.beta.size());
            row.psi = r.objective.value_or(0.0);
            row.iterations = r.solution.iterations;
            rep.roots.push_back(row);
        }
    } catch (const EmptyRootSet&) {
    }
    {
        SolveOptions o;
        o.init = second;
        try {
            solve_weighted(model, unit, o);
        } catch (const NonConvergence& e) {
            std::ostringstream os;
            os.precision(6);
            os << "start (33.343956, -1.84281206, -1.0338937, -4.31406116), Psi = " << *model.objective(unit, second)
               << ": no root; last iterate (" << e.last().beta.transpose() << "), Psi = "
               << *model.objective(unit, e.last().beta);
            rep.notes.push_back(os.str());
        } catch (const Error& e) {
            rep.notes.push_back(std::string("second start: ") + e.what());
        }
    }

    BootstrapOptions opts;
    opts.threads = worker_count(cfg);
    opts.extra_starts = {second};
    for (const auto& m : cfg.methods) {
        const auto run = run_method(cfg, model, theta_hat, m, derive_seed(cfg.seed, {2, 0, method_id(m)}), opts);
        if (run.degenerate) rep.degenerate = true;
        for (std::size_t a = 0; a < 4; ++a) {
            std::vector<double> v = project(run.sample, [&](const Vector& b) { return b(static_cast<Eigen::Index>(a)); });
            std::vector<double> sorted = v;
            std::sort(sorted.begin(), sorted.end());
            // central 98% of the draws, padded; isolated far-away roots fall outside
            const EmpiricalDistribution dist(sorted);
            double lo = dist.quantile(0.01), hi = dist.quantile(0.99);
            const double pad = 0.05 * (hi - lo);
            lo -= pad;
            hi += pad;
            const Histogram h = density_histogram(v, cfg.bins, std::make_pair(lo, hi));
            ModeSummary ms;
            ms.method = m;
            ms.parameter = a + 1;
            ms.fallback_rate = run.sample.fallback_rate();
            ms.outside = h.outside;
            for (std::size_t k : h.modes) ms.mode_centers.push_back(h.centers[k]);
            rep.modes.push_back(ms);
            for (std::size_t k = 0; k < h.centers.size(); ++k)
                rep.histogram_rows.push_back({m, a + 1, h.centers[k], h.density[k], h.is_mode(k)});
        }
    }
    rep.notes.push_back("each resample solves from theta_hat and from the second start and keeps the root of least weighted Psi");
    rep.notes.push_back("histogram range: 1%-99% draw quantiles padded by 5%; modes: 3-bin smoothing, prominence >= 10% of the maximum");
    return rep;
}

// ---------------------------------------------------------------------------

ExperimentReport run_weights_check(const ExperimentConfig& cfg) {
    ExperimentReport rep;
    rep.config = cfg;
    for (const auto& m : cfg.methods) {
        if (!is_gbs(m)) continue;
        auto scheme_at = [&](std::size_t n) { return parse_scheme(scheme_spec_for(cfg, m, n), n); };
        ConditionCheckOptions opt;
        opt.seed = cfg.seed;
        const auto r = check_conditions(scheme_at, kConditionGrid, [](std::size_t) { return 1.0; }, opt);
        const std::string label = m + "[" + scheme_spec_for(cfg, m, 0) + "]";
        rep.condition_rows.push_back({label, "bw", "", "", 0.0, to_string(r.bw)});
        rep.condition_rows.push_back({label, "cltw", "", "", 0.0, to_string(r.cltw)});
        rep.condition_rows.push_back({label, "vw_a", "", "", 0.0, to_string(r.vw_a)});
        rep.condition_rows.push_back({label, "vw_b", "", "", 0.0, to_string(r.vw_b)});
        for (const auto& c : r.clauses)
            for (const auto& e : c.evidence)
                rep.condition_rows.push_back({label, c.name, e.quantity, e.relation, e.slope, to_string(e.verdict)});
    }
    rep.notes.push_back("n grid 10,20,40,80,160,320; p = 1; a_n^2 proportional to n; slopes fit on the upper half of the grid");
    rep.notes.push_back("o(.) needs slope <= -0.2, O(.) needs slope <= 0.2, c22 -> 1 needs |c22 - 1| <= 0.05 at n = 320");
    return rep;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Ar1: return "ar1";
        case ExperimentKind::Glm: return "glm";
        case ExperimentKind::Nls: return "nls";
        default: return "weights-check";
    }
}

std::string to_string(Scale s) { return s == Scale::Paper ? "paper" : "desk"; }
std::string to_string(Format f) { return f == Format::Json ? "json" : "csv"; }

ExperimentKind parse_experiment(const std::string& s) {
    if (s == "ar1") return ExperimentKind::Ar1;
    if (s == "glm") return ExperimentKind::Glm;
    if (s == "nls") return ExperimentKind::Nls;
    if (s == "weights-check") return ExperimentKind::WeightsCheck;
    throw ConfigError("unknown experiment '" + s + "'");
}

Scale parse_scale(const std::string& s) {
    if (s == "desk") return Scale::Desk;
    if (s == "paper") return Scale::Paper;
    throw ConfigError("unknown scale '" + s + "'");
}

Format parse_format(const std::string& s) {
    if (s == "csv") return Format::Csv;
    if (s == "json") return Format::Json;
    throw ConfigError("unknown format '" + s + "'");
}

ExperimentConfig default_config(ExperimentKind kind, Scale scale) {
    ExperimentConfig c;
    c.experiment = kind;
    c.scale = scale;
    const bool paper = scale == Scale::Paper;
    switch (kind) {
        case ExperimentKind::Ar1:
            c.n = 50;
            c.methods = {"rb", "wb", "gbs-multinomial", "gbs-uniform"};
            c.sims = paper ? 10000 : 500;
            c.boots = paper ? 1000 : 300;
            break;
        case ExperimentKind::Glm:
            c.n = 10;
            c.methods = {"wb", "gbs-multinomial", "gbs-exp"};
            c.sims = paper ? 1000 : 500;
            c.boots = paper ? 1000 : 300;
            break;
        case ExperimentKind::Nls:
            c.n = 24;
            c.methods = {"rb", "gbs-multinomial", "gbs-exp"};
            c.sims = 1;
            c.boots = paper ? 1000 : 300;
            break;
        case ExperimentKind::WeightsCheck:
            c.n = 320;
            c.methods = {"gbs-multinomial", "gbs-jackknife", "gbs-downweight", "gbs-uniform",
                         "gbs-exp",         "gbs-dirichlet", "gbs-moon",       "gbs-unit"};
            c.sims = 1;
            c.boots = 10;
            c.scheme_args = {{"gbs-jackknife", "d=sqrt"}, {"gbs-downweight", "d=sqrt"}};
            break;
    }
    return c;
}

std::string scheme_spec_for(const ExperimentConfig& cfg, const std::string& method, std::size_t n) {
    if (!is_gbs(method)) throw ConfigError("'" + method + "' is not a generalized bootstrap method");
    const std::string name = method.substr(4);
    const auto it = cfg.scheme_args.find(method);
    std::string args = it != cfg.scheme_args.end() ? it->second : "";
    if (args.empty()) {
        if (name == "uniform") args = "0.5,1.5";
        else if (name == "exp") args = "1";
        else if (name == "dirichlet") args = "alpha=1";
        else if (name == "jackknife" || name == "downweight") args = "d=1";
        else if (name == "moon") args = "m=half";
    }
    if (n > 0) {
        auto replace = [&](const std::string& key, std::size_t value) {
            const auto pos = args.find(key);
            if (pos != std::string::npos) args.replace(pos, key.size(), std::to_string(value));
        };
        replace("sqrt", static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n)))));
        replace("half", (n + 1) / 2);
    }
    const std::string scheme = name == "jackknife" || name == "downweight" || name == "multinomial" || name == "unit" ||
                                       name == "uniform" || name == "exp" || name == "dirichlet" || name == "moon"
                                   ? name
                                   : "";
    if (scheme.empty()) throw ConfigError("unknown method '" + method + "'");
    return args.empty() ? scheme : scheme + ":" + args;
}

void ExperimentConfig::validate() const {
    if (sims < 1) throw ConfigError("sims must be >= 1");
    if (boots < 10) throw ConfigError("boots must be >= 10");
    if (bins < 10) throw ConfigError("bins must be >= 10");
    if (methods.empty()) throw ConfigError("no methods configured");
    if (experiment == ExperimentKind::Ar1 && n < 10) throw ConfigError("ar1 needs n >= 10");
    for (const auto& m : methods) {
        const auto& k = known_methods();
        if (std::find(k.begin(), k.end(), m) == k.end()) throw ConfigError("unknown method '" + m + "'");
        if (m == "rb" && experiment == ExperimentKind::Glm)
            throw ConfigError("rb needs additive residuals; not available for glm");
        if (!is_gbs(m) && experiment == ExperimentKind::WeightsCheck)
            throw ConfigError("weights-check takes gbs-* methods only");
        if (is_gbs(m)) {
            const std::size_t probe = experiment == ExperimentKind::Ar1 ? n : experiment == ExperimentKind::Glm ? 295 : 24;
            try {
                parse_scheme(scheme_spec_for(*this, m, probe), probe);
            } catch (const ParameterError& e) {
                throw ConfigError(m + ": " + e.what());
            }
        }
    }
    for (const auto& [k, v] : scheme_args)
        if (std::find(methods.begin(), methods.end(), k) == methods.end() || !is_gbs(k))
            throw ConfigError("scheme arguments given for '" + k + "', which is not a configured gbs method");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    switch (config.experiment) {
        case ExperimentKind::Ar1: return run_ar1(config);
        case ExperimentKind::Glm: return run_glm(config);
        case ExperimentKind::Nls: return run_nls(config);
        default: return run_weights_check(config);
    }
}

Vector fumigant_true_beta() { return Eigen::Vector2d(-17.90, 6.28); }

Vector isomerization_second_start() {
    Vector th(4);
    th << 33.343956, -1.84281206, -1.0338937, -4.31406116;
    return th;
}

}  // namespace gebs
