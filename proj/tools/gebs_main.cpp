#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "gebs/errors.hpp"
#include "gebs/experiments.hpp"
#include "gebs/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitDegenerate = 3;

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

int execute(gebs::ExperimentConfig cfg) {
    const auto report = gebs::run_experiment(cfg);
    if (cfg.out.empty() || cfg.out == "-")
        std::cout << gebs::render(report, cfg.format);
    else
        gebs::emit_report(report, cfg.format, cfg.out);
    if (report.degenerate) {
        std::cerr << "gebs: degenerate run (more than 20% fallback resamples in some cell); report written\n";
        return kExitDegenerate;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized bootstrap for estimating equations"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment and write its report");
    std::string experiment, scale = "desk", format = "csv", out, methods, scheme_args;
    std::size_t n = 0, sims = 0, boots = 0, bins = 0, threads = 0;
    std::uint64_t seed = 20050101;
    run->add_option("--experiment", experiment, "ar1 | glm | nls | weights-check")
        ->required()
        ->check(CLI::IsMember({"ar1", "glm", "nls", "weights-check"}));
    auto* n_opt = run->add_option("--n", n, "Sample size (ar1)");
    auto* sims_opt = run->add_option("--sims", sims, "Outer Monte Carlo replicates");
    auto* boots_opt = run->add_option("--boots", boots, "Resamples per replicate");
    auto* methods_opt = run->add_option("--methods", methods, "Comma list: rb, wb, gbs-<scheme>");
    run->add_option("--scheme-args", scheme_args, "Per-method scheme arguments, e.g. 'gbs-uniform:0.5,1.5;gbs-jackknife:d=2'");
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--scale", scale, "desk | paper")->check(CLI::IsMember({"desk", "paper"}));
    run->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--out", out, "Output path (stdout when omitted)");
    auto* bins_opt = run->add_option("--bins", bins, "Histogram bins (nls)");
    run->add_option("--threads", threads, "Worker threads (default: GEBS_THREADS or hardware)");

    auto* rerun = app.add_subcommand("rerun", "Re-run the configuration echoed in a report");
    std::string from, rerun_out;
    std::size_t rerun_threads = 0;
    rerun->add_option("--report", from, "CSV or JSON report")->required();
    rerun->add_option("--out", rerun_out, "Output path (stdout when omitted)");
    rerun->add_option("--threads", rerun_threads, "Worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            auto cfg = gebs::default_config(gebs::parse_experiment(experiment), gebs::parse_scale(scale));
            if (*n_opt) cfg.n = n;
            if (*sims_opt) cfg.sims = sims;
            if (*boots_opt) cfg.boots = boots;
            if (*bins_opt) cfg.bins = bins;
            if (*methods_opt) cfg.methods = split_list(methods, ',');
            if (!scheme_args.empty()) {
                for (const auto& part : split_list(scheme_args, ';')) {
                    const auto c = part.find(':');
                    if (c == std::string::npos)
                        throw gebs::ConfigError("scheme argument '" + part + "' needs the form method:args");
                    cfg.scheme_args[part.substr(0, c)] = part.substr(c + 1);
                }
            }
            cfg.seed = seed;
            cfg.format = gebs::parse_format(format);
            cfg.out = out;
            cfg.threads = threads;
            return execute(cfg);
        }
        std::ifstream in(from);
        if (!in) throw gebs::ConfigError("cannot read " + from);
        std::stringstream ss;
        ss << in.rdbuf();
        auto cfg = gebs::config_from_report(ss.str());
        cfg.out = rerun_out;
        cfg.threads = rerun_threads;
        return execute(cfg);
    } catch (const gebs::ConfigError& e) {
        std::cerr << "gebs: configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const gebs::Error& e) {
        std::cerr << "gebs: " << e.what() << "\n";
        return kExitFailure;
    }
}
