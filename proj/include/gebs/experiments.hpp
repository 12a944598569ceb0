#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gebs/models.hpp"

namespace gebs {

enum class ExperimentKind { Ar1, Glm, Nls, WeightsCheck };
enum class Scale { Desk, Paper };
enum class Format { Csv, Json };

std::string to_string(ExperimentKind k);
std::string to_string(Scale s);
std::string to_string(Format f);
ExperimentKind parse_experiment(const std::string& s);
Scale parse_scale(const std::string& s);
Format parse_format(const std::string& s);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Ar1;
    std::size_t n = 50;
    std::size_t sims = 500;
    std::size_t boots = 300;
    std::vector<std::string> methods;              // rb, wb, gbs-<scheme>
    std::map<std::string, std::string> scheme_args;  // method -> scheme argument, e.g. gbs-uniform -> 0.5,1.5
    std::uint64_t seed = 20050101;
    Scale scale = Scale::Desk;
    Format format = Format::Csv;
    std::string out;
    std::size_t bins = 40;
    std::size_t threads = 0;  // not part of the report; 0 means default_thread_count()

    /// Throws ConfigError.
    void validate() const;
};

/// Default n, methods and (sims, boots) for the experiment and scale.
ExperimentConfig default_config(ExperimentKind kind, Scale scale);

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> m{"rb",          "wb",          "gbs-multinomial", "gbs-uniform",
                                            "gbs-exp",     "gbs-dirichlet", "gbs-jackknife", "gbs-downweight",
                                            "gbs-moon",    "gbs-unit"};
    return m;
}

/// Weight scheme string for a gbs-* method at length n, e.g. "uniform:0.5,1.5".
/// `sqrt` as a jackknife/downweight d means ceil(sqrt(n)); `half` as moon m means ceil(n/2).
std::string scheme_spec_for(const ExperimentConfig& cfg, const std::string& method, std::size_t n);

// ---------------------------------------------------------------------------
// Report

struct VarianceRow {  // Table-1 shape
    std::string method;
    double mean_var_est = 0.0;
    double var_var_est = 0.0;
    double fallback_rate = 0.0;
    std::size_t degenerate_cells = 0;
};

struct CoverageRow {  // Table-2 shape
    std::size_t case_index = 0;  // 1-based
    double true_logit = 0.0;
    std::string method;
    double mean_ci_length = 0.0;
    double coverage_pct = 0.0;
    double fallback_rate = 0.0;
    std::size_t degenerate_cells = 0;
};

struct HistogramRow {  // Figure-1 shape
    std::string method;
    std::size_t parameter = 0;  // 1-based
    double bin_center = 0.0;
    double density = 0.0;
    bool is_mode = false;
};

struct RootRow {
    std::vector<double> theta;
    double psi = 0.0;
    std::size_t iterations = 0;
};

struct ModeSummary {
    std::string method;
    std::size_t parameter = 0;
    std::vector<double> mode_centers;
    double fallback_rate = 0.0;
    std::size_t outside = 0;
};

struct ConditionRow {  // weights-check shape
    std::string scheme;
    std::string clause;   // bw, cltw, vw_a, vw_b or a numbered clause
    std::string quantity;
    std::string relation;
    double slope = 0.0;
    std::string verdict;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<VarianceRow> variance_rows;  // includes a "truth" row for ar1
    std::vector<CoverageRow> coverage_rows;
    std::vector<HistogramRow> histogram_rows;
    std::vector<RootRow> roots;
    std::vector<ModeSummary> modes;
    std::vector<ConditionRow> condition_rows;
    std::vector<std::string> notes;
    bool degenerate = false;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Paper-side constants for the bundled data experiments.
Vector fumigant_true_beta();
Vector isomerization_second_start();

}  // namespace gebs
