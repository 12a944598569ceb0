#pragma once

#include <string>
#include <vector>

#include "gebs/models.hpp"

namespace gebs {

/// Numeric CSV with a header row. Rows are numbered from 1 (first data row).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Column by name; throws ParseError(0, ...) when absent.
    std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path, const std::vector<std::string>& required);

/// Column `x`, first row X_0.
Ar1Data load_ar1_csv(const std::string& path);
/// Columns `N,X,Y` with 0 <= Y <= N and integral N, Y.
GlmData load_glm_csv(const std::string& path);
/// Columns `H,P,I,y`.
NlsData load_nls_csv(const std::string& path);

/// Path of a file under the bundled data directory.
std::string bundled_data_path(const std::string& file);

}  // namespace gebs
