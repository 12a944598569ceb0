#include "gebs/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gebs/errors.hpp"

#ifndef GEBS_DATA_DIR
#define GEBS_DATA_DIR "data"
#endif

namespace gebs {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
    double v = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (cell.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(row, "non-numeric value '" + cell + "' in column " + col);
    return v;
}

}  // namespace

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(0, "missing column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

CsvTable read_csv(const std::string& path, const std::vector<std::string>& required) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(0, "empty file " + path);
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
    t.header = split(line);
    for (const auto& name : required)
        if (std::find(t.header.begin(), t.header.end(), name) == t.header.end())
            throw ParseError(0, "missing column '" + name + "' in " + path);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ParseError(row, "expected " + std::to_string(t.header.size()) + " cells, found " +
                                      std::to_string(cells.size()));
        std::vector<double> values;
        for (std::size_t k = 0; k < cells.size(); ++k) values.push_back(parse_number(cells[k], row, t.header[k]));
        t.rows.push_back(std::move(values));
    }
    return t;
}

Ar1Data load_ar1_csv(const std::string& path) {
    const auto t = read_csv(path, {"x"});
    const auto x = t.column("x");
    if (x.size() < 2) throw ParseError(x.size(), "AR(1) series needs at least 2 values");
    Ar1Data d;
    d.series = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
    d.meta = path;
    return d;
}

GlmData load_glm_csv(const std::string& path) {
    const auto t = read_csv(path, {"N", "X", "Y"});
    GlmData d;
    d.N = t.column("N");
    d.X = t.column("X");
    d.Y = t.column("Y");
    for (std::size_t r = 0; r < d.N.size(); ++r) {
        if (d.N[r] < 1 || d.N[r] != std::floor(d.N[r])) throw ParseError(r + 1, "N must be a positive integer");
        if (d.Y[r] < 0 || d.Y[r] != std::floor(d.Y[r])) throw ParseError(r + 1, "Y must be a nonnegative integer");
        if (d.Y[r] > d.N[r]) throw ParseError(r + 1, "Y exceeds N");
    }
    if (d.N.size() < 2) throw ParseError(d.N.size(), "GLM data needs at least 2 groups");
    d.meta = path;
    return d;
}

NlsData load_nls_csv(const std::string& path) {
    const auto t = read_csv(path, {"H", "P", "I", "y"});
    NlsData d;
    d.H = t.column("H");
    d.P = t.column("P");
    d.I = t.column("I");
    d.y = t.column("y");
    if (d.y.size() < 5) throw ParseError(d.y.size(), "NLS data needs at least 5 rows");
    d.meta = path;
    return d;
}

std::string bundled_data_path(const std::string& file) {
    if (const char* env = std::getenv("GEBS_DATA_DIR"); env && *env) return std::string(env) + "/" + file;
    return std::string(GEBS_DATA_DIR) + "/" + file;
}

}  // namespace gebs
