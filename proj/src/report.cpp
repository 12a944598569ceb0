#include "gebs/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gebs/errors.hpp"

namespace gebs {

namespace {

using nlohmann::json;

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

std::string scheme_args_string(const std::map<std::string, std::string>& m) {
    std::vector<std::string> parts;
    for (const auto& [k, v] : m) parts.push_back(k + ":" + v);
    return join(parts, ";");
}

std::map<std::string, std::string> parse_scheme_args(const std::string& s) {
    std::map<std::string, std::string> out;
    for (const auto& part : split(s, ';')) {
        if (part.empty()) continue;
        const auto c = part.find(':');
        if (c == std::string::npos) throw ConfigError("scheme argument '" + part + "' needs the form method:args");
        out[part.substr(0, c)] = part.substr(c + 1);
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> config_pairs(const ExperimentConfig& c) {
    return {{"experiment", to_string(c.experiment)},
            {"n", std::to_string(c.n)},
            {"sims", std::to_string(c.sims)},
            {"boots", std::to_string(c.boots)},
            {"methods", join(c.methods, ",")},
            {"scheme_args", scheme_args_string(c.scheme_args)},
            {"seed", std::to_string(c.seed)},
            {"scale", to_string(c.scale)},
            {"format", to_string(c.format)},
            {"bins", std::to_string(c.bins)}};
}

std::uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t used = 0;
        const auto x = std::stoull(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("bad value '" + v + "' for " + key);
    }
}

void apply_pair(ExperimentConfig& c, const std::string& key, const std::string& v) {
    if (key == "experiment") c.experiment = parse_experiment(v);
    else if (key == "n") c.n = to_u64(v, key);
    else if (key == "sims") c.sims = to_u64(v, key);
    else if (key == "boots") c.boots = to_u64(v, key);
    else if (key == "methods") c.methods = split(v, ',');
    else if (key == "scheme_args") c.scheme_args = parse_scheme_args(v);
    else if (key == "seed") c.seed = to_u64(v, key);
    else if (key == "scale") c.scale = parse_scale(v);
    else if (key == "format") c.format = parse_format(v);
    else if (key == "bins") c.bins = to_u64(v, key);
}

json num(double v) {
    if (std::isfinite(v)) return std::stod(format_number(v));
    return format_number(v);
}

double from_num(const json& j) {
    if (j.is_string()) return std::stod(j.get<std::string>());
    return j.get<double>();
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    std::string s(buf);
    if (s == "-0") s = "0";
    return s;
}

std::string render_csv(const ExperimentReport& r) {
    std::ostringstream os;
    for (const auto& [k, v] : config_pairs(r.config)) os << "# " << k << "=" << v << "\n";
    for (const auto& note : r.notes) os << "# note=" << note << "\n";
    for (const auto& root : r.roots) {
        os << "# root=";
        for (std::size_t i = 0; i < root.theta.size(); ++i) os << (i ? " " : "") << format_number(root.theta[i]);
        os << " psi=" << format_number(root.psi) << " iterations=" << root.iterations << "\n";
    }
    for (const auto& m : r.modes) {
        os << "# modes=" << m.method << " theta" << m.parameter << ":";
        for (double c : m.mode_centers) os << " " << format_number(c);
        os << " (fallback_rate " << format_number(m.fallback_rate) << ", outside " << m.outside << ")\n";
    }
    for (const auto& v : r.variance_rows)
        if (v.degenerate_cells) os << "# degenerate=" << v.method << " cells=" << v.degenerate_cells << "\n";
    for (const auto& c : r.coverage_rows)
        if (c.degenerate_cells)
            os << "# degenerate=" << c.method << " case=" << c.case_index << " cells=" << c.degenerate_cells << "\n";
    os << "# degenerate_run=" << (r.degenerate ? "true" : "false") << "\n";

    switch (r.config.experiment) {
        case ExperimentKind::Ar1:
            os << "method,mean_var_est,var_var_est,fallback_rate\n";
            for (const auto& v : r.variance_rows)
                os << v.method << "," << format_number(v.mean_var_est) << "," << format_number(v.var_var_est) << ","
                   << format_number(v.fallback_rate) << "\n";
            break;
        case ExperimentKind::Glm:
            os << "case,true_logit,method,mean_ci_length,coverage_pct,fallback_rate\n";
            for (const auto& c : r.coverage_rows)
                os << c.case_index << "," << format_number(c.true_logit) << "," << c.method << ","
                   << format_number(c.mean_ci_length) << "," << format_number(c.coverage_pct) << ","
                   << format_number(c.fallback_rate) << "\n";
            break;
        case ExperimentKind::Nls:
            os << "method,parameter,bin_center,density,is_mode\n";
            for (const auto& h : r.histogram_rows)
                os << h.method << "," << h.parameter << "," << format_number(h.bin_center) << ","
                   << format_number(h.density) << "," << (h.is_mode ? 1 : 0) << "\n";
            break;
        case ExperimentKind::WeightsCheck:
            os << "scheme,clause,quantity,relation,slope,verdict\n";
            for (const auto& c : r.condition_rows)
                os << c.scheme << "," << c.clause << ",\"" << c.quantity << "\"," << c.relation << ","
                   << format_number(c.slope) << "," << c.verdict << "\n";
            break;
    }
    return os.str();
}

std::string render_json(const ExperimentReport& r) {
    json j;
    json cfg = json::object();
    for (const auto& [k, v] : config_pairs(r.config)) cfg[k] = v;
    j["config"] = cfg;
    j["notes"] = r.notes;
    j["degenerate"] = r.degenerate;
    json rows = json::array();
    for (const auto& v : r.variance_rows)
        rows.push_back({{"method", v.method},
                        {"mean_var_est", num(v.mean_var_est)},
                        {"var_var_est", num(v.var_var_est)},
                        {"fallback_rate", num(v.fallback_rate)},
                        {"degenerate_cells", v.degenerate_cells}});
    j["variance_rows"] = rows;
    rows = json::array();
    for (const auto& c : r.coverage_rows)
        rows.push_back({{"case", c.case_index},
                        {"true_logit", num(c.true_logit)},
                        {"method", c.method},
                        {"mean_ci_length", num(c.mean_ci_length)},
                        {"coverage_pct", num(c.coverage_pct)},
                        {"fallback_rate", num(c.fallback_rate)},
                        {"degenerate_cells", c.degenerate_cells}});
    j["coverage_rows"] = rows;
    rows = json::array();
    for (const auto& h : r.histogram_rows)
        rows.push_back({{"method", h.method},
                        {"parameter", h.parameter},
                        {"bin_center", num(h.bin_center)},
                        {"density", num(h.density)},
                        {"is_mode", h.is_mode}});
    j["histogram_rows"] = rows;
    rows = json::array();
    for (const auto& root : r.roots) {
        json th = json::array();
        for (double t : root.theta) th.push_back(num(t));
        rows.push_back({{"theta", th}, {"psi", num(root.psi)}, {"iterations", root.iterations}});
    }
    j["roots"] = rows;
    rows = json::array();
    for (const auto& m : r.modes) {
        json centers = json::array();
        for (double c : m.mode_centers) centers.push_back(num(c));
        rows.push_back({{"method", m.method},
                        {"parameter", m.parameter},
                        {"mode_centers", centers},
                        {"fallback_rate", num(m.fallback_rate)},
                        {"outside", m.outside}});
    }
    j["modes"] = rows;
    rows = json::array();
    for (const auto& c : r.condition_rows)
        rows.push_back({{"scheme", c.scheme},
                        {"clause", c.clause},
                        {"quantity", c.quantity},
                        {"relation", c.relation},
                        {"slope", num(c.slope)},
                        {"verdict", c.verdict}});
    j["condition_rows"] = rows;
    return j.dump(2) + "\n";
}

std::string render(const ExperimentReport& report, Format format) {
    return format == Format::Json ? render_json(report) : render_csv(report);
}

void emit_report(const ExperimentReport& report, Format format, const std::string& path) {
    const std::string text = render(report, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw WriteError("cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out) throw WriteError("failed writing " + path);
}

ExperimentReport parse_json_report(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("report is not valid JSON: ") + e.what());
    }
    ExperimentReport r;
    try {
        for (const auto& [k, v] : j.at("config").items()) apply_pair(r.config, k, v.get<std::string>());
        r.notes = j.at("notes").get<std::vector<std::string>>();
        r.degenerate = j.at("degenerate").get<bool>();
        for (const auto& v : j.at("variance_rows"))
            r.variance_rows.push_back({v.at("method").get<std::string>(), from_num(v.at("mean_var_est")),
                                       from_num(v.at("var_var_est")), from_num(v.at("fallback_rate")),
                                       v.at("degenerate_cells").get<std::size_t>()});
        for (const auto& c : j.at("coverage_rows"))
            r.coverage_rows.push_back({c.at("case").get<std::size_t>(), from_num(c.at("true_logit")),
                                       c.at("method").get<std::string>(), from_num(c.at("mean_ci_length")),
                                       from_num(c.at("coverage_pct")), from_num(c.at("fallback_rate")),
                                       c.at("degenerate_cells").get<std::size_t>()});
        for (const auto& h : j.at("histogram_rows"))
            r.histogram_rows.push_back({h.at("method").get<std::string>(), h.at("parameter").get<std::size_t>(),
                                        from_num(h.at("bin_center")), from_num(h.at("density")),
                                        h.at("is_mode").get<bool>()});
        for (const auto& x : j.at("roots")) {
            RootRow row;
            for (const auto& t : x.at("theta")) row.theta.push_back(from_num(t));
            row.psi = from_num(x.at("psi"));
            row.iterations = x.at("iterations").get<std::size_t>();
            r.roots.push_back(row);
        }
        for (const auto& x : j.at("modes")) {
            ModeSummary m;
            m.method = x.at("method").get<std::string>();
            m.parameter = x.at("parameter").get<std::size_t>();
            for (const auto& c : x.at("mode_centers")) m.mode_centers.push_back(from_num(c));
            m.fallback_rate = from_num(x.at("fallback_rate"));
            m.outside = x.at("outside").get<std::size_t>();
            r.modes.push_back(m);
        }
        for (const auto& c : j.at("condition_rows"))
            r.condition_rows.push_back({c.at("scheme").get<std::string>(), c.at("clause").get<std::string>(),
                                        c.at("quantity").get<std::string>(), c.at("relation").get<std::string>(),
                                        from_num(c.at("slope")), c.at("verdict").get<std::string>()});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
    return r;
}

ExperimentConfig config_from_report(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') return parse_json_report(text).config;
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    bool any = false;
    while (std::getline(in, line)) {
        if (line.rfind("# ", 0) != 0) break;
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(2, eq - 2);
        if (key == "note" || key == "root" || key == "modes" || key == "degenerate" || key == "degenerate_run") continue;
        apply_pair(c, key, line.substr(eq + 1));
        any = true;
    }
    if (!any) throw ConfigError("report carries no config echo");
    return c;
}

}  // namespace gebs
