#pragma once

// Run persistence: convergence CSVs, design snapshots, schema-versioned
// JSON reports with a file manifest, and a plain-text summary table.
// All numeric text uses 12 significant digits; files end lines with LF.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rarering/driver.hpp"
#include "rarering/estimator.hpp"
#include "rarering/exploration_plan.hpp"
#include "rarering/input_transform.hpp"

namespace rarering {

inline constexpr const char* report_schema = "rare-ring/1";

namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline double parse_double(const std::string& s) {
    return std::strtod(s.c_str(), nullptr);
}

// JSON cannot carry IEEE specials as numbers; they travel as strings.
inline nlohmann::json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline double number_from_json(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string& s = j.get_ref<const std::string&>();
        if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    throw std::invalid_argument("number_from_json: not a number");
}

inline std::uint32_t crc32(const std::string& data) {
    static const auto table = [] {
        std::vector<std::uint32_t> t(256);
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1u) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t c = 0xffffffffu;
    for (unsigned char ch : data) c = table[(c ^ ch) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field += ch;
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace detail

struct ManifestEntry {
    std::string path;
    std::uint64_t bytes = 0;
    std::uint32_t crc32 = 0;
};

// Writes `content` to `path`, refusing to overwrite unless forced.
inline ManifestEntry write_artifact(const std::string& path, const std::string& content,
                                    bool force = false) {
    if (!force && std::filesystem::exists(path))
        throw std::runtime_error("refusing to overwrite existing file " + path
                                 + " (pass force to replace)");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    out.close();
    if (!out) throw std::runtime_error("write failed for " + path);
    return {path, content.size(), detail::crc32(content)};
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- convergence history ----

inline std::string history_csv_text(const ConvergenceHistory& history) {
    std::string out = "n_sim,psi,label,p_hat,cov,r_inner,r_outer,n_rare\n";
    for (const auto& r : history.rows) {
        out += std::to_string(r.n_sim) + ',';
        out += detail::format_double(r.psi) + ',';
        out += std::to_string(r.label_code) + ',';
        out += detail::format_double(r.p_hat) + ',';
        out += detail::format_double(r.cov) + ',';
        out += detail::format_double(r.r_inner) + ',';
        out += detail::format_double(r.r_outer) + ',';
        out += std::to_string(r.n_rare) + '\n';
    }
    return out;
}

inline ManifestEntry write_history_csv(const ConvergenceHistory& history,
                                       const std::string& path, bool force = false) {
    if (history.rows.empty())
        throw std::invalid_argument("write_history_csv: empty history");
    return write_artifact(path, history_csv_text(history), force);
}

inline ConvergenceHistory read_history_csv(const std::string& path) {
    std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty history file " + path);
    ConvergenceHistory history;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (f.size() != 8) throw std::runtime_error("bad history row in " + path);
        HistoryRow r;
        r.n_sim = std::strtol(f[0].c_str(), nullptr, 10);
        r.psi = detail::parse_double(f[1]);
        r.label_code = static_cast<int>(std::strtol(f[2].c_str(), nullptr, 10));
        r.p_hat = detail::parse_double(f[3]);
        r.cov = detail::parse_double(f[4]);
        r.r_inner = detail::parse_double(f[5]);
        r.r_outer = detail::parse_double(f[6]);
        r.n_rare = std::strtol(f[7].c_str(), nullptr, 10);
        history.rows.push_back(r);
    }
    return history;
}

// ---- experimental design ----

inline std::string ed_csv_text(const ExperimentalDesign& ed) {
    std::string out = "index,label,raw";
    for (int k = 0; k < ed.dim(); ++k) out += ",x" + std::to_string(k + 1);
    out += '\n';
    for (std::size_t i = 0; i < ed.size(); ++i) {
        out += std::to_string(i) + ',' + std::to_string(ed.code(i)) + ',';
        auto raw = ed.raw(i);
        if (raw) out += detail::format_double(*raw);
        const double* p = ed.point_ptr(i);
        for (int k = 0; k < ed.dim(); ++k) out += ',' + detail::format_double(p[k]);
        out += '\n';
    }
    return out;
}

inline ManifestEntry write_ed_csv(const ExperimentalDesign& ed, const std::string& path,
                                  bool force = false) {
    return write_artifact(path, ed_csv_text(ed), force);
}

inline ExperimentalDesign read_ed_csv(const std::string& path) {
    std::string text = read_text_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty design file " + path);
    auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "index")
        throw std::runtime_error("bad design header in " + path);
    int dim = static_cast<int>(header.size()) - 3;
    ExperimentalDesign ed(dim);
    std::vector<double> x(static_cast<std::size_t>(dim));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = detail::split_csv_line(line);
        if (static_cast<int>(f.size()) != dim + 3)
            throw std::runtime_error("bad design row in " + path);
        int code = static_cast<int>(std::strtol(f[1].c_str(), nullptr, 10));
        std::optional<double> raw;
        if (!f[2].empty()) raw = detail::parse_double(f[2]);
        for (int k = 0; k < dim; ++k) x[static_cast<std::size_t>(k)] = detail::parse_double(f[3 + k]);
        ed.add_point(x, code, raw);
    }
    return ed;
}

inline nlohmann::json ed_to_json(const ExperimentalDesign& ed) {
    nlohmann::json points = nlohmann::json::array();
    nlohmann::json codes = nlohmann::json::array();
    nlohmann::json raws = nlohmann::json::array();
    for (std::size_t i = 0; i < ed.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        const double* p = ed.point_ptr(i);
        for (int k = 0; k < ed.dim(); ++k) row.push_back(detail::json_number(p[k]));
        points.push_back(std::move(row));
        codes.push_back(ed.code(i));
        auto raw = ed.raw(i);
        raws.push_back(raw ? nlohmann::json(detail::json_number(*raw)) : nlohmann::json(nullptr));
    }
    return {{"dim", ed.dim()}, {"points", points}, {"labels", codes}, {"raw", raws}};
}

inline ExperimentalDesign ed_from_json(const nlohmann::json& j) {
    int dim = j.at("dim").get<int>();
    ExperimentalDesign ed(dim);
    const auto& points = j.at("points");
    const auto& codes = j.at("labels");
    const auto& raws = j.at("raw");
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (int k = 0; k < dim; ++k)
            x[static_cast<std::size_t>(k)] = detail::number_from_json(points[i][static_cast<std::size_t>(k)]);
        std::optional<double> raw;
        if (!raws[i].is_null()) raw = detail::number_from_json(raws[i]);
        ed.add_point(x, codes[i].get<int>(), raw);
    }
    return ed;
}

// ---- exploration plan ----

inline nlohmann::json plan_to_json(const ExplorationPlan& plan, bool include_points = true) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& layer : plan.layers) {
        nlohmann::json l = {{"level", layer.level},
                            {"prob_outside", detail::json_number(layer.prob_outside)},
                            {"radius", detail::json_number(layer.radius)},
                            {"count", layer.points.size()},
                            {"remaining", layer.remaining()}};
        if (include_points) {
            nlohmann::json pts = nlohmann::json::array();
            for (std::size_t i = 0; i < layer.points.size(); ++i) {
                nlohmann::json row = nlohmann::json::array();
                const double* p = layer.points.row_ptr(i);
                for (int k = 0; k < plan.n_var; ++k) row.push_back(detail::json_number(p[k]));
                pts.push_back(std::move(row));
            }
            l["points"] = std::move(pts);
        }
        layers.push_back(std::move(l));
    }
    return {{"dim", plan.n_var}, {"seed", plan.seed}, {"layers", layers}};
}

// ---- probabilistic input config ----

inline MarginalSpec marginal_from_json(const nlohmann::json& j) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "std_normal" || kind == "normal") return MarginalSpec::standard_normal();
    if (kind == "gumbel")
        return MarginalSpec::gumbel(j.value("location", 0.0), j.value("scale", 1.0));
    if (kind == "weibull")
        return MarginalSpec::weibull(j.at("shape").get<double>(), j.value("scale", 1.0));
    throw std::invalid_argument("unknown marginal kind '" + kind + "'");
}

// Builds a dependence model from a JSON problem config. The correlation
// may be given directly for the underlying Gaussian vector
// ("gaussian_correlation") or as target Pearson correlations of the
// physical marginals ("target_correlation"), which are then inverted.
inline NatafModel nataf_model_from_json(const nlohmann::json& j) {
    std::vector<MarginalSpec> marginals;
    for (const auto& m : j.at("marginals")) marginals.push_back(marginal_from_json(m));
    int n = static_cast<int>(marginals.size());
    auto read_matrix = [n](const nlohmann::json& m) {
        std::vector<double> out;
        if (static_cast<int>(m.size()) != n)
            throw std::invalid_argument("correlation matrix size mismatch");
        for (const auto& row : m) {
            if (static_cast<int>(row.size()) != n)
                throw std::invalid_argument("correlation matrix size mismatch");
            for (const auto& v : row) out.push_back(detail::number_from_json(v));
        }
        return out;
    };
    if (j.contains("gaussian_correlation"))
        return NatafModel(std::move(marginals), read_matrix(j["gaussian_correlation"]));
    if (!j.contains("target_correlation"))
        throw std::invalid_argument("need gaussian_correlation or target_correlation");
    std::vector<double> target = read_matrix(j["target_correlation"]);
    std::vector<double> gauss(target.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        gauss[static_cast<std::size_t>(i) * n + i] = 1.0;
        for (int k = i + 1; k < n; ++k) {
            double rho = underlying_gaussian_correlation(marginals[static_cast<std::size_t>(i)],
                                                         marginals[static_cast<std::size_t>(k)],
                                                         target[static_cast<std::size_t>(i) * n + k]);
            gauss[static_cast<std::size_t>(i) * n + k] = rho;
            gauss[static_cast<std::size_t>(k) * n + i] = rho;
        }
    }
    return NatafModel(std::move(marginals), std::move(gauss));
}

// ---- run report ----

namespace detail {

inline nlohmann::json record_to_json(const EstimateRecord& r) {
    return {{"label", r.label_code},
            {"p_hat", json_number(r.p_hat)},
            {"variance", json_number(r.variance)},
            {"cov", json_number(r.cov)},
            {"n_is", r.n_is},
            {"n_hits", r.n_hits},
            {"method", r.method == EstimateMethod::global_ring ? "global_ring" : "localized"},
            {"r_inner", json_number(r.annulus.inner_radius)},
            {"r_outer", json_number(r.annulus.outer_radius)},
            {"annulus_content", json_number(r.annulus.prob_content)}};
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    return {{"benchmark", cfg.benchmark},
            {"external_command", cfg.external_command},
            {"dim", cfg.dim},
            {"budget", cfg.budget},
            {"seed", cfg.seed},
            {"n_is", cfg.n_is},
            {"n_is_final", cfg.n_is_final},
            {"estimate_every", cfg.estimate_every},
            {"stop_psi_ratio", json_number(cfg.stop_psi_ratio)},
            {"binary_only", cfg.binary_only},
            {"dots_per_seed", cfg.dots_per_seed},
            {"k_sensitivity", cfg.k_sensitivity},
            {"max_level", cfg.max_level},
            {"fraction", json_number(cfg.fraction)},
            {"oversample", json_number(cfg.oversample)}};
}

}  // namespace detail

inline nlohmann::json report_json(const AnalysisResult& result,
                                  const std::vector<ManifestEntry>& manifest = {}) {
    nlohmann::json j;
    j["schema"] = report_schema;
    j["config"] = detail::config_to_json(result.config);
    j["labels"] = result.label_names;
    j["termination"] = result.termination;
    j["warnings"] = result.warnings;

    nlohmann::json estimates = nlohmann::json::array();
    for (const auto& r : result.final_estimates) estimates.push_back(detail::record_to_json(r));
    j["estimates"] = estimates;

    nlohmann::json localized = nlohmann::json::array();
    for (const auto& r : result.localized_estimates) localized.push_back(detail::record_to_json(r));
    j["localized_estimates"] = localized;

    nlohmann::json sens = nlohmann::json::array();
    for (const auto& [code, s] : result.sensitivities) {
        nlohmann::json shares = nlohmann::json::array();
        for (double v : s.s_sq) shares.push_back(detail::json_number(v));
        sens.push_back({{"label", code},
                        {"s_squared", shares},
                        {"n_used", s.n_used},
                        {"n_skipped", s.n_skipped}});
    }
    j["sensitivities"] = sens;

    nlohmann::json hist = nlohmann::json::array();
    for (const auto& r : result.history.rows)
        hist.push_back({{"n_sim", r.n_sim},
                        {"psi", detail::json_number(r.psi)},
                        {"label", r.label_code},
                        {"p_hat", detail::json_number(r.p_hat)},
                        {"cov", detail::json_number(r.cov)},
                        {"r_inner", detail::json_number(r.r_inner)},
                        {"r_outer", detail::json_number(r.r_outer)},
                        {"n_rare", r.n_rare}});
    j["history"] = hist;

    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : result.steps)
        steps.push_back({{"n_sim", s.n_sim},
                         {"psi", detail::json_number(s.psi)},
                         {"origin", s.origin == CandidateOrigin::exploitation
                                        ? "exploitation" : "exploration"},
                         {"level", s.level},
                         {"label", s.code},
                         {"pool_size", s.pool_size},
                         {"pool_exploitation", s.pool_exploitation}});
    j["psi_history"] = steps;

    j["ed"] = ed_to_json(result.ed);

    if (std::isfinite(result.reference_p_f)) {
        double total = result.rare_total();
        nlohmann::json ref = {{"p_f", detail::json_number(result.reference_p_f)}};
        ref["ratio"] = detail::json_number(result.reference_p_f > 0.0
                                               ? total / result.reference_p_f
                                               : std::numeric_limits<double>::quiet_NaN());
        if (!result.reference_s_squared.empty()) {
            nlohmann::json s = nlohmann::json::array();
            for (double v : result.reference_s_squared) s.push_back(detail::json_number(v));
            ref["s_squared"] = s;
        }
        j["reference"] = ref;
    } else {
        j["reference"] = nullptr;
    }

    nlohmann::json files = nlohmann::json::array();
    for (const auto& m : manifest) {
        char crc[16];
        std::snprintf(crc, sizeof crc, "%08x", m.crc32);
        files.push_back({{"path", m.path}, {"bytes", m.bytes}, {"crc32", crc}});
    }
    j["manifest"] = files;
    return j;
}

inline ManifestEntry write_report_json(const AnalysisResult& result, const std::string& path,
                                       const std::vector<ManifestEntry>& manifest = {},
                                       bool force = false) {
    return write_artifact(path, report_json(result, manifest).dump(2) + "\n", force);
}

// Emits the standard artifact set for one run into `dir`:
// history.csv, ed.csv or ed.json, and report.json whose manifest lists
// the data files. Returns all entries, report last.
inline std::vector<ManifestEntry> emit_run(const AnalysisResult& result, const std::string& dir,
                                           const std::string& format = "csv",
                                           bool force = false) {
    if (format != "csv" && format != "json")
        throw std::invalid_argument("emit_run: format must be csv or json");
    std::filesystem::create_directories(dir);
    std::vector<ManifestEntry> manifest;
    if (!result.history.rows.empty())
        manifest.push_back(write_history_csv(result.history, dir + "/history.csv", force));
    if (format == "csv") {
        manifest.push_back(write_ed_csv(result.ed, dir + "/ed.csv", force));
    } else {
        manifest.push_back(write_artifact(dir + "/ed.json",
                                          ed_to_json(result.ed).dump(2) + "\n", force));
    }
    manifest.push_back(write_report_json(result, dir + "/report.json", manifest, force));
    return manifest;
}

// Median-aggregated comparison table over a set of finished runs,
// grouped by benchmark name. Columns: name, n_sim, p_hat, cov, ratio.
inline std::string summarize(const std::vector<AnalysisResult>& results) {
    if (results.empty()) throw std::invalid_argument("summarize: no results");
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    std::map<std::string, std::vector<const AnalysisResult*>> groups;
    for (const auto& r : results) {
        std::string key = r.config.external_command.empty() ? r.config.benchmark
                                                            : r.config.external_command;
        groups[key].push_back(&r);
    }
    char line[160];
    std::string out;
    std::snprintf(line, sizeof line, "%-14s %8s %14s %10s %8s\n",
                  "name", "n_sim", "p_hat", "cov", "ratio");
    out += line;
    for (const auto& [name, group] : groups) {
        std::vector<double> n_sim, p_hat, cov;
        double ref = std::numeric_limits<double>::quiet_NaN();
        for (const auto* r : group) {
            n_sim.push_back(static_cast<double>(r->ed.size()));
            p_hat.push_back(r->rare_total());
            double c = std::numeric_limits<double>::infinity();
            double best_p = -1.0;
            for (const auto& rec : r->final_estimates)
                if (rec.p_hat > best_p) { best_p = rec.p_hat; c = rec.cov; }
            cov.push_back(c);
            ref = r->reference_p_f;
        }
        double med_p = median(p_hat);
        double ratio = std::isfinite(ref) && ref > 0.0
                           ? med_p / ref
                           : std::numeric_limits<double>::quiet_NaN();
        std::snprintf(line, sizeof line, "%-14s %8.0f %14s %10s %8s\n", name.c_str(),
                      median(n_sim), detail::format_double(med_p).c_str(),
                      detail::format_double(median(cov)).c_str(),
                      std::isfinite(ratio) ? detail::format_double(ratio).c_str() : "-");
        out += line;
    }
    return out;
}

}  // namespace rarering
