#include "ccekit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace ccekit::cli {

using json = nlohmann::json;
namespace mc = montecarlo;

namespace {

// Locates keys in the raw text so errors can name a line.
class Source {
public:
    explicit Source(const std::string& text) : text_(text) {}

    int line_of_offset(std::size_t off) const {
        off = std::min(off, text_.size());
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<long>(off), '\n'));
    }

    int line_of_key(const std::string& key) const {
        const std::string needle = "\"" + key + "\"";
        const std::size_t pos = text_.find(needle);
        return pos == std::string::npos ? 0 : line_of_offset(pos);
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const int line = line_of_key(key);
        if (line > 0) throw ConfigError("line " + std::to_string(line) + ": " + msg);
        throw ConfigError(msg);
    }

private:
    const std::string& text_;
};

void check_keys(const Source& src, const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) src.fail(where, "'" + where + "' must be an object");
    for (const auto& [key, _] : obj.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) src.fail(key, "unknown key '" + key + "' in " + where);
    }
}

int get_int(const Source& src, const json& obj, const char* key, int def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) src.fail(key, std::string("'") + key + "' must be an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        src.fail(key, std::string("'") + key + "' is out of range");
    }
    return static_cast<int>(x);
}

double get_double(const Source& src, const json& obj, const char* key, double def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number()) src.fail(key, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

bool get_bool(const Source& src, const json& obj, const char* key, bool def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_boolean()) src.fail(key, std::string("'") + key + "' must be true or false");
    return v.get<bool>();
}

std::string get_string(const Source& src, const json& obj, const char* key, const std::string& def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_string()) src.fail(key, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t get_seed(const Source& src, const json& obj, const char* key, std::uint64_t def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
    src.fail(key, std::string("'") + key + "' must be a non-negative integer");
}

template <class F>
auto rethrow_at(const Source& src, const char* key, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        src.fail(key, e.what());
    }
}

void parse_factor(const Source& src, const json& j, dgp::FactorConfig& f) {
    check_keys(src, j, "factor", {"m", "q_low", "q_high", "burn_in", "innovation_scale"});
    f.m = get_int(src, j, "m", f.m);
    f.q_low = get_double(src, j, "q_low", f.q_low);
    f.q_high = get_double(src, j, "q_high", f.q_high);
    f.burn_in = get_int(src, j, "burn_in", f.burn_in);
    if (j.contains("innovation_scale")) {
        const std::string s = get_string(src, j, "innovation_scale", "");
        f.innovation_scale = rethrow_at(src, "innovation_scale", [&] { return dgp::parse_innovation_scale(s); });
    }
}

dgp::ErrorConfig error_defaults(dgp::ErrorMode mode) {
    switch (mode) {
        case dgp::ErrorMode::iid: return dgp::ErrorConfig::iid();
        case dgp::ErrorMode::weak_time_cs: return dgp::ErrorConfig::weak_time_cs();
        case dgp::ErrorMode::weak_cs:
        case dgp::ErrorMode::nonstationary_v: break;
    }
    dgp::ErrorConfig e = dgp::ErrorConfig::weak_cs();
    e.mode = mode;
    return e;
}

dgp::ErrorConfig parse_errors(const Source& src, const json& j) {
    check_keys(src, j, "errors", {"mode", "rho", "rho_v", "kappa", "kappa_v", "J", "J_v", "burn_in"});
    const std::string mode = get_string(src, j, "mode", "weak_cs");
    dgp::ErrorConfig e = error_defaults(rethrow_at(src, "mode", [&] { return dgp::parse_error_mode(mode); }));
    e.rho = get_double(src, j, "rho", e.rho);
    e.rho_v = get_double(src, j, "rho_v", e.rho_v);
    e.kappa = get_double(src, j, "kappa", e.kappa);
    e.kappa_v = get_double(src, j, "kappa_v", e.kappa_v);
    e.J = get_int(src, j, "J", e.J);
    e.J_v = get_int(src, j, "J_v", e.J_v);
    e.burn_in = get_int(src, j, "burn_in", e.burn_in);
    rethrow_at(src, "errors", [&] {
        e.validate();
        return 0;
    });
    return e;
}

void parse_dgp(const Source& src, const json& j, dgp::PanelConfig& p) {
    check_keys(src, j, "dgp",
               {"k", "beta", "slope_het_sd", "loading_mean", "loading_sd", "oracle_candidates", "factor", "errors"});
    p.k = get_int(src, j, "k", p.k);
    p.beta_level = get_double(src, j, "beta", p.beta_level);
    p.slope_het_sd = get_double(src, j, "slope_het_sd", p.slope_het_sd);
    p.loading_mean = get_double(src, j, "loading_mean", p.loading_mean);
    p.loading_sd = get_double(src, j, "loading_sd", p.loading_sd);
    p.oracle_candidates = get_bool(src, j, "oracle_candidates", p.oracle_candidates);
    if (j.contains("factor")) parse_factor(src, j.at("factor"), p.factor);
    if (j.contains("errors")) p.errors = parse_errors(src, j.at("errors"));
}

std::vector<mc::Estimator> parse_criteria(const Source& src, const json& j, const char* key) {
    if (!j.is_array() || j.empty()) src.fail(key, std::string("'") + key + "' must be a nonempty array");
    std::vector<mc::Estimator> out;
    for (const json& item : j) {
        check_keys(src, item, "criteria entry", {"criterion", "penalty"});
        const std::string c = get_string(src, item, "criterion", "");
        const std::string p = get_string(src, item, "penalty", "none");
        if (c.empty()) src.fail(key, "criteria entry without 'criterion'");
        out.push_back(rethrow_at(src, key, [&] { return mc::parse_estimator(c, p); }));
    }
    return out;
}

std::vector<mc::Cell> parse_cells(const Source& src, const json& j) {
    if (!j.is_array() || j.empty()) src.fail("cells", "'cells' must be a nonempty array");
    std::vector<mc::Cell> out;
    for (const json& item : j) {
        check_keys(src, item, "cells entry", {"N", "T", "tau"});
        if (!item.contains("N") || !item.contains("T")) src.fail("cells", "cells entry needs N and T");
        mc::Cell c;
        c.N = get_int(src, item, "N", 0);
        c.T = get_int(src, item, "T", 0);
        c.tau = get_double(src, item, "tau", 0.0);
        if (c.tau < 0.0 || c.tau >= 1.0) src.fail("tau", "cell tau must lie in [0, 1)");
        out.push_back(c);
    }
    return out;
}

void parse_sweep(const Source& src, const json& j, SweepConfig& s, const dgp::ErrorConfig& base_errors) {
    check_keys(src, j, "sweep", {"N", "T", "tau_start", "tau_step", "tau_end", "error_modes", "criteria"});
    s.N = get_int(src, j, "N", s.N);
    s.T = get_int(src, j, "T", s.T);
    s.tau_start = get_double(src, j, "tau_start", s.tau_start);
    s.tau_step = get_double(src, j, "tau_step", s.tau_step);
    s.tau_end = get_double(src, j, "tau_end", s.tau_end);
    rethrow_at(src, "sweep", [&] { return mc::tau_grid(s.tau_start, s.tau_step, s.tau_end); });
    if (j.contains("error_modes")) {
        const json& em = j.at("error_modes");
        if (!em.is_array() || em.empty()) src.fail("error_modes", "'error_modes' must be a nonempty array");
        s.error_configs.clear();
        for (const json& item : em) {
            if (item.is_string()) {
                const auto mode = rethrow_at(src, "error_modes",
                                             [&] { return dgp::parse_error_mode(item.get<std::string>()); });
                dgp::ErrorConfig e = error_defaults(mode);
                e.kappa = base_errors.kappa;
                e.kappa_v = base_errors.kappa_v;
                e.J = base_errors.J;
                e.J_v = base_errors.J_v;
                e.burn_in = base_errors.burn_in;
                s.error_configs.push_back(e);
            } else {
                s.error_configs.push_back(parse_errors(src, item));
            }
        }
    }
    if (j.contains("criteria")) s.estimators = parse_criteria(src, j.at("criteria"), "criteria");
}

void parse_rate(const Source& src, const json& j, RateConfig& r) {
    check_keys(src, j, "rate", {"statistics", "tau", "N", "T_grid", "reps", "innovation_scale"});
    if (j.contains("statistics")) {
        const json& st = j.at("statistics");
        if (!st.is_array() || st.empty()) src.fail("statistics", "'statistics' must be a nonempty array");
        r.statistics.clear();
        for (const json& s : st) {
            if (!s.is_string()) src.fail("statistics", "'statistics' entries must be strings");
            r.statistics.push_back(
                rethrow_at(src, "statistics", [&] { return mc::parse_rate_statistic(s.get<std::string>()); }));
        }
    }
    if (j.contains("tau")) {
        const json& t = j.at("tau");
        r.taus.clear();
        if (t.is_number()) {
            r.taus.push_back(t.get<double>());
        } else if (t.is_array() && !t.empty()) {
            for (const json& x : t) {
                if (!x.is_number()) src.fail("tau", "'tau' entries must be numbers");
                r.taus.push_back(x.get<double>());
            }
        } else {
            src.fail("tau", "'tau' must be a number or a nonempty array");
        }
    }
    r.N_fixed = get_int(src, j, "N", r.N_fixed);
    if (j.contains("T_grid")) {
        const json& g = j.at("T_grid");
        if (!g.is_array()) src.fail("T_grid", "'T_grid' must be an array of integers");
        r.T_grid.clear();
        for (const json& x : g) {
            if (!x.is_number_integer()) src.fail("T_grid", "'T_grid' must be an array of integers");
            r.T_grid.push_back(x.get<int>());
        }
    }
    r.reps = get_int(src, j, "reps", r.reps);
    if (j.contains("innovation_scale")) {
        const std::string s = get_string(src, j, "innovation_scale", "");
        r.innovation_scale = rethrow_at(src, "innovation_scale", [&] { return dgp::parse_innovation_scale(s); });
    }
}

}  // namespace

std::vector<mc::RateSpec> RateConfig::specs(std::uint64_t seed, int threads) const {
    std::vector<mc::RateSpec> out;
    for (auto s : statistics) {
        for (double tau : taus) {
            mc::RateSpec spec = mc::default_rate_spec(s, tau);
            spec.N_fixed = N_fixed;
            spec.T_grid = T_grid;
            spec.reps = reps;
            spec.seed = seed;
            spec.threads = threads;
            spec.base.factor.innovation_scale = innovation_scale;
            out.push_back(spec);
        }
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RunConfig parse_config(const std::string& text, const Overrides& overrides) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const Source src(text);
        throw ConfigError("line " + std::to_string(src.line_of_offset(e.byte == 0 ? 0 : e.byte - 1)) +
                          ": invalid JSON (" + e.what() + ")");
    }
    const Source src(text);
    check_keys(src, root, "config", {"schema_version", "reps", "seed", "threads", "cells", "dgp", "criteria", "sweep", "rate"});
    if (!root.contains("schema_version")) throw ConfigError("missing 'schema_version'");
    if (get_int(src, root, "schema_version", 0) != kSchemaVersion) {
        src.fail("schema_version", "unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
    }

    RunConfig cfg;
    std::array<char, 17> hex{};
    std::snprintf(hex.data(), hex.size(), "%016llx", static_cast<unsigned long long>(fnv1a(root.dump())));
    cfg.config_hash = hex.data();

    mc::ExperimentSpec& spec = cfg.spec;
    spec.reps = get_int(src, root, "reps", spec.reps);
    spec.master_seed = get_seed(src, root, "seed", spec.master_seed);
    spec.threads = get_int(src, root, "threads", spec.threads);
    if (root.contains("dgp")) parse_dgp(src, root.at("dgp"), spec.dgp);
    if (root.contains("cells")) spec.cells = parse_cells(src, root.at("cells"));
    if (root.contains("criteria")) spec.estimators = parse_criteria(src, root.at("criteria"), "criteria");
    if (root.contains("sweep")) parse_sweep(src, root.at("sweep"), cfg.sweep, spec.dgp.errors);
    if (root.contains("rate")) parse_rate(src, root.at("rate"), cfg.rate);

    if (overrides.reps) {
        spec.reps = *overrides.reps;
        cfg.rate.reps = *overrides.reps;
    }
    if (overrides.seed) spec.master_seed = *overrides.seed;
    if (overrides.threads) spec.threads = *overrides.threads;

    if (spec.reps < 1) src.fail("reps", "reps must be >= 1");
    if (cfg.rate.reps < 1) src.fail("reps", "rate reps must be >= 1");
    if (spec.threads < 1) src.fail("threads", "threads must be >= 1");
    rethrow_at(src, "dgp", [&] {
        dgp::PanelConfig probe = spec.dgp;
        probe.factor.validate();
        probe.errors.validate();
        return 0;
    });
    rethrow_at(src, "rate", [&] {
        for (const auto& r : cfg.rate.specs(spec.master_seed, spec.threads)) r.validate();
        return 0;
    });
    if (!spec.cells.empty()) {
        rethrow_at(src, "cells", [&] {
            spec.validate();
            return 0;
        });
    }
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides);
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

std::string format_fixed(double v, int digits) {
    if (std::isnan(v)) return "nan";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::fixed, digits);
    return std::string(buf.data(), res.ptr);
}

namespace {

std::string header(const Provenance& p) {
    return "# ccekit " + std::string(kVersion) + " command=" + p.command + " config_hash=" + p.config_hash +
           " seed=" + std::to_string(p.seed) + " reps=" + std::to_string(p.reps) + "\n";
}

}  // namespace

std::string table_csv(const std::vector<mc::ReportRow>& rows, const Provenance& prov) {
    std::string out = header(prov);
    out += "N,T,tau,dgp_mode,criterion,penalty,avg_g,share_misselected,share_over,share_under,reps,failures,seed,"
           "unreliable\n";
    for (const auto& r : rows) {
        out += std::to_string(r.N) + "," + std::to_string(r.T) + "," + format_double(r.tau) + "," + r.dgp_mode +
               "," + r.criterion + "," + r.penalty + "," + format_fixed(r.avg_g, 4) + "," +
               format_fixed(r.share_misselected, 4) + "," + format_fixed(r.share_over, 4) + "," +
               format_fixed(r.share_under, 4) + "," + std::to_string(r.reps) + "," + std::to_string(r.failures) +
               "," + std::to_string(r.seed) + "," + (r.unreliable ? "1" : "0") + "\n";
    }
    return out;
}

std::string sweep_csv(const std::vector<mc::SweepPoint>& points, const Provenance& prov) {
    std::string out = header(prov);
    out += "tau,criterion,error_mode,share_misselected\n";
    for (const auto& p : points) {
        for (const auto& st : p.result.stats) {
            out += format_double(p.tau) + "," + st.estimator.criterion_name() + "_" + st.estimator.penalty_name() +
                   "," + std::string(dgp::to_string(p.error_mode)) + "," + format_fixed(st.share_misselected, 4) +
                   "\n";
        }
    }
    return out;
}

std::string rate_csv(const std::vector<mc::RateResult>& results, const Provenance& prov) {
    std::string out = header(prov);
    out += "statistic,T,median_value,fitted_slope,theoretical_slope,tau\n";
    for (const auto& r : results) {
        const std::string name(mc::to_string(r.statistic));
        for (std::size_t i = 0; i < r.T_grid.size(); ++i) {
            out += name + "," + std::to_string(r.T_grid[i]) + "," + format_double(r.medians[i]) + ",,," +
                   format_double(r.tau) + "\n";
        }
        out += name + ",,," + format_fixed(r.fitted_slope, 6) + "," + format_double(r.theoretical_slope) + "," +
               format_double(r.tau) + "\n";
    }
    return out;
}

std::string sweep_svg(const std::vector<mc::SweepPoint>& points) {
    // series key -> (tau, share)
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    std::vector<std::string> order;
    for (const auto& p : points) {
        for (const auto& st : p.result.stats) {
            const std::string key = st.estimator.criterion_name() + "_" + st.estimator.penalty_name() + " " +
                                    std::string(dgp::to_string(p.error_mode));
            if (!series.count(key)) order.push_back(key);
            series[key].emplace_back(p.tau, st.share_misselected);
        }
    }
    const double w = 640;
    const double h = 400;
    const double left = 60;
    const double right = 190;
    const double top = 20;
    const double bottom = 50;
    const double pw = w - left - right;
    const double ph = h - top - bottom;
    auto sx = [&](double t) { return left + t * pw; };
    auto sy = [&](double s) { return top + (1.0 - s) * ph; };
    static const std::array<const char*, 6> colors{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream o;
    o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 "
      << w << " " << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    o << "<g stroke=\"black\" stroke-width=\"1\">\n";
    o << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(1) << "\" y2=\"" << sy(0) << "\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << sy(0) << "\" x2=\"" << left << "\" y2=\"" << sy(1) << "\"/>\n";
    o << "</g>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        o << "<text x=\"" << sx(v) << "\" y=\"" << sy(0) + 15 << "\" text-anchor=\"middle\">" << format_fixed(v, 1)
          << "</text>\n";
        o << "<text x=\"" << left - 6 << "\" y=\"" << sy(v) + 4 << "\" text-anchor=\"end\">" << format_fixed(v, 1)
          << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">tau</text>\n";
    o << "<text x=\"15\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
      << top + ph / 2 << ")\">share misselected</text>\n";
    for (std::size_t s = 0; s < order.size(); ++s) {
        const char* color = colors[s % colors.size()];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (const auto& [t, v] : series[order[s]]) {
            if (!first) o << ' ';
            first = false;
            o << format_fixed(sx(t), 2) << ',' << format_fixed(sy(std::isnan(v) ? 0.0 : v), 2);
        }
        o << "\"/>\n";
        const double ly = top + 10 + 16.0 * static_cast<double>(s);
        o << "<line x1=\"" << sx(1) + 15 << "\" y1=\"" << ly << "\" x2=\"" << sx(1) + 35 << "\" y2=\"" << ly
          << "\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
        o << "<text x=\"" << sx(1) + 40 << "\" y=\"" << ly + 4 << "\">" << order[s] << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_run_info(const std::filesystem::path& dir, const std::string& command, const RunConfig& cfg,
                    double seconds) {
    json info;
    info["version"] = kVersion;
    info["command"] = command;
    info["config_hash"] = cfg.config_hash;
    info["seed"] = cfg.spec.master_seed;
    info["threads"] = cfg.spec.threads;
    info["rng"] = RngStream::kAlgorithm;
    info["elapsed_seconds"] = std::round(seconds * 1000.0) / 1000.0;
    write_file(dir / "run_info.json", info.dump(2) + "\n");
}

double since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int cmd_table(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    if (cfg.spec.cells.empty()) throw ConfigError("table needs a nonempty 'cells' list");
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = mc::aggregate(mc::run_table(cfg.spec));
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "table.csv",
               table_csv(rows, {"table", cfg.config_hash, cfg.spec.master_seed, cfg.spec.reps}));
    write_run_info(out_dir, "table", cfg, since(t0));
    for (const auto& r : rows) {
        std::cout << r.N << " " << r.T << " " << format_double(r.tau) << " " << r.criterion << "/" << r.penalty
                  << " avg_g=" << format_fixed(r.avg_g, 3) << (r.unreliable ? " UNRELIABLE" : "") << "\n";
    }
    return exit_ok;
}

int cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, bool svg) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& s = cfg.sweep;
    mc::ExperimentSpec spec = cfg.spec;
    spec.estimators = s.estimators;
    const auto points = mc::tau_sweep(spec, s.N, s.T, mc::tau_grid(s.tau_start, s.tau_step, s.tau_end),
                                      s.error_configs);
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "sweep.csv", sweep_csv(points, {"sweep", cfg.config_hash, spec.master_seed, spec.reps}));
    if (svg) write_file(out_dir / "sweep.svg", sweep_svg(points));
    write_run_info(out_dir, "sweep", cfg, since(t0));
    std::cout << "wrote " << (out_dir / "sweep.csv").string() << " (" << points.size() << " points)\n";
    return exit_ok;
}

int cmd_rate(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<mc::RateResult> results;
    for (const auto& spec : cfg.rate.specs(cfg.spec.master_seed, cfg.spec.threads)) {
        results.push_back(mc::rate_check(spec));
        const auto& r = results.back();
        std::cout << mc::to_string(r.statistic) << " tau=" << format_double(r.tau)
                  << " slope=" << format_fixed(r.fitted_slope, 3)
                  << " theoretical=" << format_fixed(r.theoretical_slope, 3) << "\n";
    }
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "rate.csv", rate_csv(results, {"rate", cfg.config_hash, cfg.spec.master_seed, cfg.rate.reps}));
    write_run_info(out_dir, "rate", cfg, since(t0));
    return exit_ok;
}

int run(int argc, char** argv) {
    CLI::App app{"Selection of cross-section averages in panel factor models"};
    app.set_version_flag("--version", std::string("ccekit ") + kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<int> reps;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool svg = false;

    std::vector<CLI::App*> subs;
    for (const char* name : {"table", "sweep", "rate"}) {
        CLI::App* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        sub->add_option("--config", config_path, "JSON experiment config")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--reps", reps, "replications per cell");
        sub->add_option("--seed", seed, "master seed");
        sub->add_option("--threads", threads, "worker threads");
        sub->add_flag("--svg", svg, "also write an SVG chart (sweep)");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    RunConfig cfg;
    try {
        cfg = load_config(config_path, Overrides{reps, seed, threads});
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << config_path << ": " << e.what() << "\n";
        return exit_config;
    }

    try {
        if (subs[0]->parsed()) return cmd_table(cfg, out_dir);
        if (subs[1]->parsed()) return cmd_sweep(cfg, out_dir, svg);
        return cmd_rate(cfg, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
}

}  // namespace ccekit::cli
