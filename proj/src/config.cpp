#include "crossdiff/config.hpp"

#include "crossdiff/experiments.hpp"

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crossdiff {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Entry {
    std::string section, key, value;
    int line = 0;
    bool used = false;
};

struct Ini {
    std::vector<Entry> entries;
    std::vector<std::string> sections;

    // Returns the last value for section.key and marks every occurrence used.
    std::optional<std::string> take(const std::string& sec, const std::string& key) {
        std::optional<std::string> out;
        for (Entry& e : entries) {
            if (e.section == sec && e.key == key) {
                e.used = true;
                out = e.value;
            }
        }
        return out;
    }
};

Ini read_ini(const std::string& text) {
    Ini ini;
    std::istringstream is(text);
    std::string raw, section;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        std::size_t cut = raw.find_first_of("#;");
        std::string s = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw std::invalid_argument("config: line " + std::to_string(line) +
                                            ": unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config: line " + std::to_string(line) +
                                            ": empty section name");
            ini.sections.push_back(section);
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line) +
                                        ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: line " + std::to_string(line) + ": empty key");
        if (section.empty())
            throw std::invalid_argument("config: line " + std::to_string(line) +
                                        ": key '" + key + "' outside any section");
        ini.entries.push_back({section, key, value, line, false});
    }
    return ini;
}

double parse_double(const std::string& where, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + where + ": '" + v + "'");
    }
    if (pos != v.size())
        throw std::invalid_argument("config: bad number for " + where + ": '" + v + "'");
    return x;
}

int parse_int(const std::string& where, const std::string& v) {
    std::size_t pos = 0;
    long x = 0;
    try {
        x = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + where + ": '" + v + "'");
    }
    if (pos != v.size())
        throw std::invalid_argument("config: bad integer for " + where + ": '" + v + "'");
    return static_cast<int>(x);
}

bool parse_bool(const std::string& where, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw std::invalid_argument("config: bad boolean for " + where + ": '" + v + "'");
}

std::vector<double> parse_list(const std::string& where, const std::string& v) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        std::size_t comma = v.find(',', start);
        std::string part = trim(v.substr(start, comma == std::string::npos ? std::string::npos
                                                                           : comma - start));
        if (part.empty())
            throw std::invalid_argument("config: bad list for " + where + ": '" + v + "'");
        out.push_back(parse_double(where, part));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument("config: " + msg);
}

} // namespace

ModelSpec RunConfig::make_model() const {
    if (model_name == "porous_medium") return porous_medium(pm_m);
    if (model_name == "skt") return skt(skt_a, skt_b, skt_box_cap);
    if (model_name == "mixture") {
        if (mixture_p.empty())
            throw std::invalid_argument("config: mixture needs p = p_1,...,p_N");
        return volume_filling_mixture(mixture_p);
    }
    if (model_name == "tumor") return tumor_growth(tumor_beta, tumor_theta);
    throw std::invalid_argument("config: unknown model '" + model_name + "'");
}

Mesh RunConfig::make_mesh() const {
    if (mesh.dim == 1) return build_interval_mesh(mesh.a, mesh.b, mesh.M, mesh.eta);
    return build_structured_tri_mesh(mesh.nx, mesh.ny, mesh.box, mesh.eta);
}

FluxOrientation make_orientation(const Mesh& mesh, const MeshConfig& cfg) {
    return orient_facets(mesh, cfg.flux, cfg.alpha);
}

RunConfig parse_config(const std::string& text) {
    Ini ini = read_ini(text);
    for (const std::string& sec : ini.sections)
        check(sec == "model" || sec == "mesh" || sec == "time" || sec == "newton" ||
                  sec == "output",
              "unknown section [" + sec + "]");

    RunConfig cfg;

    if (auto v = ini.take("model", "name")) cfg.model_name = *v;
    if (auto v = ini.take("model", "preset")) cfg.preset = *v;
    if (auto v = ini.take("model", "eps")) cfg.eps = parse_double("model.eps", *v);
    if (auto v = ini.take("model", "ell")) cfg.ell = parse_int("model.ell", *v);
    if (cfg.model_name == "porous_medium") {
        if (auto v = ini.take("model", "m")) cfg.pm_m = parse_double("model.m", *v);
    } else if (cfg.model_name == "skt") {
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 3; ++j) {
                std::string ka = "a" + std::to_string(i + 1) + std::to_string(j);
                std::string kb = "b" + std::to_string(i + 1) + std::to_string(j);
                if (auto v = ini.take("model", ka))
                    cfg.skt_a[i][j] = parse_double("model." + ka, *v);
                if (auto v = ini.take("model", kb))
                    cfg.skt_b[i][j] = parse_double("model." + kb, *v);
            }
        if (auto v = ini.take("model", "box_cap")) {
            std::vector<double> cap = parse_list("model.box_cap", *v);
            check(cap.size() == 2, "model.box_cap needs two entries");
            cfg.skt_box_cap = std::array<double, 2>{cap[0], cap[1]};
        }
    } else if (cfg.model_name == "mixture") {
        if (auto v = ini.take("model", "p")) cfg.mixture_p = parse_list("model.p", *v);
    } else if (cfg.model_name == "tumor") {
        if (auto v = ini.take("model", "beta")) cfg.tumor_beta = parse_double("model.beta", *v);
        if (auto v = ini.take("model", "theta")) cfg.tumor_theta = parse_double("model.theta", *v);
    }

    if (auto v = ini.take("mesh", "dim")) cfg.mesh.dim = parse_int("mesh.dim", *v);
    check(cfg.mesh.dim == 1 || cfg.mesh.dim == 2, "mesh.dim must be 1 or 2");
    if (cfg.mesh.dim == 1) {
        if (auto v = ini.take("mesh", "a")) cfg.mesh.a = parse_double("mesh.a", *v);
        if (auto v = ini.take("mesh", "b")) cfg.mesh.b = parse_double("mesh.b", *v);
        if (auto v = ini.take("mesh", "M")) cfg.mesh.M = parse_int("mesh.M", *v);
        check(cfg.mesh.b > cfg.mesh.a, "mesh needs b > a");
        check(cfg.mesh.M >= 1, "mesh.M must be positive");
    } else {
        if (auto v = ini.take("mesh", "nx")) cfg.mesh.nx = parse_int("mesh.nx", *v);
        if (auto v = ini.take("mesh", "ny")) cfg.mesh.ny = parse_int("mesh.ny", *v);
        if (auto v = ini.take("mesh", "box")) {
            std::vector<double> b = parse_list("mesh.box", *v);
            check(b.size() == 4, "mesh.box needs x0,y0,x1,y1");
            cfg.mesh.box = Rect{b[0], b[1], b[2], b[3]};
        }
        check(cfg.mesh.nx >= 1 && cfg.mesh.ny >= 1, "mesh.nx and mesh.ny must be positive");
        check(cfg.mesh.box.x1 > cfg.mesh.box.x0 && cfg.mesh.box.y1 > cfg.mesh.box.y0,
              "mesh.box must have positive extent");
    }
    if (auto v = ini.take("mesh", "degree")) cfg.mesh.degree = parse_int("mesh.degree", *v);
    if (auto v = ini.take("mesh", "flux")) {
        if (*v == "directional")
            cfg.mesh.flux = OrientationRule::directional;
        else if (*v == "centered")
            cfg.mesh.flux = OrientationRule::standard;
        else
            throw std::invalid_argument("config: mesh.flux must be directional or centered");
    }
    if (auto v = ini.take("mesh", "alpha")) cfg.mesh.alpha = parse_double("mesh.alpha", *v);
    if (auto v = ini.take("mesh", "eta")) cfg.mesh.eta = parse_double("mesh.eta", *v);
    check(cfg.mesh.degree >= 0, "mesh.degree must be nonnegative");
    check(cfg.mesh.alpha >= 0.0 && cfg.mesh.alpha <= 1.0, "mesh.alpha must lie in [0, 1]");
    check(cfg.mesh.eta > 0.0, "mesh.eta must be positive");

    if (auto v = ini.take("time", "mode")) {
        if (*v == "fixed")
            cfg.time.adaptive = false;
        else if (*v == "adaptive")
            cfg.time.adaptive = true;
        else
            throw std::invalid_argument("config: time.mode must be fixed or adaptive");
    }
    if (auto v = ini.take("time", "T")) cfg.time.T = parse_double("time.T", *v);
    if (cfg.time.adaptive) {
        if (auto v = ini.take("time", "tau1")) cfg.time.adapt.tau1 = parse_double("time.tau1", *v);
        if (auto v = ini.take("time", "shrink"))
            cfg.time.adapt.shrink = parse_double("time.shrink", *v);
        if (auto v = ini.take("time", "grow")) cfg.time.adapt.grow = parse_double("time.grow", *v);
        if (auto v = ini.take("time", "retry"))
            cfg.time.adapt.retry_on_failure = parse_bool("time.retry", *v);
        check(cfg.time.adapt.tau1 > 0.0, "time.tau1 must be positive");
        check(cfg.time.adapt.shrink > 0.0 && cfg.time.adapt.shrink < 1.0,
              "time.shrink must lie in (0, 1)");
        check(cfg.time.adapt.grow >= 1.0, "time.grow must be at least 1");
    } else {
        if (auto v = ini.take("time", "tau")) cfg.time.tau = parse_double("time.tau", *v);
        check(cfg.time.tau > 0.0, "time.tau must be positive");
    }
    check(cfg.time.T >= 0.0, "time.T must be nonnegative");

    if (auto v = ini.take("newton", "tol")) cfg.newton.tol = parse_double("newton.tol", *v);
    if (auto v = ini.take("newton", "s_max")) cfg.newton.s_max = parse_int("newton.s_max", *v);
    if (auto v = ini.take("newton", "cond_every"))
        cfg.newton.cond_every = parse_int("newton.cond_every", *v);
    check(cfg.newton.tol > 0.0, "newton.tol must be positive");
    check(cfg.newton.s_max >= 1, "newton.s_max must be at least 1");
    check(cfg.newton.cond_every >= 0, "newton.cond_every must be nonnegative");

    if (auto v = ini.take("output", "dir")) cfg.output_dir = *v;

    std::vector<std::string> unknown;
    for (const Entry& e : ini.entries)
        if (!e.used) unknown.push_back(e.section + "." + e.key);
    if (!unknown.empty()) {
        std::string msg = "config: unknown key(s): ";
        for (std::size_t i = 0; i < unknown.size(); ++i)
            msg += (i ? ", " : "") + unknown[i];
        throw std::invalid_argument(msg);
    }

    check(cfg.eps >= 0.0, "model.eps must be nonnegative");
    check(cfg.ell >= 0 && cfg.ell <= 2, "model.ell must be 0 (auto), 1, or 2");
    if (!cfg.preset.empty()) {
        const std::vector<std::string>& names = preset_names();
        check(std::find(names.begin(), names.end(), cfg.preset) != names.end(),
              "unknown preset '" + cfg.preset + "'");
    }
    cfg.make_model(); // surfaces model parameter violations at parse time
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace crossdiff
