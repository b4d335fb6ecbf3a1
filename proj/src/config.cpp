#include "snowwave/config.hpp"

#include <fstream>
#include <sstream>

#include "snowwave/errors.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::map<std::string, std::vector<std::string>> kKnownKeys = {
    {"run", {"experiment", "seed", "threads", "out"}},
    {"physics", {"c", "nu", "eps", "alpha"}},
    {"domain", {"kind", "base_side", "level", "center_x", "center_y", "side", "path"}},
    {"mesh", {"h_target"}},
    {"spectral", {"n_modes", "dense_threshold"}},
    {"time", {"dt", "n_steps"}},
    {"data",
     {"u0_amplitude", "u1_amplitude", "forcing_amplitude", "auto_scale", "gate_fraction"}},
    {"westervelt", {"r_fraction", "tol", "max_iter", "n_probes", "override_gate"}},
    {"mosco",
     {"first_level", "last_level", "ref_level", "ambient_margin", "r_fraction", "gate_fraction"}},
    {"verify",
     {"which", "xie_n", "xie_grid", "xie_trials", "linf_first", "linf_last", "linf_h",
      "linf_probes", "poincare_n"}},
};

} // namespace

IniFile IniFile::parse(const std::string& text) {
    IniFile ini;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ValidationError("config line " + std::to_string(line_no) +
                                      ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            ini.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + std::to_string(line_no) +
                                  ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ValidationError("config line " + std::to_string(line_no) +
                                               ": empty key");
        ini.sections_[section][key] = value;
    }
    return ini;
}

IniFile IniFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return parse_double(get(section, key, ""));
    } catch (const ValidationError&) {
        throw ValidationError("config [" + section + "] " + key + ": not a number");
    }
}

long IniFile::get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return parse_long(get(section, key, ""));
    } catch (const ValidationError&) {
        throw ValidationError("config [" + section + "] " + key + ": not an integer");
    }
}

bool IniFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = get(section, key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("config [" + section + "] " + key + ": expected true/false");
}

std::string experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Mesh: return "mesh";
        case ExperimentKind::Eigs: return "eigs";
        case ExperimentKind::SolveLinear: return "solve-linear";
        case ExperimentKind::SolveWestervelt: return "solve-westervelt";
        case ExperimentKind::Mosco: return "mosco";
        case ExperimentKind::Verify: return "verify";
    }
    throw ValidationError("unknown experiment kind");
}

ExperimentKind experiment_from_name(const std::string& name) {
    if (name == "mesh") return ExperimentKind::Mesh;
    if (name == "eigs") return ExperimentKind::Eigs;
    if (name == "solve-linear") return ExperimentKind::SolveLinear;
    if (name == "solve-westervelt") return ExperimentKind::SolveWestervelt;
    if (name == "mosco") return ExperimentKind::Mosco;
    if (name == "verify") return ExperimentKind::Verify;
    throw ValidationError("unknown experiment '" + name +
                          "' (expected mesh|eigs|solve-linear|solve-westervelt|mosco|verify)");
}

Polygon DomainConfig::build() const {
    if (kind == "koch") return koch_prefractal({base_side, level, center});
    if (kind == "square")
        return Polygon::rectangle({center.x - 0.5 * side, center.y - 0.5 * side},
                                  {center.x + 0.5 * side, center.y + 0.5 * side});
    if (kind == "polygon") {
        std::ifstream in(path);
        if (!in) throw ValidationError("cannot open polygon file: " + path);
        return read_polygon(in);
    }
    throw ValidationError("domain kind must be koch|square|polygon, got '" + kind + "'");
}

RunConfig RunConfig::from_ini(const IniFile& ini) {
    for (const auto& [section, keys] : ini.sections()) {
        auto known = kKnownKeys.find(section);
        if (known == kKnownKeys.end())
            throw ValidationError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : keys) {
            (void)value;
            if (std::find(known->second.begin(), known->second.end(), key) == known->second.end())
                throw ValidationError("config: unknown key '" + key + "' in [" + section + "]");
        }
    }

    RunConfig c;
    c.experiment = experiment_from_name(ini.get("run", "experiment", "mesh"));
    c.seed = static_cast<std::uint64_t>(ini.get_long("run", "seed", 42));
    c.threads = static_cast<int>(ini.get_long("run", "threads", 1));
    c.out_dir = ini.get("run", "out", "out");

    c.params.c = ini.get_double("physics", "c", 1.0);
    c.params.nu = ini.get_double("physics", "nu", 1.0);
    c.params.eps = ini.get_double("physics", "eps", 1e-2);
    c.params.alpha = ini.get_double("physics", "alpha", 1.0);

    c.domain.kind = ini.get("domain", "kind", "koch");
    c.domain.base_side = ini.get_double("domain", "base_side", 1.0);
    c.domain.level = static_cast<int>(ini.get_long("domain", "level", 2));
    c.domain.center = {ini.get_double("domain", "center_x", 0.0),
                       ini.get_double("domain", "center_y", 0.0)};
    c.domain.side = ini.get_double("domain", "side", 1.0);
    c.domain.path = ini.get("domain", "path", "");

    c.h_target = ini.get_double("mesh", "h_target", 0.05);
    c.n_modes = static_cast<int>(ini.get_long("spectral", "n_modes", 32));
    c.dense_threshold = static_cast<int>(ini.get_long("spectral", "dense_threshold", 3000));
    c.grid.dt = ini.get_double("time", "dt", 1e-3);
    c.grid.n_steps = static_cast<int>(ini.get_long("time", "n_steps", 1000));

    c.data.u0_amplitude = ini.get_double("data", "u0_amplitude", 1.0);
    c.data.u1_amplitude = ini.get_double("data", "u1_amplitude", 0.0);
    c.data.forcing_amplitude = ini.get_double("data", "forcing_amplitude", 0.0);
    c.data.auto_scale = ini.get_bool("data", "auto_scale", false);
    c.data.gate_fraction = ini.get_double("data", "gate_fraction", 0.5);

    c.r_fraction = ini.get_double("westervelt", "r_fraction", 0.5);
    c.tol = ini.get_double("westervelt", "tol", 1e-9);
    c.max_iter = static_cast<int>(ini.get_long("westervelt", "max_iter", 60));
    c.n_probes = static_cast<int>(ini.get_long("westervelt", "n_probes", 16));
    c.override_gate = ini.get_bool("westervelt", "override_gate", false);

    c.mosco.base_side = c.domain.base_side;
    c.mosco.first_level = static_cast<int>(ini.get_long("mosco", "first_level", 1));
    c.mosco.last_level = static_cast<int>(ini.get_long("mosco", "last_level", 4));
    c.mosco.ref_level = static_cast<int>(ini.get_long("mosco", "ref_level", 5));
    c.mosco.ambient_margin = ini.get_double("mosco", "ambient_margin", 0.125);
    c.mosco.h_target = c.h_target;
    c.mosco.n_modes = c.n_modes;
    c.mosco.dense_threshold = c.dense_threshold;
    c.mosco.grid = c.grid;
    c.mosco.params = c.params;
    c.mosco.r_fraction = ini.get_double("mosco", "r_fraction", 0.5);
    c.mosco.gate_fraction = ini.get_double("mosco", "gate_fraction", 0.5);
    c.mosco.tol = c.tol;
    c.mosco.max_iter = c.max_iter;
    c.mosco.n_probes = c.n_probes;
    c.mosco.seed = c.seed;
    c.mosco.n_threads = c.threads;

    c.verify.which = ini.get("verify", "which", "all");
    c.verify.xie_n = static_cast<int>(ini.get_long("verify", "xie_n", 6));
    c.verify.xie_grid = static_cast<int>(ini.get_long("verify", "xie_grid", 24));
    c.verify.xie_trials = static_cast<int>(ini.get_long("verify", "xie_trials", 1000));
    c.verify.linf_first = static_cast<int>(ini.get_long("verify", "linf_first", 1));
    c.verify.linf_last = static_cast<int>(ini.get_long("verify", "linf_last", 4));
    c.verify.linf_h = ini.get_double("verify", "linf_h", 0.06);
    c.verify.linf_probes = static_cast<int>(ini.get_long("verify", "linf_probes", 8));
    c.verify.poincare_n = static_cast<int>(ini.get_long("verify", "poincare_n", 500));

    c.validate();
    return c;
}

void RunConfig::validate() const {
    params.validate();
    grid.validate();
    if (threads < 1) throw ValidationError("config: threads must be >= 1");
    if (!(h_target > 0.0)) throw ValidationError("config: h_target must be positive");
    if (n_modes < 1) throw ValidationError("config: n_modes must be positive");
    if (!(tol > 0.0)) throw ValidationError("config: tol must be positive");
    if (experiment == ExperimentKind::Mosco) mosco.validate();
}

std::string RunConfig::echo_ini() const {
    std::ostringstream os;
    os << "[run]\n";
    os << "experiment = " << experiment_name(experiment) << '\n';
    os << "seed = " << seed << '\n';
    os << "threads = " << threads << '\n';
    os << "out = " << out_dir << '\n';
    os << "[physics]\n";
    os << "c = " << format_double(params.c) << '\n';
    os << "nu = " << format_double(params.nu) << '\n';
    os << "eps = " << format_double(params.eps) << '\n';
    os << "alpha = " << format_double(params.alpha) << '\n';
    os << "[domain]\n";
    os << "kind = " << domain.kind << '\n';
    os << "base_side = " << format_double(domain.base_side) << '\n';
    os << "level = " << domain.level << '\n';
    os << "center_x = " << format_double(domain.center.x) << '\n';
    os << "center_y = " << format_double(domain.center.y) << '\n';
    os << "side = " << format_double(domain.side) << '\n';
    if (!domain.path.empty()) os << "path = " << domain.path << '\n';
    os << "[mesh]\n";
    os << "h_target = " << format_double(h_target) << '\n';
    os << "[spectral]\n";
    os << "n_modes = " << n_modes << '\n';
    os << "dense_threshold = " << dense_threshold << '\n';
    os << "[time]\n";
    os << "dt = " << format_double(grid.dt) << '\n';
    os << "n_steps = " << grid.n_steps << '\n';
    os << "[data]\n";
    os << "u0_amplitude = " << format_double(data.u0_amplitude) << '\n';
    os << "u1_amplitude = " << format_double(data.u1_amplitude) << '\n';
    os << "forcing_amplitude = " << format_double(data.forcing_amplitude) << '\n';
    os << "auto_scale = " << (data.auto_scale ? "true" : "false") << '\n';
    os << "gate_fraction = " << format_double(data.gate_fraction) << '\n';
    os << "[westervelt]\n";
    os << "r_fraction = " << format_double(r_fraction) << '\n';
    os << "tol = " << format_double(tol) << '\n';
    os << "max_iter = " << max_iter << '\n';
    os << "n_probes = " << n_probes << '\n';
    os << "override_gate = " << (override_gate ? "true" : "false") << '\n';
    os << "[mosco]\n";
    os << "first_level = " << mosco.first_level << '\n';
    os << "last_level = " << mosco.last_level << '\n';
    os << "ref_level = " << mosco.ref_level << '\n';
    os << "ambient_margin = " << format_double(mosco.ambient_margin) << '\n';
    os << "r_fraction = " << format_double(mosco.r_fraction) << '\n';
    os << "gate_fraction = " << format_double(mosco.gate_fraction) << '\n';
    os << "[verify]\n";
    os << "which = " << verify.which << '\n';
    os << "xie_n = " << verify.xie_n << '\n';
    os << "xie_grid = " << verify.xie_grid << '\n';
    os << "xie_trials = " << verify.xie_trials << '\n';
    os << "linf_first = " << verify.linf_first << '\n';
    os << "linf_last = " << verify.linf_last << '\n';
    os << "linf_h = " << format_double(verify.linf_h) << '\n';
    os << "linf_probes = " << verify.linf_probes << '\n';
    os << "poincare_n = " << verify.poincare_n << '\n';
    return os.str();
}

} // namespace snowwave
