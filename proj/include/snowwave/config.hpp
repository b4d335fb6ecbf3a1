#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "snowwave/linwave.hpp"
#include "snowwave/mosco.hpp"

namespace snowwave {

/// Parsed "key = value" file with [section] headers, '#'/';' comments.
class IniFile {
public:
    static IniFile parse(const std::string& text);
    static IniFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    long get_long(const std::string& section, const std::string& key, long fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

enum class ExperimentKind { Mesh, Eigs, SolveLinear, SolveWestervelt, Mosco, Verify };

struct DomainConfig {
    std::string kind = "koch"; // koch | square | polygon
    double base_side = 1.0;
    int level = 2;
    Vec2 center{0.0, 0.0};
    double side = 1.0;       // square
    std::string path;        // polygon file
    Polygon build() const;
};

struct DataConfig {
    // bump data supported well inside the domain; amplitudes are absolute
    double u0_amplitude = 1.0;
    double u1_amplitude = 0.0;
    double forcing_amplitude = 0.0;
    bool auto_scale = false;     // scale data onto gate_fraction of the gate
    double gate_fraction = 0.5;
};

struct VerifyConfig {
    std::string which = "all"; // xie | poincare | linf | all
    int xie_n = 6;
    int xie_grid = 24;
    int xie_trials = 1000;
    int linf_first = 1;
    int linf_last = 4;
    double linf_h = 0.06;
    int linf_probes = 8;
    int poincare_n = 500;
};

struct RunConfig {
    ExperimentKind experiment = ExperimentKind::Mesh;
    std::uint64_t seed = 42;
    int threads = 1;
    std::string out_dir = "out";

    PhysicalParams params;
    DomainConfig domain;
    double h_target = 0.05;
    int n_modes = 32;
    int dense_threshold = 3000;
    TimeGrid grid{1e-3, 1000};
    DataConfig data;

    double r_fraction = 0.5;
    double tol = 1e-9;
    int max_iter = 60;
    int n_probes = 16;
    bool override_gate = false;

    MoscoConfig mosco;
    VerifyConfig verify;

    static RunConfig from_ini(const IniFile& ini);
    void validate() const;
    /// Deterministic echo of every resolved value (defaults included).
    std::string echo_ini() const;
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);

} // namespace snowwave
