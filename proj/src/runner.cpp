#include "snowwave/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "snowwave/errors.hpp"
#include "snowwave/rng.hpp"
#include "snowwave/spectral.hpp"
#include "snowwave/textio.hpp"
#include "snowwave/verify.hpp"
#include "snowwave/westervelt.hpp"

namespace snowwave {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string snowwave_version() { return "snowwave 0.1.0"; }

namespace {

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << content;
}

double centroid_clearance(const Polygon& poly, Vec2& centroid_out) {
    Vec2 c{0.0, 0.0};
    for (const Vec2& v : poly.vertices()) c = c + v;
    c = (1.0 / static_cast<double>(poly.size())) * c;
    centroid_out = c;
    double clearance = std::numeric_limits<double>::max();
    const auto& verts = poly.vertices();
    for (std::size_t i = 0; i < verts.size(); ++i) {
        const Vec2 a = verts[i], b = verts[(i + 1) % verts.size()];
        const Vec2 ab = b - a;
        double t = dot(c - a, ab) / dot(ab, ab);
        t = std::clamp(t, 0.0, 1.0);
        clearance = std::min(clearance, norm(c - (a + t * ab)));
    }
    return clearance;
}

double bump(Vec2 x, Vec2 center, double rho) {
    const double r2 = dot(x - center, x - center) / (rho * rho);
    if (r2 >= 1.0) return 0.0;
    const double q = 1.0 - r2;
    return q * q;
}

} // namespace

ProblemData build_problem_data(const RunConfig& config, const P1Space& space,
                               const ModalBasis& basis, const SmallnessBudget* budget, double r) {
    Vec2 centroid;
    const Polygon poly = config.domain.build();
    const double clearance = centroid_clearance(poly, centroid);
    const double rho = 0.8 * clearance;
    const Vec2 f_center = centroid + Vec2{0.15 * clearance, 0.1 * clearance};

    ProblemData data;
    data.u0 = space.interpolate(
        [&](Vec2 x) { return config.data.u0_amplitude * bump(x, centroid, rho); }, true);
    data.u1 = space.interpolate(
        [&](Vec2 x) { return config.data.u1_amplitude * bump(x, centroid, rho); }, true);
    data.forcing.grid = config.grid;
    if (config.data.forcing_amplitude != 0.0) {
        data.forcing.spatial =
            space
                .interpolate([&](Vec2 x) { return config.data.forcing_amplitude *
                                                  bump(x, f_center, 0.8 * rho); },
                             true)
                .coeffs;
        Eigen::VectorXd temporal(config.grid.n_samples());
        for (int i = 0; i < config.grid.n_samples(); ++i)
            temporal[i] = std::sin(2.0 * M_PI * config.grid.t(i) / config.grid.horizon());
        data.forcing.temporal = temporal;
    }

    if (config.data.auto_scale && budget != nullptr) {
        const DataNorms norms = data_norms(data, basis);
        if (norms.total() > 0.0 && std::isfinite(r)) {
            const double gate = config.params.nu * config.params.eps / budget->c1 * r;
            const double s = config.data.gate_fraction * gate / norms.total();
            data.u0.coeffs *= s;
            data.u1.coeffs *= s;
            if (data.forcing.spatial.size()) data.forcing.spatial *= s;
        }
    }
    return data;
}

namespace {

ordered_json params_json(const PhysicalParams& p) {
    return {{"c", p.c}, {"nu", p.nu}, {"eps", p.eps}, {"alpha", p.alpha}};
}

void run_mesh(const RunConfig& config, const fs::path& out) {
    const Polygon poly = config.domain.build();
    const Mesh mesh = triangulate(poly, config.h_target);
    {
        std::ofstream os(out / "polygon.txt", std::ios::binary);
        write_polygon(os, poly);
    }
    {
        std::ofstream os(out / "mesh.txt", std::ios::binary);
        write_mesh(os, mesh);
    }
    ordered_json j{{"vertices", mesh.n_vertices()},
                   {"triangles", mesh.n_triangles()},
                   {"h", mesh.h()},
                   {"min_angle_deg", mesh.min_angle_deg()},
                   {"area", mesh.total_area()},
                   {"polygon_area", poly.area()}};
    write_file(out / "mesh.json", j.dump(2) + "\n");
}

void run_eigs(const RunConfig& config, const fs::path& out) {
    const Polygon poly = config.domain.build();
    auto space = std::make_shared<P1Space>(triangulate(poly, config.h_target));
    SpectralOptions opts;
    opts.dense_threshold = config.dense_threshold;
    const ModalBasis basis = dirichlet_eigenpairs(space, config.n_modes, opts);
    export_basis(basis, (out / "basis").string());
    ordered_json j;
    j["lambdas"] = std::vector<double>(basis.lambdas().data(),
                                       basis.lambdas().data() + basis.count());
    j["poincare_constant"] = poincare_constant(basis);
    j["gram_defect"] = basis.gram_defect();
    j["residual_defect"] = basis.residual_defect();
    j["interior_dofs"] = space->n_interior();
    write_file(out / "eigs.json", j.dump(2) + "\n");
}

void run_solve_linear(const RunConfig& config, const fs::path& out) {
    const Polygon poly = config.domain.build();
    auto space = std::make_shared<P1Space>(triangulate(poly, config.h_target));
    SpectralOptions sopts;
    sopts.dense_threshold = config.dense_threshold;
    auto basis = std::make_shared<ModalBasis>(dirichlet_eigenpairs(space, config.n_modes, sopts));
    const ProblemData data = build_problem_data(config, *space, *basis, nullptr, 0.0);
    const ModalTrajectory traj = solve_linear(config.params, data, basis, config.threads);
    const EnergyReport energy = energy_report(traj, config.params);
    const AprioriReport apriori = apriori_check(traj, data, config.params);
    {
        std::ofstream os(out / "trajectory.csv", std::ios::binary);
        write_trajectory_csv(os, traj);
    }
    {
        std::ofstream os(out / "energy.csv", std::ios::binary);
        write_energy_csv(os, energy);
    }
    ordered_json j{{"x_norm", x_norm(traj)},
                   {"energy_balance_drift", energy.balance_drift},
                   {"apriori", {{"lhs", apriori.lhs}, {"rhs", apriori.rhs}, {"ratio", apriori.ratio}}},
                   {"params", params_json(config.params)}};
    write_file(out / "linear.json", j.dump(2) + "\n");
}

void run_solve_westervelt(const RunConfig& config, const fs::path& out) {
    const Polygon poly = config.domain.build();
    auto space = std::make_shared<P1Space>(triangulate(poly, config.h_target));
    SpectralOptions sopts;
    sopts.dense_threshold = config.dense_threshold;
    auto basis = std::make_shared<ModalBasis>(dirichlet_eigenpairs(space, config.n_modes, sopts));
    const SmallnessBudget budget = estimate_constants(basis, config.params, config.n_probes,
                                                      config.seed, config.grid, config.threads);
    const double r = std::isfinite(budget.r_star()) ? config.r_fraction * budget.r_star() : 1.0;
    const ProblemData data = build_problem_data(config, *space, *basis, &budget, r);

    WesterveltOptions opts;
    opts.r = r;
    opts.tol = config.tol;
    opts.max_iter = config.max_iter;
    opts.override_gate = config.override_gate;
    opts.n_threads = config.threads;

    IterationLog log_for_report;
    try {
        const WesterveltSolution sol = solve_westervelt(config.params, data, basis, budget, opts);
        {
            std::ofstream os(out / "trajectory.csv", std::ios::binary);
            write_trajectory_csv(os, sol.u);
        }
        {
            std::ofstream os(out / "iterations.csv", std::ios::binary);
            write_iteration_log_csv(os, sol.log);
        }
        const EnergyReport energy = energy_report(sol.u, config.params);
        {
            std::ofstream os(out / "energy.csv", std::ios::binary);
            write_energy_csv(os, energy);
        }
        ordered_json j;
        j["budget"] = {{"B1", budget.b1}, {"B2", budget.b2}, {"B", budget.b},
                       {"C0", budget.c0}, {"C1", budget.c1}, {"C_eps", budget.c_eps()},
                       {"r_star", budget.r_star()}};
        j["r"] = r;
        j["gate"] = {{"lhs", sol.gate_lhs}, {"rhs", sol.gate_rhs},
                     {"overridden", sol.gate_overridden}};
        j["x_norm"] = sol.x_norm_u;
        j["bound_2r"] = sol.bound_2r;
        j["within_bound"] = sol.within_bound;
        j["consistency_y"] = sol.consistency_y;
        j["consistency_c"] = sol.consistency_c;
        j["iterations"] = sol.log.records.size();
        j["params"] = params_json(config.params);
        write_file(out / "westervelt.json", j.dump(2) + "\n");
    } catch (const IterationFailure& failure) {
        std::ofstream os(out / "iterations.csv", std::ios::binary);
        write_iteration_log_csv(os, failure.log);
        throw;
    }
}

void run_mosco_experiment(const RunConfig& config, const fs::path& out) {
    const MoscoReport report = run_mosco(config.mosco);
    {
        std::ofstream os(out / "report.json", std::ios::binary);
        write_mosco_json(os, report, config.mosco);
    }
    std::ofstream os(out / "report.csv", std::ios::binary);
    write_mosco_csv(os, report);
}

void run_verify(const RunConfig& config, const fs::path& out) {
    const VerifyConfig& v = config.verify;
    ordered_json j;
    j["seed"] = config.seed;
    if (v.which == "xie" || v.which == "all") {
        Rng rng(config.seed);
        int violations = 0;
        double worst_margin = std::numeric_limits<double>::max();
        for (int trial = 0; trial < v.xie_trials; ++trial) {
            SineSeries3D series(v.xie_n);
            for (double& a : series.coeffs) a = rng.normal();
            const XieReport rep = xie_check(series, v.xie_grid);
            if (!rep.holds) ++violations;
            worst_margin = std::min(worst_margin, rep.rhs - rep.lhs);
        }
        SineSeries3D single(v.xie_n);
        single.a(1, 1, 1) = 1.0;
        const XieReport one = xie_check(single, v.xie_grid);
        j["xie"] = {{"trials", v.xie_trials},
                    {"n_max", v.xie_n},
                    {"grid_n", v.xie_grid},
                    {"violations", violations},
                    {"worst_margin", worst_margin},
                    {"single_mode",
                     {{"lhs", one.lhs}, {"rhs", one.rhs}, {"grad_l2", one.grad_l2},
                      {"lap_l2", one.lap_l2}, {"holds", one.holds}}}};
    }
    if (v.which == "linf" || v.which == "all") {
        const DomainSequence seq = koch_domain_sequence(config.domain.base_side, v.linf_first,
                                                        v.linf_last, v.linf_last + 1);
        const LinfStabilityReport rep =
            linf_stability_scan(seq, v.linf_h, v.linf_probes, config.seed);
        j["linf_stability"] = {{"levels_first", v.linf_first},
                               {"levels_last", v.linf_last},
                               {"h_target", v.linf_h},
                               {"n_probes", v.linf_probes},
                               {"constants", rep.constants},
                               {"max", rep.max_constant},
                               {"min", rep.min_constant},
                               {"spread", rep.spread}};
    }
    if (v.which == "poincare" || v.which == "all") {
        const Polygon poly = config.domain.build();
        auto space = std::make_shared<P1Space>(triangulate(poly, config.h_target));
        SpectralOptions sopts;
        sopts.dense_threshold = config.dense_threshold;
        const ModalBasis basis = dirichlet_eigenpairs(space, config.n_modes, sopts);
        const PoincareReport rep = poincare_verify(basis, v.poincare_n, config.seed);
        j["poincare"] = {{"constant", rep.constant},
                         {"n_random", rep.n_random},
                         {"worst_slack", rep.worst_slack},
                         {"all_ok", rep.all_ok}};
    }
    write_file(out / "verify.json", j.dump(2) + "\n");
}

} // namespace

void run_experiment(const RunConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out(config.out_dir);
    fs::create_directories(out);

    switch (config.experiment) {
        case ExperimentKind::Mesh: run_mesh(config, out); break;
        case ExperimentKind::Eigs: run_eigs(config, out); break;
        case ExperimentKind::SolveLinear: run_solve_linear(config, out); break;
        case ExperimentKind::SolveWestervelt: run_solve_westervelt(config, out); break;
        case ExperimentKind::Mosco: run_mosco_experiment(config, out); break;
        case ExperimentKind::Verify: run_verify(config, out); break;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    ordered_json manifest;
    manifest["experiment"] = experiment_name(config.experiment);
    manifest["version"] = snowwave_version();
    manifest["config_ini"] = config.echo_ini();
    manifest["wall_seconds"] = wall;
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
}

} // namespace snowwave
