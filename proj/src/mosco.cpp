#include "snowwave/mosco.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>

#include "snowwave/errors.hpp"
#include "snowwave/parallel.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

void MoscoConfig::validate() const {
    params.validate();
    grid.validate();
    if (first_level < 0 || last_level < first_level || ref_level <= last_level)
        throw ValidationError("mosco: need 0 <= first <= last < ref level");
    if (!(h_target > 0.0)) throw ValidationError("mosco: h_target must be positive");
    if (n_modes < 1) throw ValidationError("mosco: n_modes must be positive");
    if (!(r_fraction > 0.0) || !(r_fraction < 1.0))
        throw ValidationError("mosco: r_fraction must be in (0,1)");
    if (!(gate_fraction > 0.0) || gate_fraction > 1.0)
        throw ValidationError("mosco: gate_fraction must be in (0,1]");
}

namespace {

// C^1 bump supported in the disk of radius rho: (1 - |x-c|^2/rho^2)^2.
struct Bump {
    Vec2 center;
    double rho;
    double operator()(Vec2 x) const {
        const double r2 = dot(x - center, x - center) / (rho * rho);
        if (r2 >= 1.0) return 0.0;
        const double q = 1.0 - r2;
        return q * q;
    }
};

struct LevelAssets {
    std::shared_ptr<const P1Space> space;
    std::shared_ptr<const ModalBasis> basis;
    SmallnessBudget budget;
    DataNorms unit_norms;
    Polygon polygon;
};

} // namespace

Eigen::MatrixXd transfer_matrix(const Mesh& source, const Eigen::MatrixXd& columns,
                                const Mesh& target) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<int>(target.n_vertices()),
                                                columns.cols());
    for (std::size_t i = 0; i < target.n_vertices(); ++i) {
        const auto loc = source.locate(target.vertices()[i]);
        if (!loc) continue;
        const auto& tr = source.triangles()[static_cast<std::size_t>(loc->triangle)];
        for (int k = 0; k < 3; ++k)
            out.row(static_cast<int>(i)) +=
                loc->barycentric[static_cast<std::size_t>(k)] *
                columns.row(tr[static_cast<std::size_t>(k)]);
    }
    return out;
}

double evaluate_functional(const P1Space& target, const Eigen::MatrixXd& modes_on_target,
                           const ModalTrajectory& traj, const TestFunction& phi,
                           const Eigen::VectorXd& f_spatial, const Eigen::VectorXd& f_temporal,
                           const PhysicalParams& params) {
    const TimeGrid& grid = traj.grid;
    const int n = grid.n_samples();
    if (phi.spatial.size() != modes_on_target.rows())
        throw ValidationError("evaluate_functional: test function lives on a different mesh");
    if (!phi.temporal.empty() && static_cast<int>(phi.temporal.size()) != n)
        throw ValidationError("evaluate_functional: temporal profile length mismatch");
    const double ae = params.alpha * params.eps;

    const Eigen::VectorXd m_phi = target.mass().multiply(phi.spatial);
    const Eigen::VectorXd k_phi = target.stiffness().multiply(phi.spatial);
    const Eigen::VectorXd gm = modes_on_target.transpose() * m_phi;
    const Eigen::VectorXd gk = modes_on_target.transpose() * k_phi;
    const double f_weight = f_spatial.size() ? m_phi.dot(f_spatial) : 0.0;

    Eigen::VectorXd density(n);
    for (int i = 0; i < n; ++i) {
        const double g = phi.temporal.empty() ? 1.0 : phi.temporal[static_cast<std::size_t>(i)];
        double value = gm.dot(traj.dpp.col(i)) + params.c * params.c * gk.dot(traj.d.col(i)) +
                       params.eps * params.nu * gk.dot(traj.dp.col(i));
        if (ae != 0.0) {
            const Eigen::VectorXd u = modes_on_target * traj.d.col(i);
            const Eigen::VectorXd ut = modes_on_target * traj.dp.col(i);
            const Eigen::VectorXd utt = modes_on_target * traj.dpp.col(i);
            const Eigen::VectorXd load =
                target.product_load(u, utt) + target.product_load(ut, ut);
            value -= ae * phi.spatial.dot(load);
        }
        if (f_spatial.size()) value -= f_weight * f_temporal[i];
        density[i] = g * value;
    }
    double acc = 0.5 * (density[0] + density[n - 1]);
    for (int i = 1; i + 1 < n; ++i) acc += density[i];
    return acc * grid.dt;
}

MoscoReport run_mosco(const MoscoConfig& config) {
    config.validate();
    MoscoReport report;

    // geometry: members, reference proxy, ambient box
    const DomainSequence seq = koch_domain_sequence(config.base_side, config.first_level,
                                                    config.last_level, config.ref_level,
                                                    config.ambient_margin);
    const Polygon base = koch_prefractal({config.base_side, 0, {0.0, 0.0}});

    // compact probe polygon K strictly inside Omega_first (and every member)
    std::vector<Vec2> k_verts;
    for (const Vec2& v : base.vertices()) k_verts.push_back(0.7 * v);
    const Polygon probe_k(std::move(k_verts));
    if (!contains_polygon(seq.members.front(), probe_k))
        throw ValidationError("mosco: probe polygon escapes the first member");

    // ambient space and the six test functions (3 spatial bumps x 2 profiles)
    const P1Space ambient_space(triangulate(seq.ambient, config.h_target));
    // K's incircle has radius 0.2887 * k_scale; every disk stays inside it
    const double k_scale = 0.7 * config.base_side;
    const std::vector<Bump> bumps = {
        {{0.0, 0.06 * k_scale}, 0.17 * k_scale},
        {{-0.08 * k_scale, -0.05 * k_scale}, 0.15 * k_scale},
        {{0.07 * k_scale, -0.04 * k_scale}, 0.13 * k_scale},
    };
    for (const Bump& b : bumps) {
        // support discipline: the bump disk must sit inside K
        const double margin = 1e-9 * config.base_side;
        for (double angle = 0.0; angle < 6.3; angle += 0.1) {
            const Vec2 rim{b.center.x + (b.rho - margin) * std::cos(angle),
                           b.center.y + (b.rho - margin) * std::sin(angle)};
            if (!probe_k.contains(rim))
                throw ValidationError("mosco: test bump support escapes the probe polygon");
        }
    }
    const int n = config.grid.n_samples();
    Eigen::VectorXd profile_const = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd profile_sine(n);
    for (int i = 0; i < n; ++i)
        profile_sine[i] = std::sin(2.0 * M_PI * config.grid.t(i) / config.grid.horizon());

    std::vector<TestFunction> tests_ambient;
    for (std::size_t bi = 0; bi < bumps.size(); ++bi) {
        Eigen::VectorXd spatial(static_cast<int>(ambient_space.mesh().n_vertices()));
        for (std::size_t i = 0; i < ambient_space.mesh().n_vertices(); ++i)
            spatial[static_cast<int>(i)] = bumps[bi](ambient_space.mesh().vertices()[i]);
        // exact zero outside K at ambient nodes
        for (std::size_t i = 0; i < ambient_space.mesh().n_vertices(); ++i)
            if (!probe_k.contains(ambient_space.mesh().vertices()[i]) &&
                spatial[static_cast<int>(i)] != 0.0)
                throw ValidationError("mosco: test function support leaked outside K");
        for (int profile = 0; profile < 2; ++profile) {
            TestFunction tf;
            tf.spatial = spatial;
            if (profile == 1)
                tf.temporal.assign(profile_sine.data(), profile_sine.data() + n);
            report.test_names.push_back("bump" + std::to_string(bi) +
                                        (profile == 0 ? "_const" : "_sine"));
            tests_ambient.push_back(std::move(tf));
        }
    }

    // data recipe: u0 a bump, u1 = 0, f separable bump * sine (all inside K)
    const Bump u0_bump{{0.0, 0.0}, 0.20 * k_scale};
    const Bump f_bump{{0.05 * k_scale, 0.04 * k_scale}, 0.15 * k_scale};

    // phase A: meshes, bases, budgets per level (reference last)
    std::vector<int> levels;
    for (int lvl = config.first_level; lvl <= config.last_level; ++lvl) levels.push_back(lvl);
    levels.push_back(config.ref_level);

    SpectralOptions spectral_opts;
    spectral_opts.dense_threshold = config.dense_threshold;

    std::vector<LevelAssets> assets;
    for (int lvl : levels) {
        LevelAssets a{nullptr, nullptr, {}, {}, koch_prefractal({config.base_side, lvl, {0.0, 0.0}})};
        a.space = std::make_shared<P1Space>(triangulate(a.polygon, config.h_target));
        a.basis = std::make_shared<ModalBasis>(
            dirichlet_eigenpairs(a.space, config.n_modes, spectral_opts));
        a.budget = estimate_constants(a.basis, config.params, config.n_probes, config.seed,
                                      config.grid, config.n_threads);
        ProblemData unit = [&] {
            ProblemData d;
            d.u0 = a.space->interpolate([&](Vec2 x) { return u0_bump(x); }, true);
            d.u1 = a.space->zero_function();
            d.forcing.grid = config.grid;
            d.forcing.spatial = a.space->interpolate([&](Vec2 x) { return f_bump(x); }, true).coeffs;
            d.forcing.temporal = profile_sine;
            return d;
        }();
        a.unit_norms = data_norms(unit, *a.basis);
        assets.push_back(std::move(a));
    }

    // phase B: shared radius and data amplitude from the strictest level
    double min_r_star = std::numeric_limits<double>::max();
    for (const auto& a : assets) min_r_star = std::min(min_r_star, a.budget.r_star());
    const double r = config.r_fraction * min_r_star;
    double scale = std::numeric_limits<double>::max();
    for (const auto& a : assets) {
        const double gate_rhs = config.params.nu * config.params.eps / a.budget.c1 * r;
        scale = std::min(scale, config.gate_fraction * gate_rhs / a.unit_norms.total());
    }
    report.r = r;
    report.data_scale = scale;

    // reference transfer targets
    const LevelAssets& ref = assets.back();
    const Eigen::MatrixXd ref_modes_on_ambient =
        transfer_matrix(ref.space->mesh(), ref.basis->modes(), ambient_space.mesh());
    // test functions on the reference mesh (ambient P1 -> reference P1)
    std::vector<TestFunction> tests_ref;
    {
        Eigen::MatrixXd spatials(static_cast<int>(ambient_space.mesh().n_vertices()),
                                 static_cast<int>(tests_ambient.size()));
        for (std::size_t i = 0; i < tests_ambient.size(); ++i)
            spatials.col(static_cast<int>(i)) = tests_ambient[i].spatial;
        const Eigen::MatrixXd on_ref =
            transfer_matrix(ambient_space.mesh(), spatials, ref.space->mesh());
        for (std::size_t i = 0; i < tests_ambient.size(); ++i) {
            TestFunction tf;
            tf.spatial = on_ref.col(static_cast<int>(i));
            tf.temporal = tests_ambient[i].temporal;
            tests_ref.push_back(std::move(tf));
        }
    }
    const Eigen::VectorXd f_spatial_ref =
        ref.space->interpolate([&](Vec2 x) { return f_bump(x); }, true).coeffs * scale;

    // per-level solve + measurements (reference first so e_m can be formed)
    auto solve_level = [&](const LevelAssets& a) {
        ProblemData data;
        data.u0 = a.space->interpolate([&](Vec2 x) { return scale * u0_bump(x); }, true);
        data.u1 = a.space->zero_function();
        data.forcing.grid = config.grid;
        data.forcing.spatial =
            a.space->interpolate([&](Vec2 x) { return scale * f_bump(x); }, true).coeffs;
        data.forcing.temporal = profile_sine;
        WesterveltOptions opts;
        opts.r = r;
        opts.tol = config.tol;
        opts.max_iter = config.max_iter;
        opts.n_threads = config.n_threads;
        return solve_westervelt(config.params, data, a.basis, a.budget, opts);
    };

    const WesterveltSolution ref_solution = solve_level(ref);
    report.reference.level = config.ref_level;
    report.reference.sym_diff_area = 0.0;
    report.reference.e_m = 0.0;
    report.reference.xnorm = ref_solution.x_norm_u;
    report.reference.two_r = 2.0 * r;
    report.reference.within_bound = ref_solution.within_bound;
    report.reference.r_star = ref.budget.r_star();
    report.reference.c1 = ref.budget.c1;
    report.reference.iterations = static_cast<int>(ref_solution.log.records.size());
    for (const auto& tf : tests_ref)
        report.reference.f_values.push_back(
            evaluate_functional(*ref.space, ref.basis->modes(), ref_solution.u, tf, f_spatial_ref,
                                profile_sine, config.params));

    for (std::size_t li = 0; li + 1 < assets.size(); ++li) {
        const LevelAssets& a = assets[li];
        MoscoLevelRecord rec;
        rec.level = levels[li];
        rec.sym_diff_area = symmetric_difference_area(a.polygon, ref.polygon);
        rec.r_star = a.budget.r_star();
        rec.c1 = a.budget.c1;
        rec.two_r = 2.0 * r;
        try {
            const WesterveltSolution sol = solve_level(a);
            rec.xnorm = sol.x_norm_u;
            rec.within_bound = sol.within_bound;
            rec.iterations = static_cast<int>(sol.log.records.size());

            // e_m on the ambient mesh
            const Eigen::MatrixXd modes_on_ambient =
                transfer_matrix(a.space->mesh(), a.basis->modes(), ambient_space.mesh());
            Eigen::VectorXd density(n);
            for (int i = 0; i < n; ++i) {
                const Eigen::VectorXd diff = modes_on_ambient * sol.u.d.col(i) -
                                             ref_modes_on_ambient * ref_solution.u.d.col(i);
                density[i] = ambient_space.mass().quad(diff, diff);
            }
            double acc = 0.5 * (density[0] + density[n - 1]);
            for (int i = 1; i + 1 < n; ++i) acc += density[i];
            rec.e_m = std::sqrt(acc * config.grid.dt);

            // functional values on the reference mesh
            const Eigen::MatrixXd modes_on_ref =
                transfer_matrix(a.space->mesh(), a.basis->modes(), ref.space->mesh());
            for (const auto& tf : tests_ref)
                rec.f_values.push_back(evaluate_functional(*ref.space, modes_on_ref, sol.u, tf,
                                                           f_spatial_ref, profile_sine,
                                                           config.params));
        } catch (const Error& err) {
            rec.status = err.what();
        }
        report.levels.push_back(std::move(rec));
    }
    return report;
}

namespace {

nlohmann::ordered_json level_to_json(const MoscoLevelRecord& rec) {
    nlohmann::ordered_json j;
    j["m"] = rec.level;
    j["status"] = rec.status;
    j["sym_diff_area"] = rec.sym_diff_area;
    j["e_m"] = rec.e_m;
    j["xnorm"] = rec.xnorm;
    j["two_r"] = rec.two_r;
    j["within_bound"] = rec.within_bound;
    j["r_star"] = rec.r_star;
    j["c1"] = rec.c1;
    j["iterations"] = rec.iterations;
    j["F_values"] = rec.f_values;
    return j;
}

} // namespace

void write_mosco_json(std::ostream& os, const MoscoReport& report, const MoscoConfig& config) {
    nlohmann::ordered_json j;
    j["experiment"] = "mosco";
    j["config"] = {{"base_side", config.base_side},
                   {"first_level", config.first_level},
                   {"last_level", config.last_level},
                   {"ref_level", config.ref_level},
                   {"h_target", config.h_target},
                   {"n_modes", config.n_modes},
                   {"dt", config.grid.dt},
                   {"n_steps", config.grid.n_steps},
                   {"c", config.params.c},
                   {"nu", config.params.nu},
                   {"eps", config.params.eps},
                   {"alpha", config.params.alpha},
                   {"r_fraction", config.r_fraction},
                   {"gate_fraction", config.gate_fraction},
                   {"tol", config.tol},
                   {"max_iter", config.max_iter},
                   {"n_probes", config.n_probes},
                   {"seed", config.seed}};
    j["r"] = report.r;
    j["data_scale"] = report.data_scale;
    j["test_names"] = report.test_names;
    j["levels"] = nlohmann::ordered_json::array();
    for (const auto& rec : report.levels) j["levels"].push_back(level_to_json(rec));
    j["reference"] = level_to_json(report.reference);
    os << j.dump(2) << '\n';
}

void write_mosco_csv(std::ostream& os, const MoscoReport& report) {
    os << "m,status,sym_diff_area,e_m,xnorm,two_r,within_bound,iterations";
    for (const auto& name : report.test_names) os << ",F_" << name;
    os << '\n';
    const auto row = [&](const MoscoLevelRecord& rec) {
        os << rec.level << ',' << (rec.status == "ok" ? "ok" : "error") << ','
           << format_double(rec.sym_diff_area) << ',' << format_double(rec.e_m) << ','
           << format_double(rec.xnorm) << ',' << format_double(rec.two_r) << ','
           << (rec.within_bound ? 1 : 0) << ',' << rec.iterations;
        for (double f : rec.f_values) os << ',' << format_double(f);
        for (std::size_t i = rec.f_values.size(); i < report.test_names.size(); ++i) os << ',';
        os << '\n';
    };
    for (const auto& rec : report.levels) row(rec);
    row(report.reference);
}

} // namespace snowwave
