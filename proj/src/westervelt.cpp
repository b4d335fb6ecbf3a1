#include "snowwave/westervelt.hpp"

#include <cmath>
#include <ostream>

#include "snowwave/errors.hpp"
#include "snowwave/parallel.hpp"
#include "snowwave/rng.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

void SmallnessBudget::validate() const {
    if (!(b1 > 0.0) || !(b2 > 0.0) || !(b > 0.0) || !(c0 > 0.0) || !(c1 > 0.0))
        throw ValidationError("smallness budget: constants must be positive");
    if (!(eps > 0.0) || !(nu > 0.0) || !(alpha >= 0.0))
        throw ValidationError("smallness budget: parameters must be positive");
}

void write_iteration_log_csv(std::ostream& os, const IterationLog& log) {
    os << "j,increment,ratio,vnorm,reason\n";
    for (const auto& r : log.records)
        os << r.j << ',' << format_double(r.increment) << ','
           << (r.j >= 1 ? format_double(r.ratio) : std::string()) << ',' << format_double(r.v_norm)
           << ',' << (static_cast<std::size_t>(r.j) + 1 == log.records.size() ? log.termination
                                                                              : std::string())
           << '\n';
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Smooth random modal trajectory d_k(t) = A sin(w t + phi) exp(-g t), with
// analytic first and second derivatives. Amplitudes damped in lambda so the
// X-norm is dominated by a spread of modes rather than the last one.
ModalTrajectory random_trajectory(const std::shared_ptr<const ModalBasis>& basis,
                                  const TimeGrid& grid, Rng& rng) {
    const int K = basis->count();
    ModalTrajectory traj;
    traj.basis = basis;
    traj.grid = grid;
    traj.d.resize(K, grid.n_samples());
    traj.dp.resize(K, grid.n_samples());
    traj.dpp.resize(K, grid.n_samples());
    const double T = grid.horizon();
    for (int k = 0; k < K; ++k) {
        const double p = rng.uniform(0.5, 1.5);
        const double amp = rng.normal() / std::pow(1.0 + basis->lambda(k), p);
        const double w = rng.uniform(0.5, 4.0) * 2.0 * M_PI / T;
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        const double g = rng.uniform(0.0, 2.0 / T);
        for (int i = 0; i < grid.n_samples(); ++i) {
            const double t = grid.t(i);
            const double e = std::exp(-g * t);
            const double s = std::sin(w * t + phi);
            const double cth = std::cos(w * t + phi);
            traj.d(k, i) = amp * s * e;
            traj.dp(k, i) = amp * e * (w * cth - g * s);
            traj.dpp(k, i) = amp * e * ((g * g - w * w) * s - 2.0 * g * w * cth);
        }
    }
    return traj;
}

Eigen::MatrixXd random_modal_forcing(int n_modes, const TimeGrid& grid, Rng& rng) {
    Eigen::MatrixXd fk(n_modes, grid.n_samples());
    const double T = grid.horizon();
    for (int k = 0; k < n_modes; ++k) {
        const double amp = rng.normal() / (1.0 + k);
        const double w = rng.uniform(0.5, 6.0) * 2.0 * M_PI / T;
        const double phi = rng.uniform(0.0, 2.0 * M_PI);
        for (int i = 0; i < grid.n_samples(); ++i) fk(k, i) = amp * std::sin(w * grid.t(i) + phi);
    }
    return fk;
}

double trapezoid_sqrt(Eigen::VectorXd density, double dt) {
    double s = 0.5 * (density[0] + density[density.size() - 1]);
    for (int i = 1; i + 1 < density.size(); ++i) s += density[i];
    return std::sqrt(s * dt);
}

} // namespace

SmallnessBudget estimate_constants(const std::shared_ptr<const ModalBasis>& basis,
                                   const PhysicalParams& params, int n_probes, std::uint64_t seed,
                                   const TimeGrid& grid, int n_threads) {
    params.validate();
    grid.validate();
    if (n_probes < 16) throw ValidationError("estimate_constants: n_probes must be >= 16");
    const P1Space& space = basis->space();

    SmallnessBudget budget;
    budget.eps = params.eps;
    budget.nu = params.nu;
    budget.alpha = params.alpha;

    // B1, B2: bilinear product constants over random trajectory pairs
    std::vector<double> b1s(static_cast<std::size_t>(n_probes), 0.0);
    std::vector<double> b2s(static_cast<std::size_t>(n_probes), 0.0);
    parallel_for(n_probes, n_threads, [&](int j) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j)));
        const ModalTrajectory a = random_trajectory(basis, grid, rng);
        const ModalTrajectory b = random_trajectory(basis, grid, rng);
        const double ax = x_norm(a);
        const double bx = x_norm(b);
        if (ax == 0.0 || bx == 0.0)
            throw ValidationError("estimate_constants: degenerate probe trajectory");
        const double dt = grid.dt;
        Eigen::VectorXd density1(grid.n_samples()), density2(grid.n_samples());
        for (int i = 0; i < grid.n_samples(); ++i) {
            const Eigen::VectorXd an = basis->reconstruct(a.d.col(i));
            const Eigen::VectorXd btt = basis->reconstruct(b.dpp.col(i));
            const Eigen::VectorXd at = basis->reconstruct(a.dp.col(i));
            const Eigen::VectorXd bt = basis->reconstruct(b.dp.col(i));
            density1[i] = space.product_l2_sq(an, btt);
            density2[i] = space.product_l2_sq(at, bt);
        }
        b1s[static_cast<std::size_t>(j)] = trapezoid_sqrt(density1, dt) / (ax * bx);
        b2s[static_cast<std::size_t>(j)] = trapezoid_sqrt(density2, dt) / (ax * bx);
    });
    budget.b1 = *std::max_element(b1s.begin(), b1s.end());
    budget.b2 = *std::max_element(b2s.begin(), b2s.end());
    budget.b = std::max(budget.b1, budget.b2);

    // C0: eps*nu |u|_X / |f|_Y with zero data
    std::vector<double> c0s(static_cast<std::size_t>(n_probes), 0.0);
    parallel_for(n_probes, n_threads, [&](int j) {
        Rng rng(mix_seed(seed ^ 0xC0C0C0C0ULL, static_cast<std::uint64_t>(j)));
        const Eigen::MatrixXd fk = random_modal_forcing(basis->count(), grid, rng);
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(basis->count());
        const ModalTrajectory u = solve_linear_modal(params, zero, zero, fk, grid, basis, 1);
        const double fy = y_norm_modal(fk, grid);
        if (fy == 0.0) throw ValidationError("estimate_constants: degenerate probe forcing");
        c0s[static_cast<std::size_t>(j)] = params.eps * params.nu * x_norm(u) / fy;
    });
    budget.c0 = *std::max_element(c0s.begin(), c0s.end());

    // C1: data-to-solution constant with initial data
    std::vector<double> c1s(static_cast<std::size_t>(n_probes), 0.0);
    parallel_for(n_probes, n_threads, [&](int j) {
        Rng rng(mix_seed(seed ^ 0xC1C1C1C1ULL, static_cast<std::uint64_t>(j)));
        const Eigen::MatrixXd fk = random_modal_forcing(basis->count(), grid, rng);
        Eigen::VectorXd d0(basis->count()), v0(basis->count());
        for (int k = 0; k < basis->count(); ++k) {
            d0[k] = rng.normal() / (1.0 + basis->lambda(k));
            v0[k] = rng.normal() / std::sqrt(1.0 + basis->lambda(k));
        }
        const ModalTrajectory u = solve_linear_modal(params, d0, v0, fk, grid, basis, 1);
        const auto& lam = basis->lambdas();
        const double lap_u0 = std::sqrt((lam.array().square() * d0.array().square()).sum());
        const double u1_h10 = std::sqrt((lam.array() * v0.array().square()).sum());
        const double denom = y_norm_modal(fk, grid) + lap_u0 + u1_h10;
        if (denom == 0.0) throw ValidationError("estimate_constants: degenerate probe data");
        c1s[static_cast<std::size_t>(j)] = params.eps * params.nu * x_norm(u) / denom;
    });
    budget.c1 = *std::max_element(c1s.begin(), c1s.end());

    budget.validate();
    return budget;
}

PhiResult phi_apply(const ModalTrajectory& v, const ModalTrajectory& u_star,
                    const PhysicalParams& params, bool with_nodal, int n_threads) {
    if (v.basis.get() != u_star.basis.get())
        throw ValidationError("phi_apply: trajectories use different bases");
    if (!(v.grid == u_star.grid)) throw ValidationError("phi_apply: time grids differ");
    const ModalBasis& basis = *v.basis;
    const P1Space& space = basis.space();
    const int n = v.grid.n_samples();
    const double ae = params.alpha * params.eps;

    PhiResult out;
    out.modal.resize(basis.count(), n);
    if (with_nodal) out.nodal.resize(basis.modes().rows(), n);

    parallel_for(n, n_threads, [&](int i) {
        const Eigen::VectorXd u = basis.reconstruct(v.d.col(i) + u_star.d.col(i));
        const Eigen::VectorXd ut = basis.reconstruct(v.dp.col(i) + u_star.dp.col(i));
        const Eigen::VectorXd utt = basis.reconstruct(v.dpp.col(i) + u_star.dpp.col(i));
        const Eigen::VectorXd load =
            ae * (space.product_load(u, utt) + space.product_load(ut, ut));
        // modal coefficients of the L2 projection: w_k' M (M^{-1} load) = w_k' load
        out.modal.col(i) = basis.modes().transpose() * load;
        if (with_nodal) out.nodal.col(i) = space.l2_project_load(load).coeffs;
    });
    return out;
}

DataNorms data_norms(const ProblemData& data, const ModalBasis& basis) {
    DataNorms n;
    n.f_y = y_norm(data.forcing, basis);
    const auto init = project_initial(data, basis);
    const auto& lam = basis.lambdas();
    n.lap_u0 = std::sqrt((lam.array().square() * init.d0.array().square()).sum());
    n.u1_h10 = std::sqrt((lam.array() * init.v0.array().square()).sum());
    return n;
}

namespace {

double xnorm_difference(const ModalTrajectory& a, const ModalTrajectory& b) {
    ModalTrajectory diff;
    diff.basis = a.basis;
    diff.grid = a.grid;
    diff.d = a.d - b.d;
    diff.dp = a.dp - b.dp;
    diff.dpp = a.dpp - b.dpp;
    return x_norm(diff);
}

ModalTrajectory trajectory_sum(const ModalTrajectory& a, const ModalTrajectory& b) {
    ModalTrajectory s;
    s.basis = a.basis;
    s.grid = a.grid;
    s.d = a.d + b.d;
    s.dp = a.dp + b.dp;
    s.dpp = a.dpp + b.dpp;
    return s;
}

} // namespace

WesterveltSolution solve_westervelt(const PhysicalParams& params, const ProblemData& data,
                                    const std::shared_ptr<const ModalBasis>& basis,
                                    const SmallnessBudget& budget, const WesterveltOptions& opts) {
    params.validate();
    budget.validate();
    if (!(opts.tol > 0.0)) throw ValidationError("solve_westervelt: tol must be positive");
    if (opts.max_iter < 1) throw ValidationError("solve_westervelt: max_iter must be >= 1");
    if (!(opts.r > 0.0) || !(opts.r < budget.r_star()))
        throw ValidationError("solve_westervelt: need 0 < r < r_star = " +
                              format_double(budget.r_star()));

    WesterveltSolution sol;
    const DataNorms norms = data_norms(data, *basis);
    sol.gate_lhs = norms.total();
    sol.gate_rhs = params.nu * params.eps / budget.c1 * opts.r;
    sol.gate_overridden = opts.override_gate;
    if (sol.gate_lhs > sol.gate_rhs && !opts.override_gate)
        throw SmallnessError("smallness gate violated: |f|_Y + |Lap u0| + |u1|_H10 = " +
                                 format_double(sol.gate_lhs) + " > (nu eps / C1) r = " +
                                 format_double(sol.gate_rhs),
                             sol.gate_lhs, sol.gate_rhs);

    sol.u_star = solve_linear(params, data, basis, opts.n_threads);

    const TimeGrid& grid = data.forcing.grid;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(basis->count());
    ModalTrajectory v;
    v.basis = basis;
    v.grid = grid;
    v.d = Eigen::MatrixXd::Zero(basis->count(), grid.n_samples());
    v.dp = v.d;
    v.dpp = v.d;

    double prev_increment = -1.0;
    int rising = 0;
    bool converged = false;
    for (int j = 0; j < opts.max_iter; ++j) {
        const PhiResult phi = phi_apply(v, sol.u_star, params, false, opts.n_threads);
        ModalTrajectory v_next =
            solve_linear_modal(params, zero, zero, phi.modal, grid, basis, opts.n_threads);
        const double inc = xnorm_difference(v_next, v);
        IterationRecord rec;
        rec.j = j;
        rec.increment = inc;
        rec.v_norm = x_norm(v_next);
        if (j >= 1) {
            rec.ratio = prev_increment > 0.0 ? inc / prev_increment : 0.0;
            rising = rec.ratio >= 1.0 ? rising + 1 : 0;
        }
        sol.log.records.push_back(rec);
        v = std::move(v_next);
        prev_increment = inc;
        if (inc < opts.tol) {
            converged = true;
            break;
        }
        if (rising >= 3) {
            sol.log.termination = "diverged";
            throw IterationFailure("solve_westervelt: contraction ratio >= 1 for 3 consecutive "
                                   "iterations (j = " +
                                       std::to_string(j) + ")",
                                   sol.log);
        }
    }
    if (!converged) {
        sol.log.termination = "max_iter";
        throw IterationFailure("solve_westervelt: no convergence within " +
                                   std::to_string(opts.max_iter) + " iterations",
                               sol.log);
    }
    sol.log.termination = "converged";
    sol.v = v;
    sol.u = trajectory_sum(sol.u_star, v);
    sol.x_norm_u = x_norm(sol.u);
    sol.bound_2r = 2.0 * opts.r;
    sol.within_bound = sol.x_norm_u <= sol.bound_2r;

    // fixed-point consistency: one extra application of Phi, full Y norm
    const PhiResult phi_final = phi_apply(v, sol.u_star, params, true, opts.n_threads);
    const auto& lam = basis->lambdas();
    Eigen::VectorXd density(grid.n_samples());
    Eigen::VectorXd density_span(grid.n_samples());
    for (int i = 0; i < grid.n_samples(); ++i) {
        // L v at a grid point, modally (exact from the stored identity)
        const Eigen::VectorXd lv = v.dpp.col(i) +
                                   params.eps * params.nu * lam.cwiseProduct(v.dp.col(i)) +
                                   params.c * params.c * lam.cwiseProduct(v.d.col(i));
        const Eigen::VectorXd diff = basis->reconstruct(lv) - phi_final.nodal.col(i);
        density[i] = basis->space().mass().quad(diff, diff);
        density_span[i] = (lv - phi_final.modal.col(i)).squaredNorm();
    }
    sol.consistency_y = trapezoid_sqrt(std::move(density), grid.dt);
    sol.consistency_inspan_y = trapezoid_sqrt(std::move(density_span), grid.dt);
    sol.consistency_c = sol.consistency_y / opts.tol;
    return sol;
}

ProblemData manufacture_forcing(const ModalTrajectory& u_exact, const PhysicalParams& params,
                                int n_threads) {
    params.validate();
    const ModalBasis& basis = *u_exact.basis;
    const P1Space& space = basis.space();
    const auto& lam = basis.lambdas();
    const int n = u_exact.grid.n_samples();
    const double ae = params.alpha * params.eps;

    ProblemData data;
    data.u0 = {space.mesh_ptr(), basis.reconstruct(u_exact.d.col(0)), true};
    data.u1 = {space.mesh_ptr(), basis.reconstruct(u_exact.dp.col(0)), true};
    data.forcing.grid = u_exact.grid;
    data.forcing.nodal.resize(basis.modes().rows(), n);
    parallel_for(n, n_threads, [&](int i) {
        // linear residual, modal (Delta acts as -lambda)
        const Eigen::VectorXd lu = u_exact.dpp.col(i) +
                                   params.eps * params.nu * lam.cwiseProduct(u_exact.dp.col(i)) +
                                   params.c * params.c * lam.cwiseProduct(u_exact.d.col(i));
        const Eigen::VectorXd u = basis.reconstruct(u_exact.d.col(i));
        const Eigen::VectorXd ut = basis.reconstruct(u_exact.dp.col(i));
        const Eigen::VectorXd utt = basis.reconstruct(u_exact.dpp.col(i));
        const Eigen::VectorXd load =
            ae * (space.product_load(u, utt) + space.product_load(ut, ut));
        const Eigen::VectorXd q = space.l2_project_load(load).coeffs;
        data.forcing.nodal.col(i) = basis.reconstruct(lu) - q;
    });
    return data;
}

std::vector<ResidualEntry> weak_residual(const ModalTrajectory& u, const ProblemData& data,
                                         const PhysicalParams& params,
                                         const std::vector<TestFunction>& test_set) {
    const ModalBasis& basis = *u.basis;
    const P1Space& space = basis.space();
    const TimeGrid& grid = u.grid;
    const int n = grid.n_samples();
    const double ae = params.alpha * params.eps;

    // forcing term (f, phi): exact against the stored representation
    const bool have_forcing = !data.forcing.is_zero();
    const bool f_nodal = have_forcing && data.forcing.nodal.size() != 0;
    const bool f_rank1 = have_forcing && !f_nodal && data.forcing.is_rank1();
    Eigen::MatrixXd fk;
    if (have_forcing && !f_nodal && !f_rank1) fk = modal_forcing(data.forcing, basis);

    std::vector<ResidualEntry> out(test_set.size());
    for (std::size_t ti = 0; ti < test_set.size(); ++ti) {
        const TestFunction& phi = test_set[ti];
        if (phi.spatial.size() != basis.modes().rows())
            throw ValidationError("weak_residual: test function size mismatch");
        if (!phi.temporal.empty() && static_cast<int>(phi.temporal.size()) != n)
            throw ValidationError("weak_residual: temporal profile length mismatch");
        const Eigen::VectorXd gm = basis.projector().transpose() * phi.spatial; // (w_k, phi)_M
        const Eigen::VectorXd gk = basis.modes().transpose() *
                                   space.stiffness().multiply(phi.spatial); // (grad w_k, grad phi)
        const Eigen::VectorXd m_phi = space.mass().multiply(phi.spatial);
        const double rank1_weight = f_rank1 ? m_phi.dot(data.forcing.spatial) : 0.0;

        Eigen::VectorXd density(n), scale_density(n);
        for (int i = 0; i < n; ++i) {
            const double g = phi.temporal.empty() ? 1.0 : phi.temporal[static_cast<std::size_t>(i)];
            const double mass_term = gm.dot(u.dpp.col(i));
            const double stiff_term = params.c * params.c * gk.dot(u.d.col(i));
            const double damp_term = params.eps * params.nu * gk.dot(u.dp.col(i));
            double nonlinear = 0.0;
            if (ae != 0.0) {
                const Eigen::VectorXd un = basis.reconstruct(u.d.col(i));
                const Eigen::VectorXd utn = basis.reconstruct(u.dp.col(i));
                const Eigen::VectorXd uttn = basis.reconstruct(u.dpp.col(i));
                const Eigen::VectorXd load =
                    space.product_load(un, uttn) + space.product_load(utn, utn);
                nonlinear = ae * phi.spatial.dot(load);
            }
            double f_term = 0.0;
            if (f_nodal)
                f_term = m_phi.dot(data.forcing.nodal.col(i));
            else if (f_rank1)
                f_term = rank1_weight * data.forcing.temporal[i];
            else if (have_forcing)
                f_term = gm.dot(fk.col(i));
            density[i] = g * (mass_term + stiff_term + damp_term - nonlinear - f_term);
            scale_density[i] = std::abs(g) * (std::abs(mass_term) + std::abs(stiff_term) +
                                              std::abs(damp_term) + std::abs(nonlinear) +
                                              std::abs(f_term));
        }
        double resid = 0.5 * (density[0] + density[n - 1]);
        double scale = 0.5 * (scale_density[0] + scale_density[n - 1]);
        for (int i = 1; i + 1 < n; ++i) {
            resid += density[i];
            scale += scale_density[i];
        }
        out[ti].residual = resid * grid.dt;
        out[ti].scale = std::max(scale * grid.dt, 1e-300);
    }
    return out;
}

} // namespace snowwave
