#include "snowwave/linwave.hpp"

#include <cmath>
#include <ostream>

#include "snowwave/errors.hpp"
#include "snowwave/parallel.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

void PhysicalParams::validate() const {
    if (!(c > 0.0) || !(nu > 0.0) || !(eps > 0.0))
        throw ValidationError("physical params: c, nu, eps must be strictly positive");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ValidationError("physical params: alpha must be finite and non-negative");
    if (!(eps * nu > 0.0)) throw ValidationError("physical params: eps*nu must be positive");
}

void TimeGrid::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time grid: dt must be positive");
    if (n_steps < 1) throw ValidationError("time grid: need at least one step");
}

InitialCoefficients project_initial(const ProblemData& data, const ModalBasis& basis) {
    if (data.u0.mesh.get() != &basis.space().mesh() || data.u1.mesh.get() != &basis.space().mesh())
        throw ValidationError("project_initial: data and basis live on different meshes");
    return {basis.project(data.u0.coeffs), basis.project(data.u1.coeffs)};
}

Eigen::MatrixXd modal_forcing(const SampledForcing& f, const ModalBasis& basis) {
    if (f.is_zero())
        return Eigen::MatrixXd::Zero(basis.count(), f.grid.n_samples());
    if (f.modal.size() != 0) {
        if (f.modal.rows() != basis.count() || f.modal.cols() != f.grid.n_samples())
            throw ValidationError("forcing: modal sample shape mismatch");
        return f.modal;
    }
    if (f.is_rank1()) {
        if (f.spatial.size() != basis.modes().rows() ||
            f.temporal.size() != f.grid.n_samples())
            throw ValidationError("forcing: rank-1 sample shape mismatch");
        return (basis.projector().transpose() * f.spatial) * f.temporal.transpose();
    }
    if (f.nodal.rows() != basis.modes().rows() || f.nodal.cols() != f.grid.n_samples())
        throw ValidationError("forcing: nodal sample shape mismatch");
    return basis.projector().transpose() * f.nodal;
}

namespace {

// Fundamental pair of y'' + 2 beta y' + omega^2 y = 0 over a step h:
// C(0)=1, C'(0)=0, S(0)=0, S'(0)=1, with C' = -omega^2 S and S' = C - 2 beta S.
struct Propagator {
    double C, S;
};

Propagator fundamental_pair(double beta, double disc, double h) {
    // disc = beta^2 - omega^2
    const double x = disc * h * h;
    if (std::abs(x) < 1e-4 || std::abs(disc) < 1e-10 * beta * beta) {
        // series for cosh-like and sinh-like in the degenerate region; the
        // quartic term keeps the truncation error below 1e-20 relative
        const double e = std::exp(-beta * h);
        const double sinch = h * (1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0);
        const double coshl = 1.0 + x / 2.0 + x * x / 24.0 + x * x * x / 720.0;
        return {e * (coshl + beta * sinch), e * sinch};
    }
    if (disc > 0.0) {
        const double s = std::sqrt(disc); // s < beta, so both exponents are <= 0
        const double em = std::exp((s - beta) * h);
        const double ep = std::exp(-(s + beta) * h);
        const double ecosh = 0.5 * (em + ep);
        const double esinch = (em - ep) / (2.0 * s);
        return {ecosh + beta * esinch, esinch};
    }
    const double wd = std::sqrt(-disc);
    const double e = std::exp(-beta * h);
    const double esinch = e * std::sin(wd * h) / wd;
    return {e * std::cos(wd * h) + beta * esinch, esinch};
}

// Integrate one mode across the whole grid; f is the sampled modal forcing
// (piecewise linear reconstruction), exact for that class.
void integrate_mode(double lambda, const PhysicalParams& p, double d0, double v0,
                    const Eigen::VectorXd& f, const TimeGrid& grid, Eigen::VectorXd& d,
                    Eigen::VectorXd& v, Eigen::VectorXd& a) {
    const double beta = 0.5 * p.eps * p.nu * lambda;
    const double w2 = p.c * p.c * lambda;
    const double disc = beta * beta - w2;
    const double h = grid.dt;
    const Propagator pr = fundamental_pair(beta, disc, h);
    const double Cp = -w2 * pr.S;            // C'(h)
    const double Sp = pr.C - 2.0 * beta * pr.S; // S'(h)

    d[0] = d0;
    v[0] = v0;
    a[0] = f[0] - 2.0 * beta * v0 - w2 * d0;
    for (int i = 0; i < grid.n_steps; ++i) {
        const double f0 = f[i];
        const double f1 = f[i + 1];
        const double slope = (f1 - f0) / h;
        // particular solution of the linear-in-time forcing
        const double p0 = f0 / w2 - 2.0 * beta * slope / (w2 * w2);
        const double pp = slope / w2;
        const double ph = (f0 + slope * h) / w2 - 2.0 * beta * slope / (w2 * w2);
        const double q0 = d[i] - p0;
        const double q0p = v[i] - pp;
        d[i + 1] = pr.C * q0 + pr.S * q0p + ph;
        v[i + 1] = Cp * q0 + Sp * q0p + pp;
        a[i + 1] = f1 - 2.0 * beta * v[i + 1] - w2 * d[i + 1];
    }
}

double trapezoid(const Eigen::VectorXd& values, double dt) {
    double s = 0.5 * (values[0] + values[values.size() - 1]);
    for (int i = 1; i + 1 < values.size(); ++i) s += values[i];
    return s * dt;
}

} // namespace

ModalTrajectory solve_linear_modal(const PhysicalParams& params, const Eigen::VectorXd& d0,
                                   const Eigen::VectorXd& v0, const Eigen::MatrixXd& fk,
                                   const TimeGrid& grid,
                                   const std::shared_ptr<const ModalBasis>& basis,
                                   int n_threads) {
    params.validate();
    grid.validate();
    const int K = basis->count();
    if (d0.size() != K || v0.size() != K || fk.rows() != K || fk.cols() != grid.n_samples())
        throw ValidationError("solve_linear: modal data shape mismatch");
    if (!d0.allFinite() || !v0.allFinite() || !fk.allFinite())
        throw ValidationError("solve_linear: non-finite input");

    ModalTrajectory traj;
    traj.basis = basis;
    traj.grid = grid;
    traj.d.resize(K, grid.n_samples());
    traj.dp.resize(K, grid.n_samples());
    traj.dpp.resize(K, grid.n_samples());

    parallel_for(K, n_threads, [&](int k) {
        Eigen::VectorXd d(grid.n_samples()), v(grid.n_samples()), a(grid.n_samples());
        integrate_mode(basis->lambda(k), params, d0[k], v0[k], fk.row(k).transpose(), grid, d, v,
                       a);
        traj.d.row(k) = d.transpose();
        traj.dp.row(k) = v.transpose();
        traj.dpp.row(k) = a.transpose();
    });
    return traj;
}

ModalTrajectory solve_linear(const PhysicalParams& params, const ProblemData& data,
                             const std::shared_ptr<const ModalBasis>& basis, int n_threads) {
    data.forcing.grid.validate();
    const auto init = project_initial(data, *basis);
    const Eigen::MatrixXd fk = modal_forcing(data.forcing, *basis);
    return solve_linear_modal(params, init.d0, init.v0, fk, data.forcing.grid, basis, n_threads);
}

EnergyReport energy_report(const ModalTrajectory& traj, const PhysicalParams& params) {
    const int n = traj.grid.n_samples();
    const auto& lambda = traj.basis->lambdas();
    EnergyReport rep;
    rep.t.resize(static_cast<std::size_t>(n));
    rep.energy.resize(static_cast<std::size_t>(n));
    rep.dissipation.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    double prev_rate = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto di = traj.d.col(i);
        const auto vi = traj.dp.col(i);
        const double kin = 0.5 * vi.squaredNorm();
        const double pot = 0.5 * params.c * params.c * lambda.dot(di.cwiseProduct(di));
        const double rate = params.eps * params.nu * lambda.dot(vi.cwiseProduct(vi));
        if (i > 0) acc += 0.5 * traj.grid.dt * (prev_rate + rate);
        prev_rate = rate;
        rep.t[static_cast<std::size_t>(i)] = traj.grid.t(i);
        rep.energy[static_cast<std::size_t>(i)] = kin + pot;
        rep.dissipation[static_cast<std::size_t>(i)] = acc;
    }
    const double e0 = rep.energy[0];
    for (int i = 0; i < n; ++i)
        rep.balance_drift =
            std::max(rep.balance_drift, std::abs(rep.energy[static_cast<std::size_t>(i)] +
                                                 rep.dissipation[static_cast<std::size_t>(i)] - e0));
    return rep;
}

AprioriReport apriori_check(const ModalTrajectory& traj, const ProblemData& data,
                            const PhysicalParams& params) {
    const int n = traj.grid.n_samples();
    const auto& lambda = traj.basis->lambdas();
    double max_state = 0.0;
    Eigen::VectorXd grad_ut_sq(n), grad_u_sq(n), utt_hm1_sq(n);
    for (int i = 0; i < n; ++i) {
        const auto di = traj.d.col(i);
        const auto vi = traj.dp.col(i);
        const auto ai = traj.dpp.col(i);
        const double h10 = lambda.dot(di.cwiseProduct(di));
        const double l2v = vi.squaredNorm();
        max_state = std::max(max_state, h10 + l2v);
        grad_ut_sq[i] = lambda.dot(vi.cwiseProduct(vi));
        grad_u_sq[i] = h10;
        utt_hm1_sq[i] = (ai.array().square() / (1.0 + lambda.array())).sum();
    }
    const double lhs = max_state + trapezoid(grad_ut_sq, traj.grid.dt) +
                       trapezoid(grad_u_sq, traj.grid.dt) + trapezoid(utt_hm1_sq, traj.grid.dt);

    const double f_sq = [&] {
        if (data.forcing.is_zero()) return 0.0;
        const double yn = y_norm(data.forcing, *traj.basis);
        return yn * yn;
    }();
    const auto init = project_initial(data, *traj.basis);
    const double u0_h10 = lambda.dot(init.d0.cwiseProduct(init.d0));
    const double u1_l2 = init.v0.squaredNorm();
    const double rhs = f_sq + u0_h10 + u1_l2;

    AprioriReport rep;
    rep.lhs = lhs;
    rep.rhs = rhs;
    if (rhs == 0.0) {
        if (lhs > 1e-28)
            throw NumericalError("apriori_check: zero data produced a nonzero solution");
        rep.ratio = 0.0;
    } else {
        rep.ratio = lhs / rhs;
    }
    return rep;
}

double x_norm(const ModalTrajectory& traj) {
    const int n = traj.grid.n_samples();
    const auto lam2 = traj.basis->lambdas().array().square();
    Eigen::VectorXd density(n);
    for (int i = 0; i < n; ++i) {
        density[i] = (lam2 * traj.d.col(i).array().square()).sum() +
                     (lam2 * traj.dp.col(i).array().square()).sum() +
                     traj.dpp.col(i).squaredNorm();
    }
    return std::sqrt(trapezoid(density, traj.grid.dt));
}

double y_norm_modal(const Eigen::MatrixXd& fk, const TimeGrid& grid) {
    Eigen::VectorXd density(fk.cols());
    for (int i = 0; i < fk.cols(); ++i) density[i] = fk.col(i).squaredNorm();
    return std::sqrt(trapezoid(density, grid.dt));
}

double y_norm(const SampledForcing& f, const ModalBasis& basis) {
    if (f.is_zero()) return 0.0;
    if (f.nodal.size() != 0) {
        const auto& mass = basis.space().mass();
        Eigen::VectorXd density(f.nodal.cols());
        for (int i = 0; i < f.nodal.cols(); ++i) density[i] = mass.quad(f.nodal.col(i), f.nodal.col(i));
        return std::sqrt(trapezoid(density, f.grid.dt));
    }
    if (f.is_rank1()) {
        const double spatial_sq = basis.space().mass().quad(f.spatial, f.spatial);
        const Eigen::VectorXd density = spatial_sq * f.temporal.array().square().matrix();
        return std::sqrt(trapezoid(density, f.grid.dt));
    }
    return y_norm_modal(f.modal, f.grid);
}

void write_trajectory_csv(std::ostream& os, const ModalTrajectory& traj) {
    os << "t,k,d,dp,dpp\n";
    for (int i = 0; i < traj.grid.n_samples(); ++i)
        for (int k = 0; k < traj.n_modes(); ++k)
            os << format_double(traj.grid.t(i)) << ',' << k << ',' << format_double(traj.d(k, i))
               << ',' << format_double(traj.dp(k, i)) << ',' << format_double(traj.dpp(k, i))
               << '\n';
}

void write_energy_csv(std::ostream& os, const EnergyReport& rep) {
    os << "t,E,D\n";
    for (std::size_t i = 0; i < rep.t.size(); ++i)
        os << format_double(rep.t[i]) << ',' << format_double(rep.energy[i]) << ','
           << format_double(rep.dissipation[i]) << '\n';
}

} // namespace snowwave
