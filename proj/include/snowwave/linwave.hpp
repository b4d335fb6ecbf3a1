#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "snowwave/spectral.hpp"

namespace snowwave {

struct PhysicalParams {
    double c = 1.0;     // sound speed
    double nu = 1.0;    // viscosity coefficient
    double eps = 1e-2;  // perturbation size
    double alpha = 1.0; // nonlinearity coefficient
    void validate() const;
};

struct TimeGrid {
    double dt = 1e-3;
    int n_steps = 1000;
    int n_samples() const { return n_steps + 1; }
    double t(int i) const { return dt * i; }
    double horizon() const { return dt * n_steps; }
    void validate() const;
    bool operator==(const TimeGrid&) const = default;
};

/// Uniformly sampled forcing. One of: nodal samples (V x N+1), modal samples
/// (K x N+1 against a basis), or a separable rank-1 form spatial(x)*temporal(t).
/// All empty means zero forcing. Reconstruction in time is piecewise linear,
/// which is the integrator's exactness class.
struct SampledForcing {
    TimeGrid grid;
    Eigen::MatrixXd nodal;    // V x (N+1) or empty
    Eigen::MatrixXd modal;    // K x (N+1) or empty
    Eigen::VectorXd spatial;  // V or empty  (rank-1 form)
    Eigen::VectorXd temporal; // N+1 or empty
    bool is_zero() const {
        return nodal.size() == 0 && modal.size() == 0 && spatial.size() == 0;
    }
    bool is_rank1() const { return spatial.size() != 0; }
};

struct ProblemData {
    FemFunction u0; // dirichlet_zero
    FemFunction u1; // dirichlet_zero
    SampledForcing forcing;
};

/// Time histories of the Galerkin coefficients. The stored second derivative
/// satisfies dpp_k = f_k - eps*nu*lambda_k*dp_k - c^2*lambda_k*d_k at every
/// grid point when produced by solve_linear (enforced at storage time).
struct ModalTrajectory {
    std::shared_ptr<const ModalBasis> basis;
    TimeGrid grid;
    Eigen::MatrixXd d;   // K x (N+1)
    Eigen::MatrixXd dp;  // K x (N+1)
    Eigen::MatrixXd dpp; // K x (N+1)

    int n_modes() const { return static_cast<int>(d.rows()); }
};

struct InitialCoefficients {
    Eigen::VectorXd d0;
    Eigen::VectorXd v0;
};

/// d_k(0) = (u0, w_k)_{L2}, d'_k(0) = (u1, w_k)_{L2}.
InitialCoefficients project_initial(const ProblemData& data, const ModalBasis& basis);

/// Modal samples of the forcing (projects nodal forcing when needed).
Eigen::MatrixXd modal_forcing(const SampledForcing& f, const ModalBasis& basis);

/// Exact-propagator integration of d'' + eps*nu*lambda d' + c^2*lambda d = f_k
/// with piecewise-linear forcing; exact up to roundoff in that class.
ModalTrajectory solve_linear(const PhysicalParams& params, const ProblemData& data,
                             const std::shared_ptr<const ModalBasis>& basis, int n_threads = 1);

/// Same propagator from raw modal data (used by the fixed-point loop).
ModalTrajectory solve_linear_modal(const PhysicalParams& params, const Eigen::VectorXd& d0,
                                   const Eigen::VectorXd& v0, const Eigen::MatrixXd& fk,
                                   const TimeGrid& grid,
                                   const std::shared_ptr<const ModalBasis>& basis,
                                   int n_threads = 1);

struct EnergyReport {
    std::vector<double> t;
    std::vector<double> energy;      // E(t) = 1/2 sum dp^2 + c^2/2 sum lambda d^2
    std::vector<double> dissipation; // D(t) = eps*nu int sum lambda dp^2 (trapezoid)
    double balance_drift = 0.0;      // max |E + D - E(0)| (meaningful when f = 0)
};

EnergyReport energy_report(const ModalTrajectory& traj, const PhysicalParams& params);

struct AprioriReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0; // 0 when rhs = 0 and lhs = 0
};

/// Empirical constant of the Galerkin energy estimate:
/// [max_t(|u|_{H10}^2 + |u_t|_{L2}^2) + |grad u_t|^2_{L2L2} + |grad u|^2_{L2L2}
///  + |u_tt|^2_{L2H-1}] / [|f|^2_Y + |u0|^2_{H10} + |u1|^2_{L2}],
/// with the H^-1 norm realized modally with weights 1/(1+lambda).
AprioriReport apriori_check(const ModalTrajectory& traj, const ProblemData& data,
                            const PhysicalParams& params);

/// X(Omega) norm: sqrt(int |Delta u|^2 + int |Delta u_t|^2 + int |u_tt|^2),
/// Delta acting modally (Delta u = -sum lambda_k d_k w_k), trapezoid in time.
double x_norm(const ModalTrajectory& traj);

/// Trapezoidal L2(0,T;L2) norm of a forcing (modal route when nodal absent).
double y_norm(const SampledForcing& f, const ModalBasis& basis);
double y_norm_modal(const Eigen::MatrixXd& fk, const TimeGrid& grid);

/// CSV "t,k,d,dp,dpp" and "t,E,D".
void write_trajectory_csv(std::ostream& os, const ModalTrajectory& traj);
void write_energy_csv(std::ostream& os, const EnergyReport& rep);

} // namespace snowwave
