#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "snowwave/errors.hpp"
#include "snowwave/linwave.hpp"

namespace snowwave {

/// Constants of the Sukhinin fixed-point construction.
/// r_star = nu / (8 B C0 alpha), Theta(r) = 8 B C_eps alpha eps r with
/// C_eps = C0/(eps nu) (so Theta(r) = r / r_star identically, and
/// Theta(r_star) = 1 exactly), w(r) = r - 4 B (C0/nu) alpha r^2.
struct SmallnessBudget {
    double b1 = 0.0; // |a d2b/dt2|_Y <= B1 |a|_X |b|_X
    double b2 = 0.0; // |da/dt db/dt|_Y <= B2 |a|_X |b|_X
    double b = 0.0;  // max(B1, B2)
    double c0 = 0.0; // |u|_X <= (C0/(eps nu)) |f|_Y, zero data
    double c1 = 0.0; // |u|_X <= (C1/(eps nu)) (|f|_Y + |Lap u0| + |u1|_H10)
    double eps = 0.0, nu = 0.0, alpha = 0.0;

    double c_eps() const { return c0 / (eps * nu); }
    /// Infinite when alpha = 0 (the nonlinearity vanishes, any radius works).
    double r_star() const {
        return alpha > 0.0 ? nu / (8.0 * b * c0 * alpha)
                           : std::numeric_limits<double>::infinity();
    }
    double theta_of(double r) const { return r / r_star(); }
    double w_of(double r) const { return r - 4.0 * b * (c0 / nu) * alpha * r * r; }
    void validate() const;
};

struct IterationRecord {
    int j = 0;
    double increment = 0.0; // |v_{j+1} - v_j|_X
    double ratio = 0.0;     // increment_j / increment_{j-1}, recorded for j >= 1
    double v_norm = 0.0;    // |v_{j+1}|_X
};

struct IterationLog {
    std::vector<IterationRecord> records;
    std::string termination; // converged | diverged | max_iter
};

/// CSV "j,increment,ratio,vnorm,reason".
void write_iteration_log_csv(std::ostream& os, const IterationLog& log);

/// Divergence or exhausted iteration budget; carries the log for reporting.
class IterationFailure : public NumericalError {
public:
    IterationFailure(const std::string& what, IterationLog log_in)
        : NumericalError(what), log(std::move(log_in)) {}
    IterationLog log;
};

/// Probe-maximization estimate of the budget constants over seeded random
/// modal trajectories and forcings. Deterministic given (seed, n_probes).
SmallnessBudget estimate_constants(const std::shared_ptr<const ModalBasis>& basis,
                                   const PhysicalParams& params, int n_probes, std::uint64_t seed,
                                   const TimeGrid& grid, int n_threads = 1);

/// Phi(v) = alpha eps (v+u*) d^2/dt^2(v+u*) + alpha eps [d/dt(v+u*)]^2,
/// assembled nodally per time step and L2-projected onto P1. modal holds the
/// coefficients against the basis; nodal (V x N+1, the projected fields) is
/// filled only when requested.
struct PhiResult {
    Eigen::MatrixXd modal;
    Eigen::MatrixXd nodal;
};

PhiResult phi_apply(const ModalTrajectory& v, const ModalTrajectory& u_star,
                    const PhysicalParams& params, bool with_nodal = false, int n_threads = 1);

struct WesterveltOptions {
    double r = 0.0; // solvability radius, must be < budget.r_star()
    double tol = 1e-9;
    int max_iter = 60;
    bool override_gate = false;
    int n_threads = 1;
};

struct WesterveltSolution {
    ModalTrajectory u; // u = u* + v
    ModalTrajectory u_star;
    ModalTrajectory v;
    IterationLog log;
    double gate_lhs = 0.0;  // |f|_Y + |Lap u0|_L2 + |u1|_H10
    double gate_rhs = 0.0;  // (nu eps / C1) r
    bool gate_overridden = false;
    double x_norm_u = 0.0;
    double bound_2r = 0.0;       // 2r of the theorem
    bool within_bound = false;   // |u|_X <= 2r
    // |L v - Phi(v)|_Y at termination (one extra Phi application). The full
    // norm carries the committed modal-truncation error of the projection;
    // the in-span part is what the iteration drives below tol.
    double consistency_y = 0.0;
    double consistency_inspan_y = 0.0;
    double consistency_c = 0.0; // consistency_y / tol, reported
};

/// Sukhinin construction: u* solves the linear problem with the data, then
/// v_{j+1} = L^{-1} Phi(v_j) with zero data until |v_{j+1} - v_j|_X < tol.
/// Gate: |f|_Y + |Lap u0| + |u1|_H10 <= (nu eps / C1) r, r < r_star.
WesterveltSolution solve_westervelt(const PhysicalParams& params, const ProblemData& data,
                                    const std::shared_ptr<const ModalBasis>& basis,
                                    const SmallnessBudget& budget, const WesterveltOptions& opts);

/// Forcing that makes u_exact a discrete solution:
/// f = u_tt - c^2 Lap u - nu eps Lap u_t - alpha eps (u u_tt + u_t^2),
/// the Laplacian acting modally, the products through the same projection
/// pipeline as the solver. Initial data are read off u_exact.
ProblemData manufacture_forcing(const ModalTrajectory& u_exact, const PhysicalParams& params,
                                int n_threads = 1);

/// Time-sampled P1 test function: spatial profile times a temporal profile
/// (empty temporal = constant 1).
struct TestFunction {
    Eigen::VectorXd spatial; // nodal, dirichlet_zero
    std::vector<double> temporal;
};

struct ResidualEntry {
    double residual = 0.0;
    double scale = 0.0; // largest single term, for relative comparison
};

/// Variational residual per test function:
/// int (u_tt, phi) + c^2 (grad u, grad phi) + nu eps (grad u_t, grad phi)
///   - alpha eps (u u_tt + u_t^2, phi) - (f, phi) dt.
std::vector<ResidualEntry> weak_residual(const ModalTrajectory& u, const ProblemData& data,
                                         const PhysicalParams& params,
                                         const std::vector<TestFunction>& test_set);

/// Gate norms of a data set against a basis: |f|_Y, |Lap u0|_L2, |u1|_H10.
struct DataNorms {
    double f_y = 0.0;
    double lap_u0 = 0.0;
    double u1_h10 = 0.0;
    double total() const { return f_y + lap_u0 + u1_h10; }
};
DataNorms data_norms(const ProblemData& data, const ModalBasis& basis);

} // namespace snowwave
