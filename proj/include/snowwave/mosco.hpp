#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "snowwave/westervelt.hpp"

namespace snowwave {

struct MoscoConfig {
    double base_side = 1.0;
    int first_level = 1;
    int last_level = 4;
    int ref_level = 5;
    double ambient_margin = 0.125;
    double h_target = 0.03;
    int n_modes = 64;
    int dense_threshold = 3000;
    TimeGrid grid{1e-3, 1000};
    PhysicalParams params;
    double r_fraction = 0.5;    // r = r_fraction * min_m r_star
    double gate_fraction = 0.5; // data amplitude at this fraction of the strictest gate
    double tol = 1e-9;
    int max_iter = 60;
    int n_probes = 16;
    std::uint64_t seed = 2024;
    int n_threads = 1;
    void validate() const;
};

struct MoscoLevelRecord {
    int level = 0;
    std::string status = "ok"; // or the error message; failed levels are skipped
    double sym_diff_area = 0.0;
    double e_m = 0.0; // |E u_m - E u_ref|_{L2 L2(ambient)}; 0 for the reference itself
    double xnorm = 0.0;
    double two_r = 0.0;
    bool within_bound = false;
    double r_star = 0.0;
    double c1 = 0.0;
    int iterations = 0;
    std::vector<double> f_values; // F[E u_m, phi_i] on the reference mesh
};

struct MoscoReport {
    double r = 0.0;
    double data_scale = 0.0;
    std::vector<std::string> test_names;
    std::vector<MoscoLevelRecord> levels; // first..last
    MoscoLevelRecord reference;
};

/// The domain-approximation experiment: per Koch level, mesh, build the
/// eigenbasis, solve the gated Westervelt problem, extend by zero to the
/// ambient mesh, and measure (a) symmetric-difference areas, (b) e_m against
/// the reference level, (c) the weak-form functional against the test set,
/// (d) the uniform X-norm bound.
MoscoReport run_mosco(const MoscoConfig& config);

/// Weak-form functional of a trajectory transferred to a target space:
/// int int u_tt phi + c^2 grad u grad phi + nu eps grad u_t grad phi
///        - alpha eps (u u_tt) phi - alpha eps (u_t)^2 phi - f phi.
/// modes_on_target carries the trajectory's modes sampled on the target mesh
/// (zero rows outside the source domain = extension by zero).
double evaluate_functional(const P1Space& target, const Eigen::MatrixXd& modes_on_target,
                           const ModalTrajectory& traj, const TestFunction& phi,
                           const Eigen::VectorXd& f_spatial, const Eigen::VectorXd& f_temporal,
                           const PhysicalParams& params);

/// Rows interpolate P1 data from `source` at the vertices of `target`
/// (0 outside source): the matrix of extend-by-zero composed with sampling.
Eigen::MatrixXd transfer_matrix(const Mesh& source, const Eigen::MatrixXd& columns,
                                const Mesh& target);

void write_mosco_json(std::ostream& os, const MoscoReport& report, const MoscoConfig& config);
void write_mosco_csv(std::ostream& os, const MoscoReport& report);

} // namespace snowwave
