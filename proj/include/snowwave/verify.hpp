#pragma once

#include <cstdint>
#include <vector>

#include "snowwave/geometry.hpp"
#include "snowwave/spectral.hpp"

namespace snowwave {

/// Sine series sum a_{jkl} sin(j pi x) sin(k pi y) sin(l pi z) on the unit
/// cube; the analytic test vehicle for the 3D L-infinity inequality.
struct SineSeries3D {
    int n_max = 1;
    std::vector<double> coeffs; // n_max^3, index (j-1) + n_max*(k-1) + n_max^2*(l-1)

    explicit SineSeries3D(int n);
    double& a(int j, int k, int l);
    double a(int j, int k, int l) const;
};

struct XieReport {
    double linf = 0.0;    // sampled on a lattice: a lower bound of the true sup
    double grad_l2 = 0.0; // closed form
    double lap_l2 = 0.0;  // closed form
    double lhs = 0.0;
    double rhs = 0.0; // (1/sqrt(2 pi)) |grad u|^{1/2} |Lap u|^{1/2}
    bool holds = false;
};

/// Checks |u|_inf <= (1/sqrt(2 pi)) |grad u|^{1/2} |Lap u|^{1/2}.
/// grid_n must be >= 4*n_max so the highest mode is resolved.
XieReport xie_check(const SineSeries3D& series, int grid_n);

struct LinfStabilityReport {
    std::vector<double> constants; // per level: max over probes of linf(u)/l2(f)
    double max_constant = 0.0;
    double min_constant = 0.0;
    double spread = 0.0; // max/min
};

/// Per prefractal level, estimate C in |u|_inf <= C |f|_L2 for the discrete
/// Poisson problem by probe maximization over seeded random forcings.
LinfStabilityReport linf_stability_scan(const DomainSequence& seq, double h_target, int n_probes,
                                        std::uint64_t seed, int dense_threshold = 3000);

struct PoincareReport {
    double constant = 0.0;    // 1/sqrt(lambda_1)
    double worst_slack = 0.0; // min over draws of C*h1_semi - l2 (>= -1e-10 expected)
    bool all_ok = false;
    int n_random = 0;
};

/// Random functions in span(basis), norms evaluated through the assembled
/// matrices (not the modal shortcut), checked against C = 1/sqrt(lambda_1).
PoincareReport poincare_verify(const ModalBasis& basis, int n_random, std::uint64_t seed);

} // namespace snowwave
