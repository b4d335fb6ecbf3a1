#include "snowwave/verify.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>

#include "snowwave/errors.hpp"
#include "snowwave/fem.hpp"
#include "snowwave/mesh.hpp"
#include "snowwave/rng.hpp"

namespace snowwave {

SineSeries3D::SineSeries3D(int n) : n_max(n) {
    if (n < 1) throw ValidationError("sine series: n_max must be >= 1");
    coeffs.assign(static_cast<std::size_t>(n) * n * n, 0.0);
}

double& SineSeries3D::a(int j, int k, int l) {
    return coeffs[static_cast<std::size_t>(j - 1) +
                  static_cast<std::size_t>(n_max) * (k - 1) +
                  static_cast<std::size_t>(n_max) * n_max * (l - 1)];
}

double SineSeries3D::a(int j, int k, int l) const {
    return coeffs[static_cast<std::size_t>(j - 1) +
                  static_cast<std::size_t>(n_max) * (k - 1) +
                  static_cast<std::size_t>(n_max) * n_max * (l - 1)];
}

XieReport xie_check(const SineSeries3D& series, int grid_n) {
    const int n = series.n_max;
    if (grid_n < 4 * n)
        throw ValidationError("xie_check: grid_n must be >= 4*n_max to resolve the highest mode");

    XieReport rep;
    // closed forms: each sin^2 factor integrates to 1/2 over [0,1]
    double grad_sq = 0.0, lap_sq = 0.0;
    const double pi = M_PI;
    for (int l = 1; l <= n; ++l)
        for (int k = 1; k <= n; ++k)
            for (int j = 1; j <= n; ++j) {
                const double a = series.a(j, k, l);
                if (a == 0.0) continue;
                const double s = static_cast<double>(j) * j + k * k + l * l;
                grad_sq += a * a * pi * pi * s / 8.0;
                lap_sq += a * a * pi * pi * pi * pi * s * s / 8.0;
            }
    rep.grad_l2 = std::sqrt(grad_sq);
    rep.lap_l2 = std::sqrt(lap_sq);

    // sampled sup via separable tensor contraction over the (grid_n+1)^3 lattice
    const int g = grid_n + 1;
    std::vector<double> sx(static_cast<std::size_t>(n) * g);
    for (int j = 1; j <= n; ++j)
        for (int i = 0; i < g; ++i)
            sx[static_cast<std::size_t>(j - 1) * g + i] =
                std::sin(pi * j * static_cast<double>(i) / grid_n);

    // b[k][l][ix] = sum_j a_jkl sin(j pi x)
    std::vector<double> b(static_cast<std::size_t>(n) * n * g, 0.0);
    for (int l = 1; l <= n; ++l)
        for (int k = 1; k <= n; ++k)
            for (int j = 1; j <= n; ++j) {
                const double a = series.a(j, k, l);
                if (a == 0.0) continue;
                for (int i = 0; i < g; ++i)
                    b[(static_cast<std::size_t>(k - 1) + static_cast<std::size_t>(n) * (l - 1)) * g + i] +=
                        a * sx[static_cast<std::size_t>(j - 1) * g + i];
            }
    // c[l][ix][iy] = sum_k b[k][l][ix] sin(k pi y)
    std::vector<double> cxy(static_cast<std::size_t>(n) * g * g, 0.0);
    for (int l = 1; l <= n; ++l)
        for (int k = 1; k <= n; ++k)
            for (int ix = 0; ix < g; ++ix) {
                const double bv =
                    b[(static_cast<std::size_t>(k - 1) + static_cast<std::size_t>(n) * (l - 1)) * g + ix];
                if (bv == 0.0) continue;
                for (int iy = 0; iy < g; ++iy)
                    cxy[(static_cast<std::size_t>(l - 1) * g + ix) * g + iy] +=
                        bv * sx[static_cast<std::size_t>(k - 1) * g + iy];
            }
    double sup = 0.0;
    for (int ix = 0; ix < g; ++ix)
        for (int iy = 0; iy < g; ++iy) {
            for (int iz = 0; iz < g; ++iz) {
                double u = 0.0;
                for (int l = 1; l <= n; ++l)
                    u += cxy[(static_cast<std::size_t>(l - 1) * g + ix) * g + iy] *
                         sx[static_cast<std::size_t>(l - 1) * g + iz];
                sup = std::max(sup, std::abs(u));
            }
        }
    rep.linf = sup;
    rep.lhs = sup;
    rep.rhs = std::sqrt(rep.grad_l2 * rep.lap_l2) / std::sqrt(2.0 * pi);
    rep.holds = rep.lhs <= rep.rhs;
    return rep;
}

namespace {

// Mesh-independent probe field: a small sum of random plane waves. The same
// (seed, index) pair names the same function on every domain and resolution,
// so per-level constants are comparable.
struct PlaneWaveProbe {
    struct Wave {
        double a, kx, ky, phase;
    };
    std::vector<Wave> waves;

    PlaneWaveProbe(std::uint64_t seed, int index, double wavenumber_scale) {
        Rng rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(index + 1)));
        for (int j = 0; j < 6; ++j)
            waves.push_back({rng.normal(), rng.uniform(-wavenumber_scale, wavenumber_scale),
                             rng.uniform(-wavenumber_scale, wavenumber_scale),
                             rng.uniform(0.0, 2.0 * M_PI)});
    }
    double operator()(Vec2 x) const {
        double v = 0.0;
        for (const Wave& w : waves) v += w.a * std::cos(w.kx * x.x + w.ky * x.y + w.phase);
        return v;
    }
};

} // namespace

LinfStabilityReport linf_stability_scan(const DomainSequence& seq, double h_target, int n_probes,
                                        std::uint64_t seed, int dense_threshold) {
    (void)dense_threshold;
    if (n_probes < 1) throw ValidationError("linf_stability_scan: n_probes must be >= 1");
    const double wavenumber_scale = 8.0 / seq.limit_proxy.diameter();
    LinfStabilityReport rep;
    for (std::size_t m = 0; m < seq.members.size(); ++m) {
        const P1Space space(triangulate(seq.members[m], h_target));
        Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> kllt;
        const Eigen::SparseMatrix<double> kcol = space.stiffness_interior().backing();
        kllt.compute(kcol);
        if (kllt.info() != Eigen::Success)
            throw NumericalError("linf_stability_scan: stiffness factorization failed");

        double best = 0.0;
        for (int p = 0; p < n_probes; ++p) {
            const PlaneWaveProbe probe(seed, p, wavenumber_scale);
            const FemFunction f = space.interpolate([&](Vec2 x) { return probe(x); }, false);
            const double f_l2 = std::sqrt(space.mass().quad(f.coeffs, f.coeffs));
            const Eigen::VectorXd rhs = space.restrict_interior(space.mass().multiply(f.coeffs));
            const Eigen::VectorXd u = kllt.solve(rhs);
            best = std::max(best, u.cwiseAbs().maxCoeff() / f_l2);
        }
        rep.constants.push_back(best);
    }
    rep.max_constant = *std::max_element(rep.constants.begin(), rep.constants.end());
    rep.min_constant = *std::min_element(rep.constants.begin(), rep.constants.end());
    rep.spread = rep.max_constant / rep.min_constant;
    return rep;
}

PoincareReport poincare_verify(const ModalBasis& basis, int n_random, std::uint64_t seed) {
    if (n_random < 1) throw ValidationError("poincare_verify: n_random must be >= 1");
    PoincareReport rep;
    rep.constant = poincare_constant(basis);
    rep.n_random = n_random;
    Rng rng(seed);
    double worst = std::numeric_limits<double>::max();
    const auto& mass = basis.space().mass();
    const auto& stiffness = basis.space().stiffness();
    for (int i = 0; i < n_random; ++i) {
        Eigen::VectorXd coeff(basis.count());
        for (int k = 0; k < basis.count(); ++k) coeff[k] = rng.normal();
        const Eigen::VectorXd u = basis.reconstruct(coeff);
        const double l2 = std::sqrt(mass.quad(u, u));
        const double h1 = std::sqrt(stiffness.quad(u, u));
        worst = std::min(worst, rep.constant * h1 - l2);
    }
    rep.worst_slack = worst;
    rep.all_ok = worst >= -1e-10;
    return rep;
}

} // namespace snowwave
