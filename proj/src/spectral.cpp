#include "snowwave/spectral.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "snowwave/errors.hpp"
#include "snowwave/rng.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

namespace {

void fix_signs(Eigen::MatrixXd& modes) {
    for (int k = 0; k < modes.cols(); ++k) {
        const double scale = modes.col(k).cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (int i = 0; i < modes.rows(); ++i) {
            const double v = modes(i, k);
            if (std::abs(v) > 1e-12 * scale) {
                if (v < 0.0) modes.col(k) *= -1.0;
                break;
            }
        }
    }
}

// Dense path: exact generalized symmetric eigensolve on the eliminated system.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> solve_dense(const SparseSymMatrix& K,
                                                        const SparseSymMatrix& M, int n_modes) {
    const Eigen::MatrixXd Kd = Eigen::MatrixXd(K.backing());
    const Eigen::MatrixXd Md = Eigen::MatrixXd(M.backing());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(Kd, Md,
                                                                     Eigen::ComputeEigenvectors |
                                                                         Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success)
        throw NumericalError("dirichlet_eigenpairs: dense eigensolve failed");
    return {solver.eigenvalues().head(n_modes), solver.eigenvectors().leftCols(n_modes)};
}

// Shift-invert subspace iteration with Rayleigh-Ritz, sigma = 0 (K is SPD
// after elimination, the smallest eigenvalues are wanted).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> solve_iterative(const SparseSymMatrix& K,
                                                            const SparseSymMatrix& M, int n_modes,
                                                            const SpectralOptions& opts) {
    const int n = K.dimension();
    const int block = std::min(n, n_modes + std::max(10, n_modes / 2));

    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> kllt;
    const Eigen::SparseMatrix<double> kcol = K.backing();
    kllt.compute(kcol);
    if (kllt.info() != Eigen::Success)
        throw NumericalError("dirichlet_eigenpairs: stiffness factorization failed");

    Rng rng(opts.seed);
    Eigen::MatrixXd x(n, block);
    for (int j = 0; j < block; ++j)
        for (int i = 0; i < n; ++i) x(i, j) = rng.normal();

    Eigen::VectorXd lambdas;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        // power step on K^{-1} M
        Eigen::MatrixXd y(n, block);
        for (int j = 0; j < block; ++j) y.col(j) = kllt.solve(M.multiply(x.col(j)));
        // M-orthonormalize
        const Eigen::MatrixXd my = M.backing() * y;
        const Eigen::MatrixXd gram = y.transpose() * my;
        Eigen::LLT<Eigen::MatrixXd> chol(gram);
        if (chol.info() != Eigen::Success) {
            // restart the collapsed directions deterministically
            for (int j = 0; j < block; ++j)
                for (int i = 0; i < n; ++i) y(i, j) = rng.normal();
            x = y;
            continue;
        }
        // y <- y * U^{-1} so that y' M y = I
        const Eigen::MatrixXd u_inv =
            chol.matrixU().solve(Eigen::MatrixXd::Identity(block, block));
        y = y * u_inv;
        // Rayleigh-Ritz on the M-orthonormal block
        Eigen::MatrixXd ky(n, block);
        for (int j = 0; j < block; ++j) ky.col(j) = K.multiply(y.col(j));
        const Eigen::MatrixXd a = y.transpose() * ky;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(0.5 * (a + a.transpose()));
        x = y * small.eigenvectors();
        lambdas = small.eigenvalues();

        // convergence of the wanted head
        double worst = 0.0;
        for (int k = 0; k < n_modes; ++k) {
            const Eigen::VectorXd kx = K.multiply(x.col(k));
            const Eigen::VectorXd res = kx - lambdas[k] * M.multiply(x.col(k));
            worst = std::max(worst, res.norm() / kx.norm());
        }
        if (worst < opts.residual_tol)
            return {lambdas.head(n_modes), x.leftCols(n_modes)};
    }
    throw NumericalError("dirichlet_eigenpairs: subspace iteration did not converge within " +
                         std::to_string(opts.max_iterations) + " iterations");
}

} // namespace

ModalBasis::ModalBasis(std::shared_ptr<const P1Space> space, Eigen::VectorXd lambdas,
                       Eigen::MatrixXd modes)
    : space_(std::move(space)), lambdas_(std::move(lambdas)), modes_(std::move(modes)) {
    if (lambdas_.size() == 0) throw ValidationError("modal basis is empty");
    if (modes_.cols() != lambdas_.size() || modes_.rows() != space_->n_vertices())
        throw ValidationError("modal basis shape mismatch");
    for (int k = 0; k + 1 < lambdas_.size(); ++k)
        if (lambdas_[k] > lambdas_[k + 1])
            throw ValidationError("modal basis eigenvalues are not ascending");
    if (lambdas_[0] <= 0.0) throw NumericalError("modal basis has a non-positive eigenvalue");
    proj_ = space_->mass().backing() * modes_;
}

FemFunction ModalBasis::mode(int k) const {
    return {space_->mesh_ptr(), modes_.col(k), true};
}

double ModalBasis::gram_defect() const {
    const Eigen::MatrixXd gram = modes_.transpose() * proj_;
    return (gram - Eigen::MatrixXd::Identity(count(), count())).cwiseAbs().maxCoeff();
}

double ModalBasis::residual_defect() const {
    // the eigenrelation lives on the boundary-eliminated system
    double worst = 0.0;
    for (int k = 0; k < count(); ++k) {
        const Eigen::VectorXd wi = space_->restrict_interior(modes_.col(k));
        const Eigen::VectorXd kw = space_->stiffness_interior().multiply(wi);
        const Eigen::VectorXd res = kw - lambdas_[k] * space_->mass_interior().multiply(wi);
        worst = std::max(worst, res.norm() / kw.norm());
    }
    return worst;
}

ModalBasis dirichlet_eigenpairs(const std::shared_ptr<const P1Space>& space, int n_modes,
                                const SpectralOptions& opts) {
    if (n_modes < 1) throw ValidationError("dirichlet_eigenpairs: n_modes must be positive");
    const int n = space->n_interior();
    if (n_modes > n)
        throw ValidationError("dirichlet_eigenpairs: n_modes (" + std::to_string(n_modes) +
                              ") exceeds interior dimension (" + std::to_string(n) + ")");
    const auto& K = space->stiffness_interior();
    const auto& M = space->mass_interior();
    auto [lambdas, vecs] = n <= opts.dense_threshold ? solve_dense(K, M, n_modes)
                                                     : solve_iterative(K, M, n_modes, opts);
    // exact unit M-norm, then the sign convention
    for (int k = 0; k < n_modes; ++k) {
        const double mn = std::sqrt(M.quad(vecs.col(k), vecs.col(k)));
        vecs.col(k) /= mn;
    }
    Eigen::MatrixXd full(space->n_vertices(), n_modes);
    for (int k = 0; k < n_modes; ++k) full.col(k) = space->embed_interior(vecs.col(k));
    fix_signs(full);
    return ModalBasis(space, std::move(lambdas), std::move(full));
}

double poincare_constant(const ModalBasis& basis) { return 1.0 / std::sqrt(basis.lambda(0)); }

void export_basis(const ModalBasis& basis, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    std::ofstream index(fs::path(directory) / "index.txt");
    for (int k = 0; k < basis.count(); ++k) {
        index << k << ' ' << format_double(basis.lambda(k)) << '\n';
        std::ofstream mode(fs::path(directory) / ("mode_" + std::to_string(k) + ".txt"));
        const Eigen::VectorXd& w = basis.modes().col(k);
        for (int i = 0; i < w.size(); ++i) mode << format_double(w[i]) << '\n';
    }
}

} // namespace snowwave
