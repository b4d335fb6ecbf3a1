#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <memory>

#include "snowwave/fem.hpp"

namespace snowwave {

struct SpectralOptions {
    // Dense generalized eigensolve below this many interior dofs, shift-invert
    // subspace iteration above it.
    int dense_threshold = 3000;
    int max_iterations = 400;
    double residual_tol = 1e-10; // ||K w - lambda M w|| / ||K w||
    std::uint64_t seed = 0x5eed5eedULL;
};

/// L2-orthonormal Dirichlet-Laplacian eigenbasis: K w_k = lambda_k M w_k,
/// lambda ascending, modes stored as full nodal vectors (zero on boundary).
class ModalBasis {
public:
    ModalBasis(std::shared_ptr<const P1Space> space, Eigen::VectorXd lambdas,
               Eigen::MatrixXd modes);

    const P1Space& space() const { return *space_; }
    std::shared_ptr<const P1Space> space_ptr() const { return space_; }
    int count() const { return static_cast<int>(lambdas_.size()); }
    double lambda(int k) const { return lambdas_[k]; }
    const Eigen::VectorXd& lambdas() const { return lambdas_; }
    /// V x K nodal mode matrix.
    const Eigen::MatrixXd& modes() const { return modes_; }
    /// M * modes, V x K: modal projection of nodal u is projector().transpose() * u.
    const Eigen::MatrixXd& projector() const { return proj_; }

    FemFunction mode(int k) const;
    Eigen::VectorXd project(const Eigen::VectorXd& nodal) const {
        return proj_.transpose() * nodal;
    }
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& modal) const { return modes_ * modal; }

    /// max |(w_j, w_k)_M - delta_jk|
    double gram_defect() const;
    /// max_k ||K w_k - lambda_k M w_k|| / ||K w_k||
    double residual_defect() const;

private:
    std::shared_ptr<const P1Space> space_;
    Eigen::VectorXd lambdas_;
    Eigen::MatrixXd modes_;
    Eigen::MatrixXd proj_;
};

/// Smallest n_modes eigenpairs of the boundary-eliminated problem.
/// Deterministic: fixed sign convention (first nonzero nodal component
/// positive) and a seeded iteration start.
ModalBasis dirichlet_eigenpairs(const std::shared_ptr<const P1Space>& space, int n_modes,
                                const SpectralOptions& opts = {});

/// Optimal discrete Poincare constant 1/sqrt(lambda_1).
double poincare_constant(const ModalBasis& basis);

/// One file per mode plus an index "k lambda".
void export_basis(const ModalBasis& basis, const std::string& directory);

} // namespace snowwave
