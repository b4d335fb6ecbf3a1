#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <iosfwd>
#include <memory>
#include <vector>

#include "snowwave/mesh.hpp"

namespace snowwave {

/// Symmetric sparse matrix in CSR layout (row-major Eigen backing).
class SparseSymMatrix {
public:
    using Backing = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    SparseSymMatrix() = default;
    explicit SparseSymMatrix(Backing m) : m_(std::move(m)) { m_.makeCompressed(); }

    int dimension() const { return static_cast<int>(m_.rows()); }
    const Backing& backing() const { return m_; }

    Eigen::VectorXd multiply(const Eigen::VectorXd& x) const { return m_ * x; }
    double quad(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
        return u.dot(m_ * v);
    }
    double sum() const;
    double max_symmetry_defect() const;

    /// Coordinate-format text "i j value", sorted by (i, j).
    void write_coordinate(std::ostream& os) const;

private:
    Backing m_;
};

/// P1 nodal function. dirichlet_zero means boundary coefficients are exactly 0.
struct FemFunction {
    std::shared_ptr<const Mesh> mesh;
    Eigen::VectorXd coeffs;
    bool dirichlet_zero = false;
};

struct NormReport {
    double l2 = 0.0;
    double h1_semi = 0.0;
    double linf = 0.0;
};

struct InteriorMap {
    std::vector<int> interior_to_full;
    std::vector<int> full_to_interior; // -1 at boundary vertices
    int n_interior() const { return static_cast<int>(interior_to_full.size()); }
};

SparseSymMatrix assemble_mass(const Mesh& m);
SparseSymMatrix assemble_stiffness(const Mesh& m);

/// Restrict to interior vertices (Dirichlet elimination). The map is returned
/// so coefficients can be re-embedded.
std::pair<SparseSymMatrix, InteriorMap> apply_dirichlet(const SparseSymMatrix& mat, const Mesh& m);

NormReport norms(const FemFunction& u, const SparseSymMatrix& mass,
                 const SparseSymMatrix& stiffness);

/// Per-mesh assembly context: matrices, interior maps, mass factorization.
/// Immutable after construction; solves are thread-safe.
class P1Space {
public:
    explicit P1Space(Mesh mesh);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    const SparseSymMatrix& mass() const { return mass_; }
    const SparseSymMatrix& stiffness() const { return stiffness_; }
    const SparseSymMatrix& mass_interior() const { return mass_i_; }
    const SparseSymMatrix& stiffness_interior() const { return stiffness_i_; }
    const InteriorMap& interior_map() const { return map_; }
    int n_vertices() const { return static_cast<int>(mesh_->n_vertices()); }
    int n_interior() const { return map_.n_interior(); }

    FemFunction zero_function(bool dirichlet_zero = true) const;
    FemFunction interpolate(const std::function<double(Vec2)>& f, bool dirichlet_zero) const;
    NormReport norms(const FemFunction& u) const { return snowwave::norms(u, mass_, stiffness_); }

    /// Load vector b_i = integral f phi_i with the 3-point order-2 rule.
    Eigen::VectorXd load_vector(const std::function<double(Vec2)>& f) const;
    /// Load vector of the product of two P1 functions (same rule).
    Eigen::VectorXd product_load(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
    /// Integral of (a*b)^2 with a degree-4 rule (exact for P1 inputs).
    double product_l2_sq(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// Solve M p = load; relative residual of the solve is checked to 1e-12.
    FemFunction l2_project_load(const Eigen::VectorXd& load) const;
    FemFunction l2_project(const std::function<double(Vec2)>& f) const;

    Eigen::VectorXd restrict_interior(const Eigen::VectorXd& full) const;
    Eigen::VectorXd embed_interior(const Eigen::VectorXd& interior) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    SparseSymMatrix mass_, stiffness_, mass_i_, stiffness_i_;
    InteriorMap map_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> mass_llt_;
};

/// Nodal values of u at ambient nodes inside u's mesh (via point location),
/// 0 outside. Throws ValidationError when u's mesh pokes out of the ambient.
FemFunction extend_by_zero(const FemFunction& u, const std::shared_ptr<const Mesh>& ambient);

} // namespace snowwave
