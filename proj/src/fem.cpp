#include "snowwave/fem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "snowwave/errors.hpp"
#include "snowwave/textio.hpp"

namespace snowwave {

namespace {

// 3-point edge-midpoint rule, exact to degree 2. Barycentric coordinates.
constexpr double kMid[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};

// 6-point Dunavant rule, exact to degree 4.
struct QuadPoint {
    double l0, l1, l2, w;
};
constexpr QuadPoint kDeg4[6] = {
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
};

} // namespace

double SparseSymMatrix::sum() const {
    double s = 0.0;
    for (int k = 0; k < m_.outerSize(); ++k)
        for (Backing::InnerIterator it(m_, k); it; ++it) s += it.value();
    return s;
}

double SparseSymMatrix::max_symmetry_defect() const {
    const Backing t = Backing(m_.transpose());
    double scale = 0.0;
    for (int k = 0; k < m_.outerSize(); ++k)
        for (Backing::InnerIterator it(m_, k); it; ++it) scale = std::max(scale, std::abs(it.value()));
    const Backing diff = m_ - t;
    double defect = 0.0;
    for (int k = 0; k < diff.outerSize(); ++k)
        for (Backing::InnerIterator it(diff, k); it; ++it) defect = std::max(defect, std::abs(it.value()));
    return scale > 0.0 ? defect / scale : 0.0;
}

void SparseSymMatrix::write_coordinate(std::ostream& os) const {
    // row-major backing iterates rows in order, columns sorted within rows
    for (int k = 0; k < m_.outerSize(); ++k)
        for (Backing::InnerIterator it(m_, k); it; ++it)
            os << it.row() << ' ' << it.col() << ' ' << format_double(it.value()) << '\n';
}

SparseSymMatrix assemble_mass(const Mesh& m) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(m.n_triangles() * 9);
    for (std::size_t t = 0; t < m.n_triangles(); ++t) {
        const auto& tr = m.triangles()[t];
        const double area = m.triangle_area(t);
        const double off = area / 12.0;
        const double diag = area / 6.0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trips.emplace_back(tr[static_cast<std::size_t>(i)], tr[static_cast<std::size_t>(j)],
                                   i == j ? diag : off);
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> mat(static_cast<int>(m.n_vertices()),
                                                     static_cast<int>(m.n_vertices()));
    mat.setFromTriplets(trips.begin(), trips.end());
    return SparseSymMatrix(std::move(mat));
}

SparseSymMatrix assemble_stiffness(const Mesh& m) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(m.n_triangles() * 9);
    for (std::size_t t = 0; t < m.n_triangles(); ++t) {
        const auto& tr = m.triangles()[t];
        const Vec2 p[3] = {m.vertices()[static_cast<std::size_t>(tr[0])],
                           m.vertices()[static_cast<std::size_t>(tr[1])],
                           m.vertices()[static_cast<std::size_t>(tr[2])]};
        const double area = m.triangle_area(t);
        Vec2 grad[3];
        for (int i = 0; i < 3; ++i) {
            const Vec2 e = p[(i + 1) % 3] - p[(i + 2) % 3];
            grad[i] = {e.y / (2.0 * area), -e.x / (2.0 * area)};
        }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trips.emplace_back(tr[static_cast<std::size_t>(i)], tr[static_cast<std::size_t>(j)],
                                   area * dot(grad[i], grad[j]));
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> mat(static_cast<int>(m.n_vertices()),
                                                     static_cast<int>(m.n_vertices()));
    mat.setFromTriplets(trips.begin(), trips.end());
    return SparseSymMatrix(std::move(mat));
}

std::pair<SparseSymMatrix, InteriorMap> apply_dirichlet(const SparseSymMatrix& mat, const Mesh& m) {
    InteriorMap map;
    map.full_to_interior.assign(m.n_vertices(), -1);
    for (std::size_t i = 0; i < m.n_vertices(); ++i) {
        if (!m.boundary_flags()[i]) {
            map.full_to_interior[i] = static_cast<int>(map.interior_to_full.size());
            map.interior_to_full.push_back(static_cast<int>(i));
        }
    }
    if (map.interior_to_full.empty())
        throw ValidationError("apply_dirichlet: no interior vertices (empty system)");

    std::vector<Eigen::Triplet<double>> trips;
    const auto& backing = mat.backing();
    for (int k = 0; k < backing.outerSize(); ++k) {
        for (SparseSymMatrix::Backing::InnerIterator it(backing, k); it; ++it) {
            const int ri = map.full_to_interior[static_cast<std::size_t>(it.row())];
            const int ci = map.full_to_interior[static_cast<std::size_t>(it.col())];
            if (ri >= 0 && ci >= 0) trips.emplace_back(ri, ci, it.value());
        }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> out(map.n_interior(), map.n_interior());
    out.setFromTriplets(trips.begin(), trips.end());
    return {SparseSymMatrix(std::move(out)), std::move(map)};
}

NormReport norms(const FemFunction& u, const SparseSymMatrix& mass,
                 const SparseSymMatrix& stiffness) {
    if (u.coeffs.size() != mass.dimension())
        throw ValidationError("norms: coefficient count does not match matrices");
    NormReport r;
    r.l2 = std::sqrt(std::max(0.0, mass.quad(u.coeffs, u.coeffs)));
    r.h1_semi = std::sqrt(std::max(0.0, stiffness.quad(u.coeffs, u.coeffs)));
    r.linf = u.coeffs.size() ? u.coeffs.cwiseAbs().maxCoeff() : 0.0;
    return r;
}

P1Space::P1Space(Mesh mesh) : mesh_(std::make_shared<Mesh>(std::move(mesh))) {
    mass_ = assemble_mass(*mesh_);
    stiffness_ = assemble_stiffness(*mesh_);
    auto [mi, map1] = apply_dirichlet(mass_, *mesh_);
    auto [ki, map2] = apply_dirichlet(stiffness_, *mesh_);
    mass_i_ = std::move(mi);
    stiffness_i_ = std::move(ki);
    map_ = std::move(map1);
    const Eigen::SparseMatrix<double> col = mass_.backing();
    mass_llt_.compute(col);
    if (mass_llt_.info() != Eigen::Success)
        throw NumericalError("P1Space: mass factorization failed");
}

FemFunction P1Space::zero_function(bool dirichlet_zero) const {
    return {mesh_, Eigen::VectorXd::Zero(static_cast<int>(mesh_->n_vertices())), dirichlet_zero};
}

FemFunction P1Space::interpolate(const std::function<double(Vec2)>& f, bool dirichlet_zero) const {
    FemFunction u = zero_function(dirichlet_zero);
    for (std::size_t i = 0; i < mesh_->n_vertices(); ++i) {
        if (dirichlet_zero && mesh_->boundary_flags()[i]) continue;
        u.coeffs[static_cast<int>(i)] = f(mesh_->vertices()[i]);
    }
    return u;
}

Eigen::VectorXd P1Space::load_vector(const std::function<double(Vec2)>& f) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<int>(mesh_->n_vertices()));
    for (std::size_t t = 0; t < mesh_->n_triangles(); ++t) {
        const auto& tr = mesh_->triangles()[t];
        const Vec2 p[3] = {mesh_->vertices()[static_cast<std::size_t>(tr[0])],
                           mesh_->vertices()[static_cast<std::size_t>(tr[1])],
                           mesh_->vertices()[static_cast<std::size_t>(tr[2])]};
        const double w = mesh_->triangle_area(t) / 3.0;
        for (const auto& q : kMid) {
            const Vec2 x = q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
            const double fx = f(x);
            for (int i = 0; i < 3; ++i) b[tr[static_cast<std::size_t>(i)]] += w * fx * q[i];
        }
    }
    return b;
}

Eigen::VectorXd P1Space::product_load(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<int>(mesh_->n_vertices()));
    for (std::size_t t = 0; t < mesh_->n_triangles(); ++t) {
        const auto& tr = mesh_->triangles()[t];
        const double w = mesh_->triangle_area(t) / 3.0;
        const double av[3] = {a[tr[0]], a[tr[1]], a[tr[2]]};
        const double bv[3] = {b[tr[0]], b[tr[1]], b[tr[2]]};
        for (const auto& q : kMid) {
            const double aq = q[0] * av[0] + q[1] * av[1] + q[2] * av[2];
            const double bq = q[0] * bv[0] + q[1] * bv[1] + q[2] * bv[2];
            const double f = aq * bq;
            for (int i = 0; i < 3; ++i) out[tr[static_cast<std::size_t>(i)]] += w * f * q[i];
        }
    }
    return out;
}

double P1Space::product_l2_sq(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    double total = 0.0;
    for (std::size_t t = 0; t < mesh_->n_triangles(); ++t) {
        const auto& tr = mesh_->triangles()[t];
        const double area = mesh_->triangle_area(t);
        const double av[3] = {a[tr[0]], a[tr[1]], a[tr[2]]};
        const double bv[3] = {b[tr[0]], b[tr[1]], b[tr[2]]};
        double acc = 0.0;
        for (const auto& q : kDeg4) {
            const double aq = q.l0 * av[0] + q.l1 * av[1] + q.l2 * av[2];
            const double bq = q.l0 * bv[0] + q.l1 * bv[1] + q.l2 * bv[2];
            acc += q.w * aq * bq * aq * bq;
        }
        total += area * acc;
    }
    return total;
}

FemFunction P1Space::l2_project_load(const Eigen::VectorXd& load) const {
    Eigen::VectorXd p = mass_llt_.solve(load);
    const double rhs_norm = load.norm();
    if (rhs_norm > 0.0) {
        const double res = (mass_.multiply(p) - load).norm() / rhs_norm;
        if (res > 1e-12)
            throw NumericalError("l2_project: mass solve residual " + format_double(res));
    }
    return {mesh_, std::move(p), false};
}

FemFunction P1Space::l2_project(const std::function<double(Vec2)>& f) const {
    return l2_project_load(load_vector(f));
}

Eigen::VectorXd P1Space::restrict_interior(const Eigen::VectorXd& full) const {
    Eigen::VectorXd out(map_.n_interior());
    for (int i = 0; i < map_.n_interior(); ++i)
        out[i] = full[map_.interior_to_full[static_cast<std::size_t>(i)]];
    return out;
}

Eigen::VectorXd P1Space::embed_interior(const Eigen::VectorXd& interior) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<int>(mesh_->n_vertices()));
    for (int i = 0; i < map_.n_interior(); ++i)
        out[map_.interior_to_full[static_cast<std::size_t>(i)]] = interior[i];
    return out;
}

FemFunction extend_by_zero(const FemFunction& u, const std::shared_ptr<const Mesh>& ambient) {
    if (!u.mesh) throw ValidationError("extend_by_zero: function has no mesh");
    for (const Vec2& v : u.mesh->vertices())
        if (!ambient->locate(v))
            throw ValidationError("extend_by_zero: domain mesh is not inside the ambient mesh");
    const std::vector<double> nodal(u.coeffs.data(), u.coeffs.data() + u.coeffs.size());
    FemFunction out{ambient, Eigen::VectorXd::Zero(static_cast<int>(ambient->n_vertices())), false};
    for (std::size_t i = 0; i < ambient->n_vertices(); ++i)
        out.coeffs[static_cast<int>(i)] = u.mesh->interpolate_or_zero(nodal, ambient->vertices()[i]);
    return out;
}

} // namespace snowwave
