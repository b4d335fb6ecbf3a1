#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "snowwave/errors.hpp"
#include "snowwave/fem.hpp"
#include "snowwave/rng.hpp"
#include "snowwave/spectral.hpp"

using namespace snowwave;

namespace {

Mesh reference_triangle_mesh() {
    return Mesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {1, 1, 1});
}

std::shared_ptr<P1Space> square_space(double h) {
    return std::make_shared<P1Space>(triangulate(Polygon::rectangle({0, 0}, {1, 1}), h));
}

} // namespace

TEST_CASE("mass matrix of the reference triangle") {
    const Mesh m = reference_triangle_mesh();
    const SparseSymMatrix mass = assemble_mass(m);
    // exact integration of barycentric products: (1/24) [[2,1,1],[1,2,1],[1,1,2]]
    const Eigen::MatrixXd dense = Eigen::MatrixXd(mass.backing());
    Eigen::Matrix3d expect;
    expect << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    expect /= 24.0;
    CHECK((dense - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("stiffness matrix of the unit right triangle") {
    const Mesh m = reference_triangle_mesh();
    const SparseSymMatrix k = assemble_stiffness(m);
    const Eigen::MatrixXd dense = Eigen::MatrixXd(k.backing());
    Eigen::Matrix3d expect;
    expect << 2, -1, -1, -1, 1, 0, -1, 0, 1;
    expect *= 0.5;
    CHECK((dense - expect).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("assembled matrices: sums, symmetry, kernel, PSD") {
    const Polygon flake = koch_prefractal({1.0, 1, {0, 0}});
    const Mesh m = triangulate(flake, 0.15);
    const SparseSymMatrix mass = assemble_mass(m);
    const SparseSymMatrix k = assemble_stiffness(m);

    CHECK(mass.sum() == doctest::Approx(flake.area()).epsilon(1e-12)); // 1' M 1 = area
    CHECK(mass.max_symmetry_defect() == doctest::Approx(0.0));
    CHECK(k.max_symmetry_defect() < 1e-14);

    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(k.dimension());
    CHECK(k.multiply(ones).cwiseAbs().maxCoeff() < 1e-12); // constants in the kernel

    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd u(k.dimension());
        for (int i = 0; i < u.size(); ++i) u[i] = rng.normal();
        CHECK(k.quad(u, u) >= -1e-12);
        CHECK(mass.quad(u, u) > 0.0);
    }
}

TEST_CASE("apply_dirichlet dimensions and positive definiteness") {
    const auto space = square_space(0.2);
    const Mesh& m = space->mesh();
    int interior = 0;
    for (auto f : m.boundary_flags())
        if (!f) ++interior;
    CHECK(space->n_interior() == interior);
    CHECK(space->stiffness_interior().dimension() == interior);

    // eliminated stiffness is positive definite (dense eigensolve oracle)
    const Eigen::MatrixXd kd = Eigen::MatrixXd(space->stiffness_interior().backing());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kd);
    CHECK(es.eigenvalues().minCoeff() > 0.0);

    // re-embedding then restricting is the identity
    Rng rng(3);
    Eigen::VectorXd v(interior);
    for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
    CHECK((space->restrict_interior(space->embed_interior(v)) - v).cwiseAbs().maxCoeff() == 0.0);

    // all-boundary mesh: empty-system error
    const Mesh tiny = reference_triangle_mesh();
    CHECK_THROWS_AS(apply_dirichlet(assemble_mass(tiny), tiny), ValidationError);
}

TEST_CASE("norms of the sine interpolant approach the analytic values") {
    const auto space = square_space(0.02);
    const FemFunction u = space->interpolate(
        [](Vec2 p) { return std::sin(M_PI * p.x) * std::sin(M_PI * p.y); }, true);
    const NormReport n = space->norms(u);
    CHECK(n.l2 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(n.h1_semi == doctest::Approx(M_PI / std::sqrt(2.0)).epsilon(0.01));
    CHECK(n.linf == doctest::Approx(1.0).epsilon(0.01));

    const FemFunction z = space->zero_function();
    const NormReport zn = space->norms(z);
    CHECK(zn.l2 == 0.0);
    CHECK(zn.h1_semi == 0.0);
    CHECK(zn.linf == 0.0);
}

TEST_CASE("l2_project: identity on P1, constants, O(h^2) for x^2") {
    const auto space = square_space(0.1);
    // projection of a P1 function is itself
    const FemFunction p1 = space->interpolate([](Vec2 p) { return 2.0 * p.x - 3.0 * p.y; }, false);
    const FemFunction proj = space->l2_project([](Vec2 p) { return 2.0 * p.x - 3.0 * p.y; });
    CHECK((proj.coeffs - p1.coeffs).cwiseAbs().maxCoeff() < 1e-11);

    const FemFunction one = space->l2_project([](Vec2) { return 1.0; });
    CHECK((one.coeffs - Eigen::VectorXd::Ones(one.coeffs.size())).cwiseAbs().maxCoeff() < 1e-10);

    // O(h^2) convergence for x^2 under refinement
    double prev_err = -1.0;
    for (double h : {0.2, 0.1, 0.05}) {
        const auto s = square_space(h);
        const FemFunction p = s->l2_project([](Vec2 q) { return q.x * q.x; });
        double err = 0.0;
        for (std::size_t i = 0; i < s->mesh().n_vertices(); ++i) {
            const Vec2 q = s->mesh().vertices()[i];
            err = std::max(err, std::abs(p.coeffs[static_cast<int>(i)] - q.x * q.x));
        }
        if (prev_err > 0.0) CHECK(err < 0.6 * prev_err);
        prev_err = err;
    }
}

TEST_CASE("galerkin orthogonality of l2_project") {
    const auto space = square_space(0.15);
    const auto f = [](Vec2 p) { return std::cos(3.0 * p.x) * p.y + 0.2 * p.x * p.x; };
    const Eigen::VectorXd load = space->load_vector(f);
    const FemFunction p = space->l2_project_load(load);
    // (p - f, v)_quadrature = 0 for every P1 v: residual of the mass system
    const Eigen::VectorXd defect = space->mass().multiply(p.coeffs) - load;
    CHECK(defect.cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("discrete Poincare holds with equality for the first eigenvector") {
    const auto space = square_space(0.1);
    const ModalBasis basis = dirichlet_eigenpairs(space, 6);
    const double c = poincare_constant(basis);
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd coeff(basis.count());
        for (int k = 0; k < basis.count(); ++k) coeff[k] = rng.normal();
        FemFunction u{space->mesh_ptr(), basis.reconstruct(coeff), true};
        const NormReport n = space->norms(u);
        CHECK(n.l2 <= c * n.h1_semi * (1.0 + 1e-10));
    }
    const NormReport first = space->norms(basis.mode(0));
    CHECK(first.l2 / first.h1_semi == doctest::Approx(c).epsilon(1e-10));
}

TEST_CASE("extend_by_zero: zeros, locality, stability under refinement") {
    const Polygon inner_poly = koch_prefractal({1.0, 1, {0, 0}});
    const Polygon outer_poly = Polygon::rectangle({-1.2, -1.2}, {1.2, 1.2});
    const auto inner = std::make_shared<P1Space>(triangulate(inner_poly, 0.1));
    const auto outer = std::make_shared<P1Space>(triangulate(outer_poly, 0.12));

    const FemFunction zero = inner->zero_function();
    const FemFunction ez = extend_by_zero(zero, outer->mesh_ptr());
    CHECK(ez.coeffs.cwiseAbs().maxCoeff() == 0.0);

    const FemFunction u = inner->interpolate(
        [](Vec2 p) { return std::cos(2.0 * p.x) * std::sin(1.0 + p.y); }, true);
    const FemFunction eu = extend_by_zero(u, outer->mesh_ptr());

    const std::vector<double> nodal(u.coeffs.data(), u.coeffs.data() + u.coeffs.size());
    for (std::size_t i = 0; i < outer->mesh().n_vertices(); ++i) {
        const Vec2 p = outer->mesh().vertices()[i];
        if (!inner->mesh().locate(p)) {
            CHECK(eu.coeffs[static_cast<int>(i)] == 0.0);
        } else {
            CHECK(eu.coeffs[static_cast<int>(i)] ==
                  doctest::Approx(inner->mesh().interpolate_or_zero(nodal, p)).epsilon(1e-14));
        }
    }

    // interpolation is not an isometry; l2 of the extension stays within (1 + C h)
    const NormReport inner_n = inner->norms(u);
    const NormReport outer_n = outer->norms(eu);
    CHECK(outer_n.l2 <= inner_n.l2 * (1.0 + 5.0 * outer->mesh().h()));

    // containment violation: extending a function from the big box onto the flake
    const FemFunction big = outer->interpolate([](Vec2) { return 1.0; }, false);
    CHECK_THROWS_AS(extend_by_zero(big, inner->mesh_ptr()), ValidationError);
}

TEST_CASE("matrix coordinate export is sorted and deterministic") {
    const auto space = square_space(0.35);
    std::ostringstream a, b;
    space->stiffness().write_coordinate(a);
    space->stiffness().write_coordinate(b);
    CHECK(a.str() == b.str());
    long prev_i = -1, prev_j = -1;
    std::istringstream is(a.str());
    long i = 0, j = 0;
    double v = 0.0;
    while (is >> i >> j >> v) {
        CHECK((i > prev_i || (i == prev_i && j > prev_j)));
        prev_i = i;
        prev_j = j;
    }
}
