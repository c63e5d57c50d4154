#include <doctest.h>

#include <cmath>
#include <random>

#include "membrana/eigensolve.hpp"
#include "membrana/oracles.hpp"

using namespace membrana;

namespace {

Eigen::MatrixXd dense(const SparseOperator& op) { return Eigen::MatrixXd(op.matrix); }

CoefficientField zero(const Mesh& m, Region r) { return CoefficientField::constant(m, r, 0.0); }

}  // namespace

TEST_CASE("Neumann Laplacian has zero row sums") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 48);
  for (Region r : {Region::Omega1, Region::Omega2, Region::Omega}) {
    const auto op = assemble_scalar(m, r, 1.0, zero(m, r), BoundarySpec::neumann(r));
    const Vector rs = op.matrix * Vector::Ones(op.dim());
    CHECK(rs.cwiseAbs().maxCoeff() < 1e-9);
  }
  const auto op = assemble_interface(m, 1.0, zero(m, Region::Omega1), zero(m, Region::Omega2));
  CHECK((op.matrix * Vector::Ones(op.dim())).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("membrane rows with unequal permeabilities are not symmetric") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 24);
  const auto op = assemble_interface(m, 1.0, zero(m, Region::Omega1), zero(m, Region::Omega2));
  CHECK_FALSE(op.symmetric);
  const auto op_s = assemble_scalar(m, Region::Omega, 1.0, zero(m, Region::Omega),
                                    BoundarySpec::neumann(Region::Omega));
  CHECK(op_s.dim() == 25);
}

TEST_CASE("adding a constant to the potential shifts the diagonal") {
  const Mesh m = build_mesh(Geometry1D{0.0, 1.0, 0.2, 0.7, 1.5, 0.5}, 30);
  const double t = 2.75;
  const auto a = assemble_interface(m, 1.3, zero(m, Region::Omega1), zero(m, Region::Omega2));
  const auto b = assemble_interface(m, 1.3, CoefficientField::constant(m, Region::Omega1, t),
                                    CoefficientField::constant(m, Region::Omega2, t));
  const Eigen::MatrixXd diff = dense(b) - dense(a) - t * Eigen::MatrixXd::Identity(a.dim(), a.dim());
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("with equal permeabilities the jump terms cancel in the sum of membrane rows") {
  Geometry1D g = Geometry1D::canonical();
  g.gamma1 = g.gamma2 = 1.7;
  const Mesh m = build_mesh(g, 24);
  const auto op = assemble_interface(m, 1.0, zero(m, Region::Omega1), zero(m, Region::Omega2));
  const Eigen::MatrixXd a = dense(op);
  const auto n1 = static_cast<Eigen::Index>(m.size(Region::Omega1));
  const auto comps = m.components(Region::Omega2);
  const Eigen::Index u1a = 0, u2a = n1 + static_cast<Eigen::Index>(comps[0].end) - 1;
  // Rows scaled back to fluxes (multiply by h/2d); the jump coefficients are +-gamma.
  const double h1 = m.segments()[1].h, h2 = m.segments()[0].h;
  const Eigen::RowVectorXd sum = a.row(u1a) * h1 / 2.0 + a.row(u2a) * h2 / 2.0;
  const double jump_u1 = sum[u1a] - (a(u1a, u1a + 1) * -1.0) * h1 / 2.0;
  const double jump_u2 = sum[u2a] - (a(u2a, u2a - 1) * -1.0) * h2 / 2.0;
  CHECK(jump_u1 == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
  CHECK(jump_u2 == doctest::Approx(0.0).epsilon(1e-12).scale(1.0));
}

TEST_CASE("operator is second-order consistent at interior nodes") {
  const Mesh m1 = build_mesh(Geometry1D::canonical(), 32);
  const Mesh m2 = build_mesh(Geometry1D::canonical(), 64);
  auto err = [](const Mesh& m) {
    const auto x = m.coords(Region::Omega);
    Vector f(x.size()), c(x.size()), expect(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      f[i] = std::sin(3.0 * x[i]);
      c[i] = 1.0 + x[i];
      expect[i] = 2.0 * 9.0 * std::sin(3.0 * x[i]) + c[i] * f[i];
    }
    const auto op = assemble_scalar(m, Region::Omega, 2.0, CoefficientField::from(Region::Omega, c),
                                    BoundarySpec::neumann(Region::Omega));
    const Vector r = apply(op, f) - expect;
    return r.segment(1, r.size() - 2).cwiseAbs().maxCoeff();
  };
  const double ratio = err(m1) / err(m2);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("apply matches the dense product and checks dimensions") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 40);
  const auto op = assemble_interface(m, 1.0, CoefficientField::constant(m, Region::Omega1, 0.3),
                                     CoefficientField::constant(m, Region::Omega2, -1.0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector x(op.dim());
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
  const Vector y = apply(op, x);
  const Vector yd = dense(op) * x;
  CHECK((y - yd).cwiseAbs().maxCoeff() <= 1e-13 * yd.cwiseAbs().maxCoeff());
  CHECK(apply(op, Vector::Zero(op.dim())).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(apply(op, Vector::Zero(3)), ValidationError);

  // Dirichlet rows are identity rows.
  const auto dop = assemble_scalar(m, Region::Omega1, 1.0, zero(m, Region::Omega1),
                                   BoundarySpec::dirichlet_on_interface(Region::Omega1, 4.0));
  const Vector z = apply(dop, x.head(dop.dim()));
  CHECK(z[0] == x[0]);
  CHECK(z[dop.dim() - 1] == x[dop.dim() - 1]);
}

TEST_CASE("invalid inputs are rejected") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 24);
  BoundarySpec bc = BoundarySpec::neumann(Region::Omega1);
  bc.endpoints[0] = EndpointCondition::membrane();
  CHECK_THROWS_AS(assemble_scalar(m, Region::Omega1, 1.0, zero(m, Region::Omega1), bc), ValidationError);
  CHECK_THROWS_AS(assemble_scalar(m, Region::Omega1, 1.0, CoefficientField::from(Region::Omega1, Vector::Zero(3)),
                                  BoundarySpec::neumann(Region::Omega1)),
                  ValidationError);
  CHECK_THROWS_AS(assemble_interface(m, 1.0, zero(m, Region::Omega2), zero(m, Region::Omega2)),
                  ValidationError);
  BoundarySpec bad = BoundarySpec::neumann(Region::Omega);
  bad.endpoints[0] = EndpointCondition::membrane();
  CHECK_THROWS_AS(bad.check(Region::Omega), ValidationError);
}

TEST_CASE("interface blend reproduces constants and region values") {
  const Mesh m = build_mesh(Geometry1D{0.0, 1.0, 0.3, 0.7, 1.0, 1.0}, 20);
  const Vector on1 = Vector::Constant(static_cast<Eigen::Index>(m.size(Region::Omega1)), 2.0);
  const Vector on2 = Vector::Constant(static_cast<Eigen::Index>(m.size(Region::Omega2)), 2.0);
  CHECK((combine_on_omega(m, on1, on2).array() - 2.0).abs().maxCoeff() < 1e-15);
  const Vector v = combine_on_omega(m, on1, Vector::Zero(on2.size()));
  const auto [w1, w2] = interface_blend(m, m.omega_node_a());
  CHECK(w1 + w2 == doctest::Approx(1.0));
  CHECK(v[m.omega_node_a()] == doctest::Approx(2.0 * w1));
  CHECK(v[0] == 0.0);
  CHECK(restrict_to(m, Region::Omega1, v).minCoeff() >= 2.0 * w1 - 1e-15);
}
