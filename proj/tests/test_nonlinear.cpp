#include <doctest.h>

#include <cmath>
#include <random>

#include "membrana/nonlinear.hpp"
#include "membrana/oracles.hpp"

using namespace membrana;

namespace {

CoefficientField zero(const Mesh& m, Region r) { return CoefficientField::constant(m, r, 0.0); }

ModelParams canonical_params() {
  ModelParams p;
  p.lambda1 = 3.0;
  p.lambda2 = 8.0;
  return p;
}

// mu at which (0, 0, mu) loses stability in the u-direction: Lambda1(-l1 + a1 mu, -l2 + a2 mu) = 0.
double mu_one(const Mesh& m, const ModelParams& p) {
  double lo = 0.0, hi = std::max(p.lambda1 / p.a1, p.lambda2 / p.a2) + 1.0;
  for (int k = 0; k < 60; ++k) {
    const double mid = 0.5 * (lo + hi);
    (lambda1(m, p.d, -p.lambda1 + p.a1 * mid, -p.lambda2 + p.a2 * mid).value < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

StateTriple random_positive_state(const Mesh& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 3.0);
  StateTriple s;
  s.u1.resize(static_cast<Eigen::Index>(m.size(Region::Omega1)));
  s.u2.resize(static_cast<Eigen::Index>(m.size(Region::Omega2)));
  s.v.resize(static_cast<Eigen::Index>(m.size(Region::Omega)));
  for (auto* f : {&s.u1, &s.u2, &s.v}) {
    for (Eigen::Index i = 0; i < f->size(); ++i) (*f)[i] = u(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("logistic: constant cases are exact") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  auto r = solve_logistic_scalar(m, Region::Omega, 2.0, zero(m, Region::Omega), 1.0,
                                 BoundarySpec::neumann(Region::Omega));
  REQUIRE(r.status == Existence::Positive);
  CHECK((r.field.array() - 2.0).abs().maxCoeff() < 1e-10);
  CHECK(r.residual < 1e-10);

  auto r2 = solve_logistic_scalar(m, Region::Omega, 3.0, CoefficientField::constant(m, Region::Omega, 1.0),
                                  2.0, BoundarySpec::neumann(Region::Omega));
  REQUIRE(r2.status == Existence::Positive);
  CHECK((r2.field.array() - 1.0).abs().maxCoeff() < 1e-10);
}

TEST_CASE("logistic: sandwich bounds for random potentials above the threshold") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  const auto x = m.coords(Region::Omega);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 20; ++k) {
    Vector c(x.size());
    const double amp = 4.0 * u(rng), freq = 1.0 + 6.0 * u(rng), off = 2.0 * u(rng) - 1.0;
    for (std::size_t i = 0; i < x.size(); ++i) c[i] = off + amp * std::sin(freq * x[i]);
    const auto cf = CoefficientField::from(Region::Omega, c);
    const double beta = 0.5 + u(rng);
    const BoundarySpec bc = (k % 2 == 0) ? BoundarySpec::neumann(Region::Omega)
                                         : BoundarySpec{{EndpointCondition::robin(1.0), EndpointCondition::dirichlet(0.0)}};
    const auto eig = sigma1(m, Region::Omega, 1.0, cf, bc);
    const double mu = eig.value + 0.1 + 5.0 * u(rng);
    const auto r = solve_logistic_scalar(m, Region::Omega, mu, cf, beta, bc);
    REQUIRE(r.status == Existence::Positive);
    CHECK(r.residual < 1e-10);
    const double upper = (mu - c.minCoeff()) / beta;
    const Vector lower = ((mu - eig.value) / (beta * eig.eigenfunction.maxCoeff())) * eig.eigenfunction;
    CHECK(r.field.maxCoeff() <= upper + 1e-9);
    CHECK((r.field - lower).minCoeff() >= -1e-9);
  }
}

TEST_CASE("logistic: no positive solution at or below the threshold") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto bc = BoundarySpec::robin_on_interface(m.geometry(), Region::Omega1);
  for (int k = 0; k < 20; ++k) {
    const auto cf = CoefficientField::constant(m, Region::Omega1, 3.0 * u(rng));
    const double s = sigma1(m, Region::Omega1, 1.0, cf, bc).value;
    const double mu = s - 1e-5 - 10.0 * u(rng);
    CHECK(solve_logistic_scalar(m, Region::Omega1, mu, cf, 1.0, bc).status == Existence::NoPositiveSolution);
  }
  const auto cf = zero(m, Region::Omega1);
  const double s = sigma1(m, Region::Omega1, 1.0, cf, bc).value;
  CHECK(solve_logistic_scalar(m, Region::Omega1, s + 1e-8, cf, 1.0, bc).status == Existence::Indeterminate);
}

TEST_CASE("omega_2: threshold, lower bound and saturation") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  const auto bc2 = BoundarySpec::robin_on_interface(m.geometry(), Region::Omega2);
  const auto eig = sigma1(m, Region::Omega2, 1.0, zero(m, Region::Omega2), bc2);
  const double s2 = eig.value;
  CHECK(solve_omega(m, 2, 0.5 * s2, 1.0).status == Existence::NoPositiveSolution);

  const double alpha = 1.5;
  const auto r = solve_omega(m, 2, 2.0 * s2, alpha);
  REQUIRE(r.status == Existence::Positive);
  CHECK(r.residual < 1e-10);
  // Both pieces have the same length here, so the eigenfunction of either piece bounds
  // that piece; check the piece carrying the eigenfunction.
  const Vector phi = eig.eigenfunction / eig.eigenfunction.maxCoeff();
  const Vector lower = ((2.0 * s2 - s2) / alpha) * phi.cwiseProduct(phi);
  CHECK((r.field - lower).minCoeff() >= -1e-9);

  const auto big = solve_omega(m, 2, 50.0, 1.0);
  REQUIRE(big.status == Existence::Positive);
  CHECK(big.field.maxCoeff() == doctest::Approx(50.0).epsilon(0.1));

  CHECK_THROWS_AS(solve_omega(m, 3, 1.0, 1.0), ValidationError);
}

TEST_CASE("membrane logistic: existence follows the sign of Lambda1(-l1,-l2)") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  auto eq = solve_membrane_logistic(m, 2.0, 2.0, 1.0, 1.0);
  REQUIRE(eq.status == Existence::Positive);
  CHECK((eq.pair.theta1.array() - 2.0).abs().maxCoeff() < 1e-10);
  CHECK((eq.pair.theta2.array() - 2.0).abs().maxCoeff() < 1e-10);
  CHECK(solve_membrane_logistic(m, -1.0, -1.0, 1.0, 1.0).status == Existence::NoPositiveSolution);

  const double s2 = sigma1(m, Region::Omega2, 1.0, zero(m, Region::Omega2),
                           BoundarySpec::robin_on_interface(m.geometry(), Region::Omega2))
                        .value;
  const auto coop = solve_membrane_logistic(m, -10.0, s2 + 0.5, 1.0, 1.0);
  REQUIRE(coop.status == Existence::Positive);
  CHECK(coop.pair.theta1.minCoeff() > 0.0);
}

TEST_CASE("membrane logistic: bounds, stability and monotonicity on random rates") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 64);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 15.0);
  const double a1 = 1.3, a2 = 0.7;
  int positive = 0;
  for (int k = 0; k < 30; ++k) {
    const double l1 = u(rng), l2 = u(rng);
    const auto r = solve_membrane_logistic(m, l1, l2, a1, a2);
    if (r.status != Existence::Positive) continue;
    ++positive;
    CHECK(r.residual < 1e-10);
    const double k_bound = std::max(l1 / a1, l2 / a2);
    CHECK(r.pair.theta1.maxCoeff() <= k_bound + 1e-9);
    CHECK(r.pair.theta2.maxCoeff() <= k_bound + 1e-9);
    for (int which : {1, 2}) {
      const auto w = solve_omega(m, which, which == 1 ? l1 : l2, which == 1 ? a1 : a2);
      if (w.status != Existence::Positive) continue;
      const Vector& th = which == 1 ? r.pair.theta1 : r.pair.theta2;
      CHECK((th - w.field).minCoeff() >= -1e-9);
    }
    const auto stab = lambda1(m, 1.0, CoefficientField::from(Region::Omega1, (-l1 + 2.0 * a1 * r.pair.theta1.array()).matrix()),
                              CoefficientField::from(Region::Omega2, (-l2 + 2.0 * a2 * r.pair.theta2.array()).matrix()));
    CHECK(stab.value > 0.0);
    const auto more = solve_membrane_logistic(m, l1 + 0.5, l2, a1, a2);
    REQUIRE(more.status == Existence::Positive);
    CHECK((more.pair.theta1 - r.pair.theta1).minCoeff() >= -1e-9);
    CHECK((more.pair.theta2 - r.pair.theta2).minCoeff() >= -1e-9);
  }
  CHECK(positive > 5);
}

TEST_CASE("semitrivial pair converges at second order") {
  ModelParams p = canonical_params();
  p.alpha1 = SpatialCoefficient::of([](double x) { return 1.0 + 0.5 * x; });
  const Mesh m24 = build_mesh(p.geometry, 24), m96 = build_mesh(p.geometry, 96), m384 = build_mesh(p.geometry, 384);
  const Vector f24 = oracles::fine_grid_reference(oracles::Problem::SemitrivialPair, p, 24);
  const Vector f96 = oracles::fine_grid_reference(oracles::Problem::SemitrivialPair, p, 96);
  const Vector f384 = oracles::fine_grid_reference(oracles::Problem::SemitrivialPair, p, 384);
  auto diff = [](const Mesh& mc, const Vector& c, const Mesh& mf, const Vector& f) {
    const auto n1c = static_cast<Eigen::Index>(mc.size(Region::Omega1));
    const auto n1f = static_cast<Eigen::Index>(mf.size(Region::Omega1));
    return std::max(oracles::nested_sup_difference(mc.coords(Region::Omega1), c.head(n1c),
                                                   mf.coords(Region::Omega1), f.head(n1f)),
                    oracles::nested_sup_difference(mc.coords(Region::Omega2), c.tail(c.size() - n1c),
                                                   mf.coords(Region::Omega2), f.tail(f.size() - n1f)));
  };
  const double d1 = diff(m24, f24, m384, f384);
  const double d2 = diff(m96, f96, m384, f384);
  // Differences against the finest grid: ratio (1/24^2 - 1/384^2)/(1/96^2 - 1/384^2) = 17.
  CHECK(d1 / d2 == doctest::Approx(17.0).epsilon(0.15));
}

TEST_CASE("large solution: monotone in M, shrinking Cauchy increments, dominates theta2") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  const double lambda2 = 8.0;
  const auto L = approximate_large_solution(m, lambda2, 1.0, {1e2, 1e3, 1e4, 1e5});
  CHECK(L.monotone);
  // Cauchy increments shrink as M grows at every node at least 5h away from Sigma. They
  // decay only like M^(-1/2) (the finite-M profile is shifted by about sqrt(6 / M)).
  const double h = m.segments()[0].h;
  const auto x = m.coords(Region::Omega2);
  const auto& g = m.geometry();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::min(std::abs(x[i] - g.a), std::abs(x[i] - g.b)) < 5.0 * h - 1e-12) continue;
    CHECK(L.increments[2][i] < L.increments[1][i]);
    CHECK(L.increments[1][i] < L.increments[0][i]);
  }
  MESSAGE("max relative increment 1e4 -> 1e5 beyond 5h: " << L.max_increment_beyond(m, 5.0 * h));
  for (double l1 : {-20.0, 0.0, 30.0}) {
    const auto pair = solve_membrane_logistic(m, l1, lambda2, 1.0, 1.0);
    REQUIRE(pair.status == Existence::Positive);
    CHECK((L.field() - pair.pair.theta2).minCoeff() >= -1e-9);
  }
  const auto L0 = approximate_large_solution(m, 0.0, 1.0, {1e2, 1e3, 1e4});
  // Zero growth: the boundary forcing decays into the patch.
  CHECK(L0.field()[0] < 0.05 * 1e4);
  CHECK(L0.field().maxCoeff() == doctest::Approx(1e4));
  CHECK_THROWS_AS(approximate_large_solution(m, 1.0, 1.0, {1e3, 1e2}), ValidationError);
}

TEST_CASE("coexistence Jacobian matches central differences") {
  const Mesh m = build_mesh(Geometry1D{0.0, 1.0, 0.3, 0.75, 1.4, 0.6}, 24);
  ModelParams p = canonical_params();
  p.geometry = m.geometry();
  p.alpha2 = SpatialCoefficient::of([](double x) { return 1.0 + x * x; });
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 3; ++trial) {
    StateTriple s = random_positive_state(m, rng);
    const Eigen::MatrixXd j(coexistence_jacobian(m, p, s));
    Vector x(j.cols());
    x << s.u1, s.u2, s.v;
    auto res_at = [&](const Vector& y) {
      StateTriple t;
      t.u1 = y.head(s.u1.size());
      t.u2 = y.segment(s.u1.size(), s.u2.size());
      t.v = y.tail(s.v.size());
      return coexistence_residual(m, p, t);
    };
    double worst = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double eps = 1e-6 * std::max(1.0, std::abs(x[k]));
      Vector xp = x, xm = x;
      xp[k] += eps;
      xm[k] -= eps;
      const Vector col = (res_at(xp) - res_at(xm)) / (2.0 * eps);
      const double scale = std::max(1.0, j.col(k).cwiseAbs().maxCoeff());
      worst = std::max(worst, (col - j.col(k)).cwiseAbs().maxCoeff() / scale);
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("coexistence: decoupled case and necessary conditions") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  ModelParams p = canonical_params();
  // The model requires positive couplings; tiny ones approximate the decoupled system.
  p.a1 = p.a2 = p.b1 = p.b2 = 1e-12;
  p.mu = 2.0;
  const auto r = solve_coexistence(m, p);
  REQUIRE(r.found);
  const auto pair = solve_membrane_logistic(m, p.lambda1, p.lambda2, 1.0, 1.0);
  CHECK((r.state.u1 - pair.pair.theta1).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((r.state.u2 - pair.pair.theta2).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((r.state.v.array() - 2.0).abs().maxCoeff() < 1e-9);

  ModelParams q = canonical_params();
  q.mu = -0.5;
  CHECK_FALSE(solve_coexistence(m, q).found);
  q.mu = 1.0;
  q.lambda1 = q.lambda2 = -1.0;
  CHECK_FALSE(solve_coexistence(m, q).found);
  q.a1 = -1.0;
  CHECK_THROWS_AS(solve_coexistence(m, q), ValidationError);
}

TEST_CASE("coexistence inside the bifurcation window; parabolic oracle agrees") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 64);
  ModelParams p = canonical_params();
  const auto pair = solve_membrane_logistic(m, p.lambda1, p.lambda2, 1.0, 1.0);
  const double mu0 = v_eigen_at_semitrivial(m, p, pair.pair).value;
  const double mu1 = mu_one(m, p);
  MESSAGE("mu0 = " << mu0 << ", mu1 = " << mu1);
  REQUIRE(mu0 < mu1);
  p.mu = 0.5 * (mu0 + mu1);
  const auto r = solve_coexistence(m, p);
  REQUIRE(r.found);
  CHECK(r.residual < 1e-9);
  CHECK(r.state.coexistence());
  const double k = p.u_bound(m);
  CHECK(r.state.u1.maxCoeff() <= k + 1e-9);
  CHECK(r.state.u2.maxCoeff() <= k + 1e-9);
  CHECK(r.state.v.maxCoeff() <= p.mu + 1e-9);
  CHECK((pair.pair.theta1 - r.state.u1).minCoeff() >= -1e-9);
  CHECK((pair.pair.theta2 - r.state.u2).minCoeff() >= -1e-9);

  StateTriple init;
  init.u1 = 0.5 * pair.pair.theta1;
  init.u2 = 0.5 * pair.pair.theta2;
  init.v = Vector::Constant(r.state.v.size(), 0.5 * p.mu);
  EvolveOptions eo;
  eo.steady_tol = 1e-10;
  const auto ev = evolve_parabolic(m, p, init, 400.0, 0.02, eo);
  CHECK(ev.state.distance(r.state) < 1e-6);
}

TEST_CASE("parabolic stepper: fixed point, exclusion and instability") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 48);
  ModelParams p = canonical_params();
  const auto pair = solve_membrane_logistic(m, p.lambda1, p.lambda2, 1.0, 1.0);
  const double mu0 = v_eigen_at_semitrivial(m, p, pair.pair).value;
  const double mu1 = mu_one(m, p);
  p.mu = 0.5 * (mu0 + mu1);
  const auto st = solve_coexistence(m, p);
  REQUIRE(st.found);
  const auto same = evolve_parabolic(m, p, st.state, 1.0, 0.01);
  CHECK(same.state.distance(st.state) < 1e-8);

  // Large mu: v wins, u dies out.
  ModelParams big = p;
  big.mu = 4.0 * mu1 + 20.0;
  StateTriple init = st.state;
  const auto ex = evolve_parabolic(m, big, init, 60.0, 0.02);
  CHECK(ex.state.u1.maxCoeff() < 1e-3);
  CHECK(ex.state.u2.maxCoeff() < 1e-3);
  CHECK(ex.state.v.minCoeff() == doctest::Approx(big.mu).epsilon(1e-3));

  // Semitrivial (theta, theta, eps) is unstable for mu0 < mu < mu1: v grows.
  StateTriple semi;
  semi.u1 = pair.pair.theta1;
  semi.u2 = pair.pair.theta2;
  semi.v = Vector::Constant(static_cast<Eigen::Index>(m.size(Region::Omega)), 1e-6);
  const auto grow = evolve_parabolic(m, p, semi, 5.0, 0.01);
  CHECK(grow.state.v.minCoeff() > 1e-6);

  StateTriple neg = semi;
  neg.v[0] = -1.0;
  CHECK_THROWS_AS(evolve_parabolic(m, p, neg, 1.0, 0.01), ValidationError);
}
