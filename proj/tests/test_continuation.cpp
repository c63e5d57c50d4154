#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "membrana/continuation.hpp"

using namespace membrana;

namespace {

CurveEngine canonical_engine(int n = 64) {
  ModelParams p;
  return CurveEngine(build_mesh(p.geometry, n), p);
}

}  // namespace

TEST_CASE("branch from the semitrivial state ends at mu1 on the (0, 0, v) side") {
  const auto e = canonical_engine();
  const double l1 = 3.0, l2 = 8.0;
  const double mu0 = e.compute_mu0(l1, l2);
  const auto mu1 = e.compute_mu1(l1, l2);
  REQUIRE(mu1.has_value());

  const auto br = trace_branch(e, l1, l2);
  CHECK(br.mu0 == mu0);
  CHECK(br.mu1 == *mu1);
  REQUIRE(br.points.size() >= 10);
  CHECK(br.end == BranchEnd::TrivialUReached);
  CHECK(br.points.back().mu == doctest::Approx(*mu1).epsilon(1e-4));
  CHECK(br.points.front().mu == doctest::Approx(mu0).epsilon(1e-2));

  ModelParams p = e.params();
  p.lambda1 = l1;
  p.lambda2 = l2;
  const double ub = p.u_bound(e.mesh());
  double arc = -1.0;
  for (const auto& pt : br.points) {
    CHECK(pt.mu >= std::min(mu0, *mu1) - 1e-9);
    CHECK(pt.mu <= std::max(mu0, *mu1) + 1e-9);
    CHECK(pt.mu <= br.mu_star_bound);
    CHECK(pt.arclength > arc);
    arc = pt.arclength;
    CHECK(pt.state.u1.maxCoeff() <= ub + 1e-8);
    CHECK(pt.state.u2.maxCoeff() <= ub + 1e-8);
    CHECK(pt.state.v.maxCoeff() <= pt.mu / p.beta + 1e-8);
    p.mu = pt.mu;
    CHECK(coexistence_residual(e.mesh(), p, pt.state).lpNorm<Eigen::Infinity>() < 1e-7);
  }
}

TEST_CASE("near mu0 the branch leaves the semitrivial state linearly") {
  const auto e = canonical_engine();
  StepSpec spec;
  spec.max_points = 4;
  const auto br = trace_branch(e, 3.0, 8.0, spec);
  REQUIRE(br.points.size() >= 3);
  // sup v / |mu - mu0| stays bounded and of one size for the first points.
  std::vector<double> ratios;
  for (const auto& pt : br.points) ratios.push_back(pt.state.v.maxCoeff() / std::abs(pt.mu - br.mu0));
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  CHECK(*lo > 0.0);
  CHECK(*hi / *lo < 1.5);
  CHECK(br.end == BranchEnd::MaxPoints);
}

TEST_CASE("branch preconditions and step validation") {
  const auto e = canonical_engine(32);
  CHECK_THROWS_AS(trace_branch(e, -10.0, -10.0), DomainError);
  StepSpec bad;
  bad.min_step = 1.0;
  bad.max_step = 0.1;
  CHECK_THROWS(bad.validate());
  StepSpec neg;
  neg.delta_mu = -1.0;
  CHECK_THROWS(neg.validate());
}

TEST_CASE("limit system: decoupled v and the v = 0 extension on Omega1") {
  ModelParams p;
  const auto mesh = build_mesh(p.geometry, 64);
  // mu below the Dirichlet-Neumann threshold of b2 u2: only v = 0.
  const auto r0 = limit_system_solve(mesh, p, 2.0, 0.5, 1e4);
  CHECK(!r0.v_positive);
  CHECK(r0.v.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(r0.residual < 1e-6);

  // Large mu: v positive in Omega2, zero on Sigma and on Omega1.
  const auto r = limit_system_solve(mesh, p, 2.0, 200.0, 1e4);
  REQUIRE(r.v_positive);
  CHECK(r.residual < 1e-6);
  CHECK(r.v.minCoeff() >= 0.0);
  const auto idx1 = mesh.omega_index(Region::Omega1);
  for (std::size_t k : idx1) CHECK(r.v_omega[static_cast<Eigen::Index>(k)] == 0.0);
  CHECK(r.u2.maxCoeff() == doctest::Approx(1e4));
  CHECK(r.v.maxCoeff() <= 200.0 / p.beta + 1e-8);
  CHECK_THROWS(limit_system_solve(mesh, p, 2.0, 1.0, -1.0));
}

TEST_CASE("lambda1 -> infinity: full-system states approach the limit system") {
  ModelParams p;
  p.geometry.x_left = 0.0;
  p.geometry.x_right = 8.0;
  p.geometry.a = 3.5;
  p.geometry.b = 4.5;
  p.lambda2 = 1.0;
  p.mu = 0.6;
  p.a1 = p.a2 = 0.5;
  p.b1 = 1.0;
  p.b2 = 0.05;
  const auto mesh = build_mesh(p.geometry, 100);
  const auto study = limit_approach(mesh, p, 1e6, {50.0, 200.0, 1000.0});
  REQUIRE(study.limit.v_positive);
  REQUIRE(study.points.size() == 3);
  const auto& pts = study.points;
  CHECK(pts[1].min_u1 > pts[0].min_u1);
  CHECK(pts[2].min_u1 > 10.0 * pts[0].min_u1);
  CHECK(pts[1].dist_v_omega2 < pts[0].dist_v_omega2);
  CHECK(pts[2].dist_v_omega2 < pts[1].dist_v_omega2);
  CHECK(pts[2].sup_v_omega1 < 1e-2);
  CHECK_THROWS(limit_approach(mesh, p, 1e6, {}));
}
