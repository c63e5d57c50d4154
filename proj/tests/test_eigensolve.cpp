#include <doctest.h>

#include <cmath>
#include <random>

#include "membrana/eigensolve.hpp"
#include "membrana/oracles.hpp"

using namespace membrana;
using namespace membrana::oracles;

namespace {

CoefficientField zero(const Mesh& m, Region r) { return CoefficientField::constant(m, r, 0.0); }

double sigma_omega1(int n) {
  const Mesh m = build_mesh(Geometry1D::canonical(), n);
  return sigma1(m, Region::Omega1, 1.0, zero(m, Region::Omega1),
                BoundarySpec::robin_on_interface(m.geometry(), Region::Omega1))
      .value;
}

}  // namespace

TEST_CASE("Neumann Laplacian on Omega has principal eigenvalue zero") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  const auto r = sigma1(m, Region::Omega, 1.0, zero(m, Region::Omega), BoundarySpec::neumann(Region::Omega));
  CHECK(std::abs(r.value) < 1e-9);
  CHECK(r.eigenfunction.minCoeff() == doctest::Approx(1.0));
  const auto r5 = sigma1(m, Region::Omega, 1.0, CoefficientField::constant(m, Region::Omega, 5.0),
                         BoundarySpec::neumann(Region::Omega));
  CHECK(r5.value == doctest::Approx(5.0).epsilon(1e-10));
}

TEST_CASE("Lambda1(0,0) = 0 with constant eigenfunction, and the shift property") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 96);
  const auto r = lambda1(m, 1.0, 0.0, 0.0);
  CHECK(std::abs(r.value) < 1e-9);
  CHECK(r.eigenfunction.minCoeff() == doctest::Approx(1.0).epsilon(1e-9));
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 5; ++k) {
    const double c = u(rng), t = u(rng);
    CHECK(lambda1(m, 1.0, c + t, c + t).value == doctest::Approx(lambda1(m, 1.0, c, c).value + t).epsilon(1e-9));
  }
}

TEST_CASE("sigma_1 on Omega1 with Robin ends converges to the transcendental root at second order") {
  const double exact = interval_eigen_oracle({1.0 / 3.0, IntervalEnd::robin(1.0), IntervalEnd::robin(1.0)});
  const double e1 = sigma_omega1(48) - exact;
  const double e2 = sigma_omega1(96) - exact;
  CHECK(std::log2(std::abs(e1 / e2)) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("disconnected Omega2: minimum over pieces with zero extension") {
  const Geometry1D g{0.0, 1.0, 0.2, 0.5, 1.0, 2.0};  // pieces of length 0.2 and 0.5
  const Mesh m = build_mesh(g, 200);
  const auto parts = sigma1_components(m, Region::Omega2, 1.0, zero(m, Region::Omega2),
                                       BoundarySpec::robin_on_interface(g, Region::Omega2));
  REQUIRE(parts.size() == 2);
  const double left = interval_eigen_oracle({0.2, IntervalEnd::neumann(), IntervalEnd::robin(2.0)});
  const double right = interval_eigen_oracle({0.5, IntervalEnd::neumann(), IntervalEnd::robin(2.0)});
  CHECK(parts[0].value == doctest::Approx(left).epsilon(1e-4));
  CHECK(parts[1].value == doctest::Approx(right).epsilon(1e-4));
  const auto best = sigma1(m, Region::Omega2, 1.0, zero(m, Region::Omega2),
                           BoundarySpec::robin_on_interface(g, Region::Omega2));
  CHECK(best.value == parts[1].value);
  const auto comps = m.components(Region::Omega2);
  CHECK(best.eigenfunction.segment(0, static_cast<Eigen::Index>(comps[0].size())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Lambda1 agrees with the dense oracle") {
  const Mesh m = build_mesh(Geometry1D{0.0, 1.0, 0.25, 0.6, 0.7, 2.5}, 64);
  const auto x1 = m.coords(Region::Omega1);
  const auto x2 = m.coords(Region::Omega2);
  Vector c1(x1.size()), c2(x2.size());
  for (std::size_t i = 0; i < x1.size(); ++i) c1[i] = std::cos(7.0 * x1[i]);
  for (std::size_t i = 0; i < x2.size(); ++i) c2[i] = 2.0 * x2[i] - 1.0;
  const auto f1 = CoefficientField::from(Region::Omega1, c1);
  const auto f2 = CoefficientField::from(Region::Omega2, c2);
  const auto r = lambda1(m, 1.0, f1, f2);
  const double oracle = dense_eigen_oracle(assemble_interface(m, 1.0, f1, f2));
  CHECK(r.value == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
  CHECK(r.eigenfunction.minCoeff() > 0.0);
  CHECK(r.residual < 1e-8);
}

TEST_CASE("monotone in the potentials; growth check") {
  const Mesh m = build_mesh(Geometry1D::canonical(), 48);
  CHECK(lambda1(m, 1.0, 0.0, 0.5).value < lambda1(m, 1.0, 0.2, 0.5).value);
  const auto seq = lambda1_growth_check(m, 1.0, CoefficientField::constant(m, Region::Omega1, 1.0),
                                        CoefficientField::constant(m, Region::Omega2, 1.0), {1.0, 10.0, 100.0});
  CHECK(seq[0].second == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(seq[1].second == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(seq[2].second == doctest::Approx(100.0).epsilon(1e-9));
  const auto s2 = lambda1_growth_check(m, 1.0, CoefficientField::constant(m, Region::Omega1, 1.0),
                                       CoefficientField::constant(m, Region::Omega2, 2.0), {10.0, 100.0});
  CHECK(s2[1].second / s2[0].second >= 5.0);
  CHECK_THROWS_AS(lambda1_growth_check(m, 1.0, CoefficientField::constant(m, Region::Omega1, 0.0),
                                       CoefficientField::constant(m, Region::Omega2, 1.0), {1.0}),
                  ValidationError);
}

TEST_CASE("large diffusion: Lambda1 approaches the weighted average of the potentials") {
  Geometry1D g = Geometry1D::canonical();
  g.gamma1 = g.gamma2 = 1.0;
  const Mesh m = build_mesh(g, 96);
  const double v = lambda1(m, 1e3, 1.0, 0.0).value;
  CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}
