#include <doctest.h>

#include <cmath>

#include "membrana/regions.hpp"

using namespace membrana;

namespace {

CurveEngine engine_with(ModelParams p, int n = 32) { return CurveEngine(build_mesh(p.geometry, n), p); }

struct Counts {
  int predicted = 0;
  int confirmed_predicted = 0;
  int confirmed_total = 0;
};

Counts count(const RegionMap& map) {
  Counts c;
  for (const auto& cell : map.cells) {
    if (cell.confirmation == Confirmation::Confirmed) ++c.confirmed_total;
    if (cell.cls != PointClass::CoexistencePredicted) continue;
    ++c.predicted;
    if (cell.confirmation == Confirmation::Confirmed) ++c.confirmed_predicted;
  }
  return c;
}

}  // namespace

TEST_CASE("grid validation and inclusive abscissae") {
  GridSpec g{-1.0, 1.0, 5, 0.0, 2.0, 3};
  CHECK(g.x(0) == -1.0);
  CHECK(g.x(4) == 1.0);
  CHECK(g.mu(1) == 1.0);
  CHECK(g.mu(2) == 2.0);
  GridSpec bad{1.0, 0.0, 5, 0.0, 1.0, 3};
  CHECK_THROWS(bad.validate());
  GridSpec tiny{0.0, 1.0, 1, 0.0, 1.0, 3};
  CHECK_THROWS(tiny.validate());
}

TEST_CASE("region map with lambda2 > sigma2: predictions confirmed, invariants hold") {
  ModelParams p;
  const auto e = engine_with(p);
  const GridSpec grid{-10.0, 20.0, 16, -1.0, 20.0, 16};
  RegionMapOptions opts;
  opts.confirm = true;
  const auto map = region_map(e, RegionMode::General, 8.0, grid, opts);
  REQUIRE(map.cells.size() == 256);

  const auto c = count(map);
  REQUIRE(c.predicted > 20);
  CHECK(c.confirmed_predicted >= 0.95 * c.predicted);

  int negative_l1 = 0;
  for (const auto& cell : map.cells) {
    if (cell.mu <= 0.0) CHECK(cell.cls == PointClass::NonExistenceNecessary);
    if (cell.confirmation == Confirmation::Confirmed) {
      CHECK(cell.cls != PointClass::NonExistenceNecessary);
      CHECK(cell.cls != PointClass::NonExistenceLarge);
      if (cell.x < 0.0) ++negative_l1;
    }
  }
  // Coexistence with a negative growth rate in Omega1.
  CHECK(negative_l1 > 0);
}

TEST_CASE("region map with lambda2 < 0: nothing left of H(lambda2)") {
  ModelParams p;
  const auto e = engine_with(p);
  const double l2 = -2.0;
  const double h = e.curve_H(l2).value;
  const GridSpec grid{-2.0, 30.0, 12, -1.0, 25.0, 12};
  RegionMapOptions opts;
  opts.confirm = true;
  const auto map = region_map(e, RegionMode::General, l2, grid, opts);
  const auto c = count(map);
  REQUIRE(c.predicted > 5);
  CHECK(c.confirmed_predicted >= 0.95 * c.predicted);
  for (const auto& cell : map.cells) {
    if (cell.x < h) {
      CHECK(cell.cls == PointClass::NonExistenceNecessary);
      CHECK(cell.confirmation != Confirmation::Confirmed);
    }
  }
}

TEST_CASE("region maps do not depend on the thread count") {
  ModelParams p;
  const auto e = engine_with(p);
  const GridSpec grid{0.0, 20.0, 6, 0.0, 15.0, 6};
  RegionMapOptions one;
  one.confirm = true;
  RegionMapOptions four = one;
  four.threads = 4;
  const auto a = region_map(e, RegionMode::General, 8.0, grid, one);
  const auto b = region_map(e, RegionMode::General, 8.0, grid, four);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t k = 0; k < a.cells.size(); ++k) {
    CHECK(a.cells[k].cls == b.cells[k].cls);
    CHECK(a.cells[k].confirmation == b.cells[k].confirmation);
  }
}

TEST_CASE("equal-lambda region map uses the lambda* bound") {
  ModelParams p;
  const auto e = engine_with(p);
  const GridSpec grid{0.0, 30.0, 10, -1.0, 25.0, 10};
  RegionMapOptions opts;
  opts.confirm = true;
  const auto map = region_map(e, RegionMode::EqualLambda, 0.0, grid, opts);
  const auto c = count(map);
  REQUIRE(c.predicted > 5);
  CHECK(c.confirmed_predicted >= 0.95 * c.predicted);
  for (const auto& cell : map.cells) {
    if (cell.mu <= 0.0) CHECK(cell.cls == PointClass::NonExistenceNecessary);
    // lambda = 0 sits on the threshold Lambda_1(0, 0) = 0.
    if (cell.x == 0.0 && cell.mu > 0.0) CHECK(cell.cls == PointClass::Indeterminate);
    if (cell.x == 0.0) CHECK(cell.confirmation != Confirmation::Confirmed);
  }
}

TEST_CASE("coexistence check: confirmation and refutation") {
  ModelParams p;
  p.lambda1 = 3.0;
  p.lambda2 = 8.0;
  p.mu = 8.0;
  const auto mesh = build_mesh(p.geometry, 32);
  const auto ok = check_coexistence(mesh, p);
  CHECK(ok.result == Confirmation::Confirmed);
  REQUIRE(ok.state.has_value());
  CHECK(ok.state->min_v() > 0.0);

  // Far above the constructive bound: v wins and the flow drives u extinct.
  p.mu = 60.0;
  const auto no = check_coexistence(mesh, p);
  CHECK(no.result == Confirmation::Refuted);
  CHECK(!no.state.has_value());
}

TEST_CASE("mu* bracket lies below the constructive bound and contains mu1") {
  ModelParams p;
  const auto e = engine_with(p);
  const auto br = estimate_mu_star(e, 3.0, 8.0);
  CHECK(br.lower > 0.0);
  CHECK(br.lower <= br.upper);
  CHECK(br.upper <= br.constructive + 1e-9);
  CHECK(br.constructive == e.mu_star_constructive(3.0, 8.0));
  CHECK(br.upper_refuted);
  // The branch from mu0 ends at mu1, so the bracket contains it. Close to mu1 the flow
  // decays slowly and the bisection may stop early at an unresolved point.
  const double mu1 = *e.compute_mu1(3.0, 8.0);
  CHECK(br.lower <= mu1);
  CHECK(br.upper >= mu1);
  if (br.note.empty()) CHECK((br.upper - br.lower) <= 1e-3 * br.upper + 1e-9);

  CHECK_THROWS_AS(estimate_mu_star(e, -10.0, -10.0), DomainError);
}

TEST_CASE("lambda* bracket in the equal-lambda mode") {
  ModelParams p;
  const auto e = engine_with(p);
  const auto br = estimate_lambda_star(e, 5.0);
  CHECK(br.lower <= br.upper);
  CHECK(br.upper <= br.constructive + 1e-9);
  CHECK(br.constructive == e.lambda_star_constructive(5.0));
  CHECK_THROWS_AS(estimate_lambda_star(e, 0.0), DomainError);
}
