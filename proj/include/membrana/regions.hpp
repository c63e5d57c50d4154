#pragma once

#include <optional>
#include <string>
#include <vector>

#include "membrana/curves.hpp"

namespace membrana {

enum class RegionMode {
  General,      ///< grid over (lambda1, mu) at fixed lambda2
  EqualLambda,  ///< grid over (lambda, mu) with lambda1 = lambda2 = lambda
};

enum class Confirmation { Unchecked, Confirmed, Refuted };
std::string to_string(Confirmation c);

/// Inclusive uniform grid: nx abscissae in [x_min, x_max] and nmu values in [mu_min, mu_max].
struct GridSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  int nx = 2;
  double mu_min = 0.0;
  double mu_max = 1.0;
  int nmu = 2;

  void validate() const;
  double x(int i) const;
  double mu(int j) const;
};

struct RegionCell {
  double x = 0.0;  ///< lambda1, or lambda in the equal-lambda mode
  double mu = 0.0;
  PointClass cls = PointClass::Indeterminate;
  Confirmation confirmation = Confirmation::Unchecked;
};

struct RegionMap {
  RegionMode mode = RegionMode::General;
  double lambda2 = 0.0;  ///< unused in the equal-lambda mode
  GridSpec grid;
  std::vector<RegionCell> cells;  ///< column-major: index = i * nmu + j

  const RegionCell& at(int i, int j) const { return cells[static_cast<std::size_t>(i * grid.nmu + j)]; }
};

struct RegionMapOptions {
  bool confirm = false;
  int threads = 1;
  bool use_large_bound = true;
  /// Indeterminate cells within this many grid steps (in mu or x) of a predicted cell are
  /// also checked when confirming.
  int band = 1;
};

/// Classifies every cell; with `confirm`, runs the coexistence solver at each predicted
/// cell and at a band of indeterminate cells. Columns are processed in parallel; inside a
/// column, cells are visited in increasing mu and a confirmed state seeds the next cell.
RegionMap region_map(const CurveEngine& engine, RegionMode mode, double lambda2, const GridSpec& grid,
                     const RegionMapOptions& opts = {});

/// Outcome of checking one parameter point for coexistence.
struct CoexistenceVerdict {
  Confirmation result = Confirmation::Unchecked;  ///< Unchecked means unresolved
  std::optional<StateTriple> state;
  std::string note;
};

struct RefutationOptions {
  double t_end = 400.0;
  /// A component whose sup falls below this at t_end counts as extinct.
  double extinction = 1e-6;
};

/// Confirmed when Newton (from `seed`, then the built-in starts) finds a coexistence
/// state; Refuted when it fails and the parabolic flow from a positive state drives a
/// component extinct; otherwise unresolved.
CoexistenceVerdict check_coexistence(const Mesh& mesh, const ModelParams& p,
                                     const std::optional<StateTriple>& seed = std::nullopt,
                                     const RefutationOptions& ropts = {});

struct Bracket {
  double lower = 0.0;  ///< largest parameter with a confirmed coexistence state
  double upper = 0.0;  ///< smallest parameter refuted by Newton and the parabolic flow
  double constructive = 0.0;  ///< proven sufficient bound for non-existence
  bool upper_refuted = false;  ///< the parabolic flow confirmed extinction at `upper`
  int evaluations = 0;
  std::string note;
};

struct BracketOptions {
  std::optional<double> window_lo;  ///< search window for the confirmed starting point
  std::optional<double> window_hi;
  double rel_tol = 1e-3;
  int max_bisections = 30;
  RefutationOptions refutation;
};

/// Empirical bracket for mu* at fixed (lambda1, lambda2). Throws DomainError when
/// Lambda_1(-lambda1, -lambda2) >= 0 and SolverError ("window exhaustion") when no
/// confirmed coexistence state is found to start from.
Bracket estimate_mu_star(const CurveEngine& engine, double lambda1, double lambda2, const BracketOptions& opts = {});

/// Empirical bracket for lambda* in the equal-lambda mode at fixed mu > 0.
Bracket estimate_lambda_star(const CurveEngine& engine, double mu, const BracketOptions& opts = {});

}  // namespace membrana
