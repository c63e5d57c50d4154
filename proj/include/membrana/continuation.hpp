#pragma once

#include <string>
#include <vector>

#include "membrana/curves.hpp"

namespace membrana {

/// Step control for branch continuation in mu.
struct StepSpec {
  /// Offset of the first branch point from mu0, relative to |mu1 - mu0|.
  double delta_mu = 1e-3;
  double initial_step = 0.02;  ///< pseudo-arclength step, relative to |mu1 - mu0|
  double max_step = 0.05;      ///< relative to |mu1 - mu0|
  double min_step = 1e-9;      ///< relative to |mu1 - mu0|; smaller steps count as underflow
  int max_points = 5000;
  double residual_tol = 1e-9;
  double delta = kPositivityThreshold;  ///< positivity threshold ending the branch

  void validate() const;
};

struct BranchPoint {
  double mu = 0.0;
  double arclength = 0.0;
  double residual = 0.0;
  StateTriple state;
};

enum class BranchEnd {
  SemitrivialReached,  ///< v-component fell below delta
  TrivialUReached,     ///< a u-component fell below delta: the branch reached (0, 0, v)
  StepUnderflow,
  MaxPoints,
  Degenerate,          ///< |mu0 - mu1| below 10 delta_mu: nothing to trace
};
std::string to_string(BranchEnd e);

struct Branch {
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu_star_bound = 0.0;  ///< constructive upper bound for every coexistence state
  std::vector<BranchPoint> points;
  BranchEnd end = BranchEnd::Degenerate;
  std::string note;
};

/// Continuation of the coexistence branch emanating from (theta1, theta2, 0) at mu0.
///
/// The first point is found by Newton at mu0 + sign(mu1 - mu0) delta_mu from the
/// semitrivial state plus a multiple of the kernel direction (u', phi). The curve is then
/// followed by pseudo-arclength continuation (secant predictor, bordered Newton corrector),
/// which passes folds in mu. Steps are halved on corrector failure. When a component
/// becomes non-positive the step is refined until it underflows, so the last stored point
/// lies next to the end of the branch. Throws DomainError when Lambda_1(-l1, -l2) >= 0 or
/// mu1 does not exist, and SolverError when no point off the semitrivial state is found.
Branch trace_branch(const CurveEngine& engine, double lambda1, double lambda2, const StepSpec& spec = {});

struct LimitSystemResult {
  Vector u2;        ///< on the Omega2 nodes (equal to M on Sigma)
  Vector v;         ///< on the Omega2 nodes (zero on Sigma)
  Vector v_omega;   ///< v on the Omega nodes, zero on the closure of Omega1
  bool v_positive = false;
  double residual = 0.0;
  int iterations = 0;
};

/// The two-species system on Omega2 obtained as lambda1 -> infinity:
///   -d u2'' = u2 (lambda2 - alpha2 u2 - a2 v),  -d v'' = v (mu - beta v - b2 u2),
/// u2 = M and v = 0 on Sigma, Neumann on Gamma. Newton starts from the large-solution
/// approximation for u2 and the logistic solution for v in the potential b2 u2; when that
/// logistic problem has no positive solution the result is v = 0.
LimitSystemResult limit_system_solve(const Mesh& mesh, const ModelParams& p, double lambda2, double mu, double m);

/// Full-system coexistence state at one lambda1 compared with the limit system.
struct LimitApproachPoint {
  double lambda1 = 0.0;
  double min_u1 = 0.0;
  double dist_v_omega2 = 0.0;  ///< sup over Omega2 of |v - v_limit|
  double sup_v_omega1 = 0.0;
  double residual = 0.0;
};

struct LimitApproach {
  LimitSystemResult limit;
  std::vector<LimitApproachPoint> points;  ///< one per requested lambda1, increasing
};

/// Follows the coexistence state of the full system (lambda2 and mu from `p`) as lambda1
/// grows, by Newton continuation in geometric steps of `factor` through the requested
/// values, and compares each requested state with the limit system at boundary value m.
/// The positivity threshold is 0 here: v inside Omega1 is legitimately tiny. Throws
/// SolverError when a requested point has no coexistence state.
LimitApproach limit_approach(const Mesh& mesh, const ModelParams& p, double m, std::vector<double> lambda1_values,
                             double factor = 1.1);

}  // namespace membrana
