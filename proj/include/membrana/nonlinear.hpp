#pragma once

#include <optional>
#include <vector>

#include "membrana/eigensolve.hpp"
#include "membrana/model.hpp"

namespace membrana {

struct NewtonOptions {
  int max_iterations = 500;
  double residual_tol = 1e-10;  ///< absolute sup-norm target (raised to the round-off floor)
};

/// Result of a logistic-type solve. `field` is empty unless status == Positive.
struct FieldSolution {
  Existence status = Existence::NoPositiveSolution;
  Vector field;
  double residual = 0.0;
  int iterations = 0;
  double threshold = 0.0;  ///< principal eigenvalue deciding existence
};

struct PairSolution {
  Existence status = Existence::NoPositiveSolution;
  SemitrivialPair pair;
  double residual = 0.0;
  int iterations = 0;
  double lambda1_value = 0.0;  ///< Lambda_1(-lambda1, -lambda2)
};

/// -d u'' = u (mu - c - beta u) on `region` with homogeneous conditions `bc`.
/// Exists iff mu > sigma_1[-d u'' + c; bc]; within kEpsilonBand of the threshold the
/// status is Indeterminate.
FieldSolution solve_logistic_scalar(const Mesh& mesh, Region region, double mu,
                                    const CoefficientField& c, const SpatialCoefficient& beta,
                                    const BoundarySpec& bc, double d = 1.0,
                                    const NewtonOptions& opts = {});

/// omega_1 (Robin gamma1 at both ends of Omega1) or omega_2 (Robin gamma2 on Sigma,
/// Neumann on Gamma): -d u'' = u (lambda - alpha u).
FieldSolution solve_omega(const Mesh& mesh, int which, double lambda, const SpatialCoefficient& alpha,
                          double d = 1.0, const NewtonOptions& opts = {});

/// The membrane logistic pair (theta_{lambda1}, theta_{lambda2}).
PairSolution solve_membrane_logistic(const Mesh& mesh, double lambda1, double lambda2,
                                     const SpatialCoefficient& alpha1,
                                     const SpatialCoefficient& alpha2, double d = 1.0,
                                     const NewtonOptions& opts = {});

struct LargeSolution {
  std::vector<double> m_values;
  std::vector<Vector> fields;  ///< one per M, on the Omega2 nodes
  /// increments[k][i] = (fields[k+1][i] - fields[k][i]) / fields[k+1][i]
  std::vector<Vector> increments;
  bool monotone = true;

  const Vector& field() const { return fields.back(); }
  /// Largest relative increment of the last step over nodes at least `dist` from Sigma.
  double max_increment_beyond(const Mesh& mesh, double dist) const;
};

/// -d u'' = u (lambda2 - alpha2 u) on Omega2, u = M on Sigma, Neumann on Gamma, for each M.
/// Throws SolverError when the fields fail to increase with M.
LargeSolution approximate_large_solution(const Mesh& mesh, double lambda2,
                                         const SpatialCoefficient& alpha2,
                                         const std::vector<double>& m_list, double d = 1.0,
                                         const NewtonOptions& opts = {});

/// Residual of the discretized three-species system, stacked [u1; u2; v].
Vector coexistence_residual(const Mesh& mesh, const ModelParams& p, const StateTriple& s);

/// Jacobian of coexistence_residual.
RowMatrix coexistence_jacobian(const Mesh& mesh, const ModelParams& p, const StateTriple& s);

struct CoexistenceOptions {
  int max_iterations = 200;
  double residual_tol = 1e-9;
  double delta = kPositivityThreshold;
  /// Try the built-in fallback initial guesses when the Auto guess fails.
  bool fallbacks = true;
};

struct CoexistenceResult {
  bool found = false;
  StateTriple state;  ///< last iterate (meaningful when found)
  double residual = 0.0;
  int iterations = 0;
  std::string note;  ///< why the search failed, or which start succeeded
};

/// Damped Newton from `init`, or from the Auto guess (theta1, theta2, 0.05 mu phi_v)
/// when init is empty.
CoexistenceResult solve_coexistence(const Mesh& mesh, const ModelParams& p,
                                    const std::optional<StateTriple>& init = std::nullopt,
                                    const CoexistenceOptions& opts = {});

/// Newton polish of a given state without positivity requirements. Used by continuation.
CoexistenceResult newton_coexistence(const Mesh& mesh, const ModelParams& p, StateTriple start,
                                     const CoexistenceOptions& opts = {});

struct EvolveOptions {
  /// Stop early once the sup-norm change per unit time falls below this (0 disables).
  double steady_tol = 0.0;
};

struct EvolveResult {
  StateTriple state;
  double t = 0.0;
  int steps = 0;
  bool reached_steady = false;
};

/// Positivity-preserving IMEX stepping of the parabolic system: diffusion, membrane
/// coupling and the loss part of the reaction implicit, the gain part explicit.
/// Throws SolverError when a component exceeds 10 times its a priori bound.
EvolveResult evolve_parabolic(const Mesh& mesh, const ModelParams& p, const StateTriple& init,
                              double t_end, double dt, const EvolveOptions& opts = {});

/// v-equation eigenvalue deciding the instability of (theta1, theta2, 0):
/// sigma_1^Omega[-d v'' + b1 theta1 chi1 + b2 theta2 chi2; Neumann].
EigenResult v_eigen_at_semitrivial(const Mesh& mesh, const ModelParams& p,
                                   const SemitrivialPair& pair);

}  // namespace membrana
