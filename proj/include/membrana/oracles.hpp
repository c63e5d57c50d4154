#pragma once

#include <cstdint>

#include "membrana/nonlinear.hpp"

/// Independent reference computations for tests and manual inspection. Nothing in the
/// production solvers calls into this namespace.
namespace membrana::oracles {

/// End-point condition of the model interval problem -phi'' = rho phi on (0, length).
struct IntervalEnd {
  enum class Kind { Neumann, Robin, Dirichlet };
  Kind kind = Kind::Neumann;
  double gamma = 0.0;  ///< Robin coefficient in d_n phi + gamma phi = 0

  static IntervalEnd neumann() { return {Kind::Neumann, 0.0}; }
  static IntervalEnd robin(double g) { return {Kind::Robin, g}; }
  static IntervalEnd dirichlet() { return {Kind::Dirichlet, 0.0}; }
};

struct TranscendentalSpec {
  double length = 1.0;
  IntervalEnd left;
  IntervalEnd right;
};

/// Smallest eigenvalue of -phi'' = rho phi from the exact characteristic function,
/// located by a sign scan over sqrt(rho) in [0, 2 pi / length] and bisection to 1e-12.
double interval_eigen_oracle(const TranscendentalSpec& spec);

/// Principal eigenvalue by dense inverse iteration from 20 random starts. Dirichlet rows
/// are eliminated as in production. Throws std::runtime_error when the starts disagree
/// by more than 1e-10 or the dimension exceeds 2000.
double dense_eigen_oracle(const SparseOperator& op, std::uint64_t seed = 0);

enum class Problem { LogisticNeumann, Omega1, Omega2, SemitrivialPair, Coexistence };

/// Re-runs a production solver on a mesh with `n_fine` intervals per unit length.
/// Returned fields: logistic / omega -> the field; pair -> [theta1; theta2];
/// coexistence -> [u1; u2; v]. An empty vector means no positive solution was found.
/// For LogisticNeumann the potential is zero, the region Omega and the rate p.mu.
Vector fine_grid_reference(Problem problem, const ModelParams& p, int n_fine);

/// Sup distance between a coarse nodal field and a fine one sampled at the coarse nodes.
/// Coarse nodes must be a subset of the fine nodes (n_fine a multiple of n_coarse).
double nested_sup_difference(std::span<const double> x_coarse, const Vector& coarse,
                             std::span<const double> x_fine, const Vector& fine);

}  // namespace membrana::oracles
