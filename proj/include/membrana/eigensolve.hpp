#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "membrana/operators.hpp"

namespace membrana {

/// Raised when inverse iteration fails to converge; carries the last residual.
class EigenError : public std::runtime_error {
 public:
  EigenError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

struct EigenOptions {
  int max_iterations = 10000;
  double vector_tol = 1e-10;  ///< relative sup-norm change of the eigenvector
  /// Absolute residual target. The effective bound is never tighter than the
  /// round-off floor 256 * eps * ||A||_inf of the operator at hand.
  double residual_tol = 1e-9;
};

struct EigenResult {
  double value = 0.0;
  Vector eigenfunction;  ///< sup-norm 1, positive on the component that carries it
  double residual = 0.0;  ///< ||A phi - value phi||_inf
  int iterations = 0;
};

/// Principal eigenpair of an irreducible Z-matrix (non-positive off-diagonal).
///
/// Shifted inverse iteration. With x > 0 and s below the principal eigenvalue,
/// y = (A - sI)^{-1} x is positive and the ratios x_i / y_i bracket value - s
/// (Collatz-Wielandt). The shift is moved to the lower bracket after each step, which
/// keeps it below the principal eigenvalue.
EigenResult principal_eigenpair(const SparseOperator& op, const EigenOptions& opts = {});

/// sigma_1 of -d u'' + c u with the given end-point conditions on `region`. Dirichlet
/// nodes are removed from the eigenproblem (eigenfunction is zero there). On the
/// two-piece Omega2 the pieces decouple; the smaller piece eigenvalue is returned and its
/// eigenfunction is extended by zero to the other piece.
EigenResult sigma1(const Mesh& mesh, Region region, double d, const CoefficientField& c,
                   const BoundarySpec& bc, const EigenOptions& opts = {});

/// sigma_1 of every connected component of `region` separately (one entry for Omega1 and
/// Omega, two for Omega2), each eigenfunction extended by zero.
std::vector<EigenResult> sigma1_components(const Mesh& mesh, Region region, double d,
                                          const CoefficientField& c, const BoundarySpec& bc,
                                          const EigenOptions& opts = {});

/// Lambda_1 of the membrane-coupled pair (-d u'' + c1 on Omega1, -d u'' + c2 on Omega2).
/// The eigenfunction is the stacked vector (phi1, phi2).
EigenResult lambda1(const Mesh& mesh, double d, const CoefficientField& c1,
                    const CoefficientField& c2, const EigenOptions& opts = {});

/// Convenience for constant potentials.
EigenResult lambda1(const Mesh& mesh, double d, double c1, double c2, const EigenOptions& opts = {});

/// Samples (mu, Lambda_1(mu c1, mu c2)).
std::vector<std::pair<double, double>> lambda1_growth_check(const Mesh& mesh, double d,
                                                            const CoefficientField& c1,
                                                            const CoefficientField& c2,
                                                            const std::vector<double>& mu_list);

}  // namespace membrana
