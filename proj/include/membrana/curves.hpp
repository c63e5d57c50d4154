#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include "membrana/nonlinear.hpp"

namespace membrana {

/// Raised when a curve or threshold is requested outside the parameter range where it is
/// defined (for example mu0 without a semitrivial pair).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class CurveFlag { OK, OutOfDomain, Indeterminate };
std::string to_string(CurveFlag f);

struct CurveSample {
  double abscissa = 0.0;
  double value = 0.0;
  double residual = 0.0;  ///< |Lambda_1| at the root, or the eigen residual
  CurveFlag flag = CurveFlag::OK;
};

enum class PointClass { CoexistencePredicted, NonExistenceNecessary, NonExistenceLarge, Indeterminate };
std::string to_string(PointClass c);

struct Sigma0Result {
  double sigma0 = 0.0;
  double ghat = 0.0;
  /// |H(sigma0) + a1 mu - Ghat|; the two definitions of Ghat must agree.
  double consistency = 0.0;
  CurveFlag flag = CurveFlag::OK;
};

/// Values of the three candidate readings of the lambda1 -> -infinity limit of g.
struct LimitVariants {
  double g_probe = 0.0;           ///< g at the probe lambda1
  double probe_lambda1 = 0.0;
  double omega2_neumann = 0.0;    ///< sigma_1^{Omega2}[-d u'' + b2 omega2; Neumann everywhere]
  double omega2_robin = 0.0;      ///< sigma_1^{Omega2}[-d u'' + b2 omega2; Neumann + gamma2 on Sigma]
  double whole_domain = 0.0;      ///< sigma_1^{Omega}[-d u'' + b2 omega2 chi2; Neumann]
  std::string closest;            ///< "neumann", "robin" or "whole"
};

/// Bracketed root of an increasing function: bisection to `bisect_width`, then secant
/// steps (kept inside the bracket) until the step is below `secant_tol` or |f| <= f_tol.
struct RootResult {
  double x = 0.0;
  double f = 0.0;
  int evaluations = 0;
};
RootResult find_root_increasing(const std::function<double(double)>& f, double lo, double hi,
                                double f_lo, double f_hi, double f_tol = 1e-9,
                                double bisect_width = 1e-6, double secant_tol = 1e-10);

/// Curve evaluations for one geometry, mesh and set of coefficients (alpha, a, b, beta, d).
/// The growth rates lambda1, lambda2 and mu of `params` are not used: they are arguments
/// of the individual evaluations. Eigenvalue and semitrivial solves are cached by their
/// arguments; the cache is safe for concurrent use and holds deterministic values only.
class CurveEngine {
 public:
  CurveEngine(Mesh mesh, ModelParams params);

  const Mesh& mesh() const { return mesh_; }
  const ModelParams& params() const { return params_; }

  /// sigma_1 = sigma_1^{Omega1}[-d u''; Neumann + gamma1] and sigma_2 on Omega2.
  double sigma1() const { return sigma1_; }
  double sigma2() const { return sigma2_; }

  /// Lambda_1(c1, c2) for constant potentials (cached).
  double lambda1_const(double c1, double c2) const;

  /// The membrane logistic pair (cached).
  std::shared_ptr<const PairSolution> semitrivial(double lambda1, double lambda2) const;

  /// H(nu2): the nu1 with Lambda_1(-nu1, -nu2) = 0. Defined for nu2 < sigma2 - band.
  CurveSample curve_H(double nu2) const;
  /// Richardson-refined central difference of H at 0 (step 1e-3).
  double curve_H_slope_at_zero() const;
  /// -(gamma1/gamma2)(|Omega2|/|Omega1|).
  double curve_H_slope_formula() const;

  /// G(mu) = a1 mu + H(lambda2 - a2 mu), defined for mu > (lambda2 - sigma2)/a2 + band.
  CurveSample curve_G(double mu, double lambda2) const;

  /// g(lambda1) = sigma_1^Omega[-d u'' + b1 theta1 chi1 + b2 theta2 chi2; Neumann].
  CurveSample curve_g(double lambda1, double lambda2) const;
  /// g with lambda1 = lambda2 = lambda; OutOfDomain for lambda <= 0.
  CurveSample curve_g_equal(double lambda) const;

  /// mu0 = g(lambda1) (same code path). Throws DomainError without a semitrivial pair.
  double compute_mu0(double lambda1, double lambda2) const;
  /// Root of mu -> Lambda_1(-lambda1 + a1 mu, -lambda2 + a2 mu) on [0, max(l1/a1, l2/a2) + 1].
  /// Empty when there is no sign change on that window; throws DomainError when
  /// Lambda_1(-lambda1, -lambda2) >= 0.
  std::optional<double> compute_mu1(double lambda1, double lambda2) const;

  /// sigma0(mu) solving -sigma + H(sigma) = (a2 - a1) mu, and Ghat = sigma0 + a2 mu.
  Sigma0Result curve_sigma0_and_Ghat(double mu) const;

  /// Smallest mu with Lambda_1(-l1 + a1 w, -l2 + a2 w) >= 0, where w is the logistic
  /// solution on Omega with potential K (b1 chi1 + b2 chi2), K = max(l1/a1_L, l2/a2_L).
  /// No coexistence state exists above this value.
  double mu_star_constructive(double lambda1, double lambda2) const;
  /// Equal-lambda counterpart: smallest lambda with
  /// sigma_1^Omega[-d u'' + b1 w1 chi1 + b2 w2 chi2; N] >= mu, w_i = omega_i at lambda - a_i mu.
  double lambda_star_constructive(double mu) const;

  /// Classification of (lambda1, lambda2, mu) by the necessary condition, the sufficient
  /// product condition and (optionally) the constructive mu* bound.
  PointClass classify_point(double lambda1, double lambda2, double mu, bool use_large_bound = true) const;

  /// Evaluates the candidate limits of g as lambda1 -> -infinity (needs lambda2 > sigma2).
  LimitVariants limiminus_variants(double lambda2, double probe_lambda1 = -1e3) const;

  /// Dirichlet(Sigma)/Neumann(Gamma) eigenvalue on Omega2 with potential b2 * field.
  double dirichlet_neumann_eigenvalue(const Vector& field_on_omega2) const;

 private:
  using Key = std::pair<double, double>;

  Mesh mesh_;
  ModelParams params_;
  double sigma1_ = 0.0;
  double sigma2_ = 0.0;

  mutable std::mutex mutex_;
  mutable std::map<Key, double> lambda_cache_;
  mutable std::map<Key, std::shared_ptr<const PairSolution>> pair_cache_;
  mutable std::map<Key, CurveSample> h_cache_;
  mutable std::map<Key, double> mu_star_cache_;
};

}  // namespace membrana
