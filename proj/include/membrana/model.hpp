#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>

#include "membrana/operators.hpp"

namespace membrana {

/// Numerical margin around sign thresholds inside which no classification is made.
inline constexpr double kEpsilonBand = 1e-6;
/// Minimum nodal value for a component to count as present.
inline constexpr double kPositivityThreshold = 1e-8;

/// Failure of an iterative nonlinear solve (as opposed to a proven non-existence).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Positive coefficient given either as a constant or as a profile in x.
struct SpatialCoefficient {
  double constant = 1.0;
  std::function<double(double)> profile;

  SpatialCoefficient() = default;
  SpatialCoefficient(double c) : constant(c) {}  // NOLINT: implicit by intent
  static SpatialCoefficient of(std::function<double(double)> f) {
    SpatialCoefficient s;
    s.profile = std::move(f);
    return s;
  }

  bool is_constant() const { return !profile; }
  Vector sample(std::span<const double> x) const;
  /// Minimum over the given nodes (the (alpha)_L of the bounds).
  double min_on(std::span<const double> x) const;
};

/// Scalars of the three-species system. Growth rates may have any sign.
struct ModelParams {
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double mu = 1.0;
  SpatialCoefficient alpha1 = 1.0;
  SpatialCoefficient alpha2 = 1.0;
  double a1 = 0.5;
  double a2 = 0.5;
  double b1 = 0.5;
  double b2 = 0.5;
  double beta = 1.0;
  double d = 1.0;
  Geometry1D geometry;

  /// Throws ValidationError unless alpha_i > 0, a_i, b_i, beta, d > 0 and the geometry is valid.
  void validate(const Mesh* mesh = nullptr) const;

  /// max{lambda1 / (alpha1)_L, lambda2 / (alpha2)_L}.
  double u_bound(const Mesh& mesh) const;
};

/// Nodal fields of a state (u1 on Omega1, u2 on Omega2, v on Omega).
struct StateTriple {
  Vector u1;
  Vector u2;
  Vector v;
  bool positive_u1 = false;
  bool positive_u2 = false;
  bool positive_v = false;

  /// Recomputes the positivity flags against `delta`.
  void classify(double delta = kPositivityThreshold);
  bool coexistence() const { return positive_u1 && positive_u2 && positive_v; }
  double min_u1() const { return u1.minCoeff(); }
  double min_u2() const { return u2.minCoeff(); }
  double min_v() const { return v.minCoeff(); }

  /// Sup distance over all three fields.
  double distance(const StateTriple& other) const;
};

struct SemitrivialPair {
  Vector theta1;
  Vector theta2;
};

enum class Existence { Positive, NoPositiveSolution, Indeterminate };

std::string to_string(Existence e);

}  // namespace membrana
