#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

#include "membrana/geometry.hpp"

namespace membrana {

using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Nodal values of a potential on one node set of the mesh.
struct CoefficientField {
  Region region = Region::Omega;
  Vector values;

  static CoefficientField constant(const Mesh& mesh, Region region, double c);
  static CoefficientField from(Region region, Vector values) { return {region, std::move(values)}; }

  /// Throws ValidationError on length mismatch or non-finite entries.
  void check(const Mesh& mesh) const;
};

/// Condition at one segment end point.
///  Neumann:   d_n phi = 0
///  Robin:     d_n phi + g phi = 0          (value = g)
///  Dirichlet: phi = value                  (identity row; caller moves value to the rhs)
///  Membrane:  d_n u_i = gamma_i (u_j - u_i) (interface points only)
struct EndpointCondition {
  enum class Kind { Neumann, Robin, Dirichlet, Membrane };
  Kind kind = Kind::Neumann;
  double value = 0.0;

  static EndpointCondition neumann() { return {Kind::Neumann, 0.0}; }
  static EndpointCondition robin(double g) { return {Kind::Robin, g}; }
  static EndpointCondition dirichlet(double v) { return {Kind::Dirichlet, v}; }
  static EndpointCondition membrane() { return {Kind::Membrane, 0.0}; }
};

/// One condition per end point of every component of a region, left to right:
/// Omega1 -> {a, b}; Omega2 -> {x_left, a, b, x_right}; Omega -> {x_left, x_right}.
struct BoundarySpec {
  std::vector<EndpointCondition> endpoints;

  static std::size_t endpoint_count(Region r) { return r == Region::Omega2 ? 4 : 2; }
  /// True when end point `k` of region `r` lies on the membrane.
  static bool on_interface(Region r, std::size_t k);

  static BoundarySpec neumann(Region r);
  /// Robin with the region's own permeability on the membrane, Neumann on Gamma.
  /// For Omega1 this is N+gamma1 at both ends; for Omega2, N+gamma2 on Sigma.
  static BoundarySpec robin_on_interface(const Geometry1D& geom, Region r);
  /// Dirichlet(value) on the membrane, Neumann on Gamma.
  static BoundarySpec dirichlet_on_interface(Region r, double value);

  void check(Region r) const;
};

struct SparseOperator {
  RowMatrix matrix;
  bool symmetric = false;
  /// Rows replaced by identity rows (Dirichlet end points).
  std::vector<bool> dirichlet_rows;

  Eigen::Index dim() const { return matrix.rows(); }
  bool has_dirichlet() const;
};

/// -d u'' + c u on the nodes of `region` with the given end-point conditions.
/// Interior rows use the three-point stencil; Neumann and Robin rows use ghost-point
/// elimination.
SparseOperator assemble_scalar(const Mesh& mesh, Region region, double d, const CoefficientField& c,
                               const BoundarySpec& bc);

/// Block operator acting on (u1 on Omega1 nodes, u2 on Omega2 nodes) with the
/// Kedem-Katchalsky conditions on Sigma and homogeneous Neumann on Gamma.
///
/// Orientation: n1 points out of Omega1, n2 = -n1 points out of Omega2, and
///   d_{n1} u1 = gamma1 (u2 - u1),   d_{n2} u2 = gamma2 (u1 - u2).
/// The flux condition carries no factor d.
SparseOperator assemble_interface(const Mesh& mesh, double d, const CoefficientField& c1,
                                  const CoefficientField& c2);

/// Same block operator with independent diffusion per block (used by the parabolic stepper).
SparseOperator assemble_interface(const Mesh& mesh, double d1, double d2,
                                  const CoefficientField& c1, const CoefficientField& c2);

Vector apply(const SparseOperator& op, const Vector& x);

/// Potential on the Omega nodes from nodal values on Omega1 and Omega2. At a and b the
/// two one-sided values are blended with the adjacent half-cell lengths.
Vector combine_on_omega(const Mesh& mesh, const Vector& on_omega1, const Vector& on_omega2);

/// Restriction of an Omega field to the Omega1 / Omega2 node sets.
Vector restrict_to(const Mesh& mesh, Region r, const Vector& on_omega);

/// Blend weights used by combine_on_omega at an interface Omega node: (omega1 side, omega2 side).
std::pair<double, double> interface_blend(const Mesh& mesh, std::size_t omega_node);

}  // namespace membrana
