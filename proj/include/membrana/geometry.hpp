#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace membrana {

/// Thrown when a geometry, mesh or parameter set violates its invariants.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Region { Omega1, Omega2, Omega };

std::string to_string(Region r);

/// One-dimensional habitat: Omega = (x_left, x_right), inner patch Omega1 = (a, b),
/// outer patch Omega2 = (x_left, a) u (b, x_right). The membrane Sigma is {a, b}
/// and the outer boundary Gamma is {x_left, x_right}.
struct Geometry1D {
  double x_left = 0.0;
  double x_right = 1.0;
  double a = 1.0 / 3.0;
  double b = 2.0 / 3.0;
  double gamma1 = 1.0;  ///< permeability in the u1 flux condition
  double gamma2 = 2.0;  ///< permeability in the u2 flux condition

  void validate() const;

  /// x_L=0, x_R=1, a=1/3, b=2/3, gamma1=1, gamma2=2.
  static Geometry1D canonical() { return {}; }
};

struct Measures {
  double omega1 = 0.0;
  double omega2 = 0.0;
};

Measures measures(const Geometry1D& geom);

/// Uniform sub-grid of one of the three segments (left Omega2, Omega1, right Omega2).
struct Segment {
  Region region = Region::Omega2;
  double x0 = 0.0;
  double x1 = 0.0;
  int intervals = 0;
  double h = 0.0;
};

/// Contiguous run of region-local node indices forming one connected piece.
struct Component {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last node
  std::size_t size() const { return end - begin; }
};

/// Node layout over the three segments.
///
/// Fields live on three node sets:
///  - Omega1: the nodes of the inner segment, a and b included;
///  - Omega2: the nodes of the left segment followed by the nodes of the right segment;
///  - Omega: every distinct coordinate once, left to right.
/// On the first two sets each interface coordinate appears once per side; in `nodes()`
/// (the concatenation left Omega2, Omega1, right Omega2) a and b therefore appear twice.
class Mesh {
 public:
  const Geometry1D& geometry() const { return geom_; }
  int n_per_unit() const { return n_per_unit_; }
  const std::array<Segment, 3>& segments() const { return segments_; }

  std::size_t size(Region r) const { return coords(r).size(); }
  std::span<const double> coords(Region r) const;
  std::span<const double> weights(Region r) const;
  std::vector<Component> components(Region r) const;

  /// Index into the Omega node set of each Omega1 / Omega2 node.
  std::span<const std::size_t> omega_index(Region r) const;

  /// All nodes, interface coordinates duplicated, with their region tags.
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<Region>& region_tags() const { return tags_; }
  /// Positions in `nodes()` of (a | Omega2 side), (a | Omega1 side), (b | Omega1 side),
  /// (b | Omega2 side).
  std::array<std::size_t, 4> interface_nodes() const { return interface_nodes_; }

  /// Omega-node indices of a and b.
  std::size_t omega_node_a() const { return omega_a_; }
  std::size_t omega_node_b() const { return omega_b_; }

  /// Interior Omega node -> region it lies in (interface nodes report Omega).
  Region omega_node_region(std::size_t j) const;

 private:
  friend Mesh build_mesh(const Geometry1D& geom, int n_per_unit);

  Geometry1D geom_;
  int n_per_unit_ = 0;
  std::array<Segment, 3> segments_{};
  std::vector<double> x1_, x2_, x_;
  std::vector<double> w1_, w2_, w_;
  std::vector<std::size_t> map1_, map2_;
  std::size_t left_count_ = 0;  // Omega2 nodes on the left segment
  std::size_t omega_a_ = 0, omega_b_ = 0;
  std::vector<double> nodes_;
  std::vector<Region> tags_;
  std::array<std::size_t, 4> interface_nodes_{};
};

/// Every segment gets ceil(length * n_per_unit) uniform intervals.
Mesh build_mesh(const Geometry1D& geom, int n_per_unit);

}  // namespace membrana
