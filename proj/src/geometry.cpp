#include "membrana/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace membrana {

std::string to_string(Region r) {
  switch (r) {
    case Region::Omega1:
      return "omega1";
    case Region::Omega2:
      return "omega2";
    case Region::Omega:
      return "omega";
  }
  return "?";
}

void Geometry1D::validate() const {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(x_left) || !finite(x_right) || !finite(a) || !finite(b) || !finite(gamma1) ||
      !finite(gamma2)) {
    throw ValidationError("geometry: non-finite entry");
  }
  if (!(x_left < a && a < b && b < x_right)) {
    std::ostringstream os;
    os << "geometry: need x_left < a < b < x_right, got " << x_left << ", " << a << ", " << b
       << ", " << x_right;
    throw ValidationError(os.str());
  }
  if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) {
    throw ValidationError("geometry: permeabilities gamma1, gamma2 must be positive");
  }
}

Measures measures(const Geometry1D& geom) {
  return {geom.b - geom.a, (geom.a - geom.x_left) + (geom.x_right - geom.b)};
}

namespace {

Segment make_segment(Region region, double x0, double x1, int n_per_unit) {
  const double len = x1 - x0;
  int n = static_cast<int>(std::ceil(len * n_per_unit - 1e-9));
  n = std::max(n, 2);
  return {region, x0, x1, n, len / n};
}

// Nodes of a segment; end points are the exact geometry values.
void append_nodes(const Segment& s, std::vector<double>& x, std::vector<double>& w) {
  for (int i = 0; i <= s.intervals; ++i) {
    double xi = (i == s.intervals) ? s.x1 : s.x0 + i * s.h;
    x.push_back(xi);
    w.push_back((i == 0 || i == s.intervals) ? 0.5 * s.h : s.h);
  }
}

}  // namespace

Mesh build_mesh(const Geometry1D& geom, int n_per_unit) {
  geom.validate();
  if (n_per_unit < 8) {
    throw ValidationError("mesh: n_per_unit must be at least 8");
  }
  Mesh m;
  m.geom_ = geom;
  m.n_per_unit_ = n_per_unit;
  m.segments_ = {make_segment(Region::Omega2, geom.x_left, geom.a, n_per_unit),
                 make_segment(Region::Omega1, geom.a, geom.b, n_per_unit),
                 make_segment(Region::Omega2, geom.b, geom.x_right, n_per_unit)};
  const auto& [left, inner, right] = m.segments_;

  append_nodes(inner, m.x1_, m.w1_);
  append_nodes(left, m.x2_, m.w2_);
  m.left_count_ = m.x2_.size();
  append_nodes(right, m.x2_, m.w2_);

  // Omega: left nodes, inner nodes without a, right nodes without b.
  std::vector<double> wi, wr, tmp;
  append_nodes(left, m.x_, m.w_);
  m.omega_a_ = m.x_.size() - 1;
  append_nodes(inner, tmp, wi);
  for (std::size_t i = 1; i < tmp.size(); ++i) {
    m.x_.push_back(tmp[i]);
    m.w_.push_back(wi[i]);
  }
  m.w_[m.omega_a_] += wi[0];
  m.omega_b_ = m.x_.size() - 1;
  tmp.clear();
  append_nodes(right, tmp, wr);
  m.w_[m.omega_b_] += wr[0];
  for (std::size_t i = 1; i < tmp.size(); ++i) {
    m.x_.push_back(tmp[i]);
    m.w_.push_back(wr[i]);
  }

  m.map1_.resize(m.x1_.size());
  for (std::size_t i = 0; i < m.x1_.size(); ++i) m.map1_[i] = m.omega_a_ + i;
  m.map2_.resize(m.x2_.size());
  for (std::size_t i = 0; i < m.left_count_; ++i) m.map2_[i] = i;
  for (std::size_t i = m.left_count_; i < m.x2_.size(); ++i) {
    m.map2_[i] = m.omega_b_ + (i - m.left_count_);
  }

  for (std::size_t i = 0; i < m.left_count_; ++i) {
    m.nodes_.push_back(m.x2_[i]);
    m.tags_.push_back(Region::Omega2);
  }
  for (double x : m.x1_) {
    m.nodes_.push_back(x);
    m.tags_.push_back(Region::Omega1);
  }
  for (std::size_t i = m.left_count_; i < m.x2_.size(); ++i) {
    m.nodes_.push_back(m.x2_[i]);
    m.tags_.push_back(Region::Omega2);
  }
  const std::size_t n1 = m.x1_.size();
  m.interface_nodes_ = {m.left_count_ - 1, m.left_count_, m.left_count_ + n1 - 1,
                        m.left_count_ + n1};
  return m;
}

std::span<const double> Mesh::coords(Region r) const {
  switch (r) {
    case Region::Omega1:
      return x1_;
    case Region::Omega2:
      return x2_;
    case Region::Omega:
      return x_;
  }
  return {};
}

std::span<const double> Mesh::weights(Region r) const {
  switch (r) {
    case Region::Omega1:
      return w1_;
    case Region::Omega2:
      return w2_;
    case Region::Omega:
      return w_;
  }
  return {};
}

std::vector<Component> Mesh::components(Region r) const {
  switch (r) {
    case Region::Omega1:
      return {{0, x1_.size()}};
    case Region::Omega2:
      return {{0, left_count_}, {left_count_, x2_.size()}};
    case Region::Omega:
      return {{0, x_.size()}};
  }
  return {};
}

std::span<const std::size_t> Mesh::omega_index(Region r) const {
  if (r == Region::Omega1) return map1_;
  if (r == Region::Omega2) return map2_;
  throw std::logic_error("omega_index: only defined for Omega1 and Omega2");
}

Region Mesh::omega_node_region(std::size_t j) const {
  if (j == omega_a_ || j == omega_b_) return Region::Omega;
  return (j > omega_a_ && j < omega_b_) ? Region::Omega1 : Region::Omega2;
}

}  // namespace membrana
