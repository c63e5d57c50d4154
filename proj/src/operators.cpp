#include "membrana/operators.hpp"

#include <cmath>
#include <sstream>

namespace membrana {

CoefficientField CoefficientField::constant(const Mesh& mesh, Region region, double c) {
  return {region, Vector::Constant(static_cast<Eigen::Index>(mesh.size(region)), c)};
}

void CoefficientField::check(const Mesh& mesh) const {
  if (static_cast<std::size_t>(values.size()) != mesh.size(region)) {
    std::ostringstream os;
    os << "coefficient field on " << to_string(region) << " has " << values.size()
       << " entries, mesh has " << mesh.size(region);
    throw ValidationError(os.str());
  }
  if (!values.allFinite()) throw ValidationError("coefficient field has non-finite entries");
}

bool BoundarySpec::on_interface(Region r, std::size_t k) {
  switch (r) {
    case Region::Omega1:
      return true;
    case Region::Omega2:
      return k == 1 || k == 2;
    case Region::Omega:
      return false;
  }
  return false;
}

BoundarySpec BoundarySpec::neumann(Region r) {
  return {std::vector<EndpointCondition>(endpoint_count(r), EndpointCondition::neumann())};
}

BoundarySpec BoundarySpec::robin_on_interface(const Geometry1D& geom, Region r) {
  BoundarySpec bc = neumann(r);
  const double g = (r == Region::Omega1) ? geom.gamma1 : geom.gamma2;
  for (std::size_t k = 0; k < bc.endpoints.size(); ++k) {
    if (on_interface(r, k)) bc.endpoints[k] = EndpointCondition::robin(g);
  }
  return bc;
}

BoundarySpec BoundarySpec::dirichlet_on_interface(Region r, double value) {
  BoundarySpec bc = neumann(r);
  for (std::size_t k = 0; k < bc.endpoints.size(); ++k) {
    if (on_interface(r, k)) bc.endpoints[k] = EndpointCondition::dirichlet(value);
  }
  return bc;
}

void BoundarySpec::check(Region r) const {
  if (endpoints.size() != endpoint_count(r)) {
    std::ostringstream os;
    os << "boundary spec for " << to_string(r) << " needs " << endpoint_count(r)
       << " end-point conditions, got " << endpoints.size();
    throw ValidationError(os.str());
  }
  for (std::size_t k = 0; k < endpoints.size(); ++k) {
    const auto& e = endpoints[k];
    if (e.kind == EndpointCondition::Kind::Membrane && !on_interface(r, k)) {
      throw ValidationError("membrane condition placed off the interface");
    }
    if (!std::isfinite(e.value)) throw ValidationError("boundary value is not finite");
  }
}

bool SparseOperator::has_dirichlet() const {
  for (bool b : dirichlet_rows) {
    if (b) return true;
  }
  return false;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

struct MembraneLink {
  Eigen::Index partner = -1;  // global column of the other side's interface unknown
  double gamma = 0.0;
};

// Rows of one connected component whose local nodes are x[begin, end).
void component_rows(std::span<const double> x, const Component& comp, Eigen::Index offset,
                    double d, const Vector& c, const EndpointCondition& left,
                    const EndpointCondition& right, MembraneLink left_link,
                    MembraneLink right_link, Triplets& t, std::vector<bool>& dirichlet) {
  const auto begin = static_cast<Eigen::Index>(comp.begin);
  const auto end = static_cast<Eigen::Index>(comp.end);
  auto row_of = [&](Eigen::Index j) { return offset + j; };

  for (Eigen::Index j = begin + 1; j + 1 < end; ++j) {
    const double hl = x[j] - x[j - 1];
    const double hr = x[j + 1] - x[j];
    const double s = 2.0 * d / (hl + hr);
    t.emplace_back(row_of(j), row_of(j - 1), -s / hl);
    t.emplace_back(row_of(j), row_of(j + 1), -s / hr);
    t.emplace_back(row_of(j), row_of(j), s / hl + s / hr + c[j]);
  }

  auto end_row = [&](Eigen::Index j, Eigen::Index inner, double h, const EndpointCondition& e,
                     MembraneLink link) {
    using K = EndpointCondition::Kind;
    if (e.kind == K::Dirichlet) {
      t.emplace_back(row_of(j), row_of(j), 1.0);
      dirichlet[row_of(j)] = true;
      return;
    }
    double diag = 2.0 * d / (h * h) + c[j];
    t.emplace_back(row_of(j), row_of(inner), -2.0 * d / (h * h));
    if (e.kind == K::Robin) diag += 2.0 * d * e.value / h;
    if (e.kind == K::Membrane) {
      diag += 2.0 * d * link.gamma / h;
      t.emplace_back(row_of(j), link.partner, -2.0 * d * link.gamma / h);
    }
    t.emplace_back(row_of(j), row_of(j), diag);
  };
  end_row(begin, begin + 1, x[begin + 1] - x[begin], left, left_link);
  end_row(end - 1, end - 2, x[end - 1] - x[end - 2], right, right_link);
}

SparseOperator finish(Eigen::Index n, Triplets& t, std::vector<bool> dirichlet) {
  SparseOperator op;
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(t.begin(), t.end());
  op.matrix.makeCompressed();
  op.dirichlet_rows = std::move(dirichlet);
  RowMatrix diff = RowMatrix(op.matrix.transpose()) - op.matrix;
  op.symmetric = diff.norm() == 0.0;
  return op;
}

}  // namespace

SparseOperator assemble_scalar(const Mesh& mesh, Region region, double d, const CoefficientField& c,
                               const BoundarySpec& bc) {
  if (!(d > 0.0)) throw ValidationError("diffusion d must be positive");
  if (c.region != region) throw ValidationError("coefficient field region mismatch");
  c.check(mesh);
  bc.check(region);
  for (const auto& e : bc.endpoints) {
    if (e.kind == EndpointCondition::Kind::Membrane) {
      throw ValidationError("membrane condition passed to scalar assembly");
    }
  }
  const auto x = mesh.coords(region);
  const auto n = static_cast<Eigen::Index>(x.size());
  Triplets t;
  t.reserve(3 * x.size());
  std::vector<bool> dirichlet(x.size(), false);
  const auto comps = mesh.components(region);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    component_rows(x, comps[k], 0, d, c.values, bc.endpoints[2 * k], bc.endpoints[2 * k + 1], {},
                   {}, t, dirichlet);
  }
  return finish(n, t, std::move(dirichlet));
}

SparseOperator assemble_interface(const Mesh& mesh, double d, const CoefficientField& c1,
                                  const CoefficientField& c2) {
  return assemble_interface(mesh, d, d, c1, c2);
}

SparseOperator assemble_interface(const Mesh& mesh, double d1, double d2,
                                  const CoefficientField& c1, const CoefficientField& c2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) throw ValidationError("diffusion d must be positive");
  if (c1.region != Region::Omega1 || c2.region != Region::Omega2) {
    throw ValidationError("interface assembly needs c1 on Omega1 and c2 on Omega2");
  }
  c1.check(mesh);
  c2.check(mesh);
  const auto& g = mesh.geometry();
  const auto x1 = mesh.coords(Region::Omega1);
  const auto x2 = mesh.coords(Region::Omega2);
  const auto n1 = static_cast<Eigen::Index>(x1.size());
  const auto n2 = static_cast<Eigen::Index>(x2.size());
  const auto comps2 = mesh.components(Region::Omega2);

  // Global columns of the four interface unknowns.
  const Eigen::Index u1_a = 0, u1_b = n1 - 1;
  const Eigen::Index u2_a = n1 + static_cast<Eigen::Index>(comps2[0].end) - 1;
  const Eigen::Index u2_b = n1 + static_cast<Eigen::Index>(comps2[1].begin);

  Triplets t;
  t.reserve(3 * (x1.size() + x2.size()) + 4);
  std::vector<bool> dirichlet(x1.size() + x2.size(), false);
  const auto mem = EndpointCondition::membrane();
  const auto neu = EndpointCondition::neumann();

  component_rows(x1, Component{0, x1.size()}, 0, d1, c1.values, mem, mem, {u2_a, g.gamma1},
                 {u2_b, g.gamma1}, t, dirichlet);
  component_rows(x2, comps2[0], n1, d2, c2.values, neu, mem, {}, {u1_a, g.gamma2}, t, dirichlet);
  component_rows(x2, comps2[1], n1, d2, c2.values, mem, neu, {u1_b, g.gamma2}, {}, t, dirichlet);
  return finish(n1 + n2, t, std::move(dirichlet));
}

Vector apply(const SparseOperator& op, const Vector& x) {
  if (x.size() != op.dim()) {
    std::ostringstream os;
    os << "apply: operator dimension " << op.dim() << ", vector length " << x.size();
    throw ValidationError(os.str());
  }
  return op.matrix * x;
}

std::pair<double, double> interface_blend(const Mesh& mesh, std::size_t omega_node) {
  const auto& seg = mesh.segments();
  const double h1 = seg[1].h;
  const double h2 = (omega_node == mesh.omega_node_a()) ? seg[0].h : seg[2].h;
  return {h1 / (h1 + h2), h2 / (h1 + h2)};
}

Vector combine_on_omega(const Mesh& mesh, const Vector& on_omega1, const Vector& on_omega2) {
  const auto n = static_cast<Eigen::Index>(mesh.size(Region::Omega));
  if (static_cast<std::size_t>(on_omega1.size()) != mesh.size(Region::Omega1) ||
      static_cast<std::size_t>(on_omega2.size()) != mesh.size(Region::Omega2)) {
    throw ValidationError("combine_on_omega: field length mismatch");
  }
  Vector out = Vector::Zero(n);
  const auto m1 = mesh.omega_index(Region::Omega1);
  const auto m2 = mesh.omega_index(Region::Omega2);
  for (std::size_t i = 0; i < m2.size(); ++i) out[m2[i]] = on_omega2[i];
  for (std::size_t i = 0; i < m1.size(); ++i) out[m1[i]] = on_omega1[i];
  const auto n1 = m1.size();
  const auto comps2 = mesh.components(Region::Omega2);
  auto blend = [&](std::size_t j, double v1, double v2) {
    auto [w1, w2] = interface_blend(mesh, j);
    out[j] = w1 * v1 + w2 * v2;
  };
  blend(mesh.omega_node_a(), on_omega1[0], on_omega2[comps2[0].end - 1]);
  blend(mesh.omega_node_b(), on_omega1[n1 - 1], on_omega2[comps2[1].begin]);
  return out;
}

Vector restrict_to(const Mesh& mesh, Region r, const Vector& on_omega) {
  if (r == Region::Omega) return on_omega;
  const auto map = mesh.omega_index(r);
  Vector out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = on_omega[map[i]];
  return out;
}

}  // namespace membrana
