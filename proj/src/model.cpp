#include "membrana/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace membrana {

Vector SpatialCoefficient::sample(std::span<const double> x) const {
  Vector out(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = profile ? profile(x[i]) : constant;
  return out;
}

double SpatialCoefficient::min_on(std::span<const double> x) const {
  if (!profile) return constant;
  return sample(x).minCoeff();
}

void ModelParams::validate(const Mesh* mesh) const {
  geometry.validate();
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << name << " must be a positive finite number, got " << v;
      throw ValidationError(os.str());
    }
  };
  auto finite = [](double v, const char* name) {
    if (!std::isfinite(v)) throw ValidationError(std::string(name) + " must be finite");
  };
  finite(lambda1, "lambda1");
  finite(lambda2, "lambda2");
  finite(mu, "mu");
  positive(a1, "a1");
  positive(a2, "a2");
  positive(b1, "b1");
  positive(b2, "b2");
  positive(beta, "beta");
  positive(d, "d");
  if (alpha1.is_constant()) positive(alpha1.constant, "alpha1");
  if (alpha2.is_constant()) positive(alpha2.constant, "alpha2");
  if (mesh != nullptr) {
    const auto& g = mesh->geometry();
    if (g.x_left != geometry.x_left || g.x_right != geometry.x_right || g.a != geometry.a ||
        g.b != geometry.b || g.gamma1 != geometry.gamma1 || g.gamma2 != geometry.gamma2) {
      throw ValidationError("mesh was built for a different geometry than the parameters");
    }
    positive(alpha1.min_on(mesh->coords(Region::Omega1)), "alpha1 (nodal minimum)");
    positive(alpha2.min_on(mesh->coords(Region::Omega2)), "alpha2 (nodal minimum)");
  }
}

double ModelParams::u_bound(const Mesh& mesh) const {
  return std::max(lambda1 / alpha1.min_on(mesh.coords(Region::Omega1)),
                  lambda2 / alpha2.min_on(mesh.coords(Region::Omega2)));
}

void StateTriple::classify(double delta) {
  positive_u1 = u1.size() > 0 && u1.minCoeff() > delta;
  positive_u2 = u2.size() > 0 && u2.minCoeff() > delta;
  positive_v = v.size() > 0 && v.minCoeff() > delta;
}

double StateTriple::distance(const StateTriple& other) const {
  if (u1.size() != other.u1.size() || u2.size() != other.u2.size() ||
      v.size() != other.v.size()) {
    throw ValidationError("StateTriple::distance: size mismatch");
  }
  return std::max({(u1 - other.u1).cwiseAbs().maxCoeff(), (u2 - other.u2).cwiseAbs().maxCoeff(),
                   (v - other.v).cwiseAbs().maxCoeff()});
}

std::string to_string(Existence e) {
  switch (e) {
    case Existence::Positive:
      return "positive";
    case Existence::NoPositiveSolution:
      return "none";
    case Existence::Indeterminate:
      return "indeterminate";
  }
  return "unknown";
}

}  // namespace membrana
