#include "membrana/oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace membrana::oracles {

namespace {

// sin(z) / z with the removable singularity filled in.
double sinc(double z) { return std::abs(z) < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z; }

// Characteristic function in s = sqrt(rho): the fundamental solution satisfying the
// left condition, plugged into the right condition. Normalised to be regular at s = 0.
double characteristic(const TranscendentalSpec& spec, double s) {
  const double l = spec.length;
  double phi = 0.0, dphi = 0.0;  // at x = l
  switch (spec.left.kind) {
    case IntervalEnd::Kind::Neumann:
      phi = std::cos(s * l);
      dphi = -s * std::sin(s * l);
      break;
    case IntervalEnd::Kind::Robin:
      // Outward normal at x = 0 is -x, so phi'(0) = gamma phi(0).
      phi = std::cos(s * l) + spec.left.gamma * l * sinc(s * l);
      dphi = -s * std::sin(s * l) + spec.left.gamma * std::cos(s * l);
      break;
    case IntervalEnd::Kind::Dirichlet:
      phi = l * sinc(s * l);
      dphi = std::cos(s * l);
      break;
  }
  switch (spec.right.kind) {
    case IntervalEnd::Kind::Neumann:
      return dphi;
    case IntervalEnd::Kind::Robin:
      return dphi + spec.right.gamma * phi;
    case IntervalEnd::Kind::Dirichlet:
      return phi;
  }
  return phi;
}

}  // namespace

double interval_eigen_oracle(const TranscendentalSpec& spec) {
  if (!(spec.length > 0.0)) throw ValidationError("interval oracle: length must be positive");
  for (const auto* e : {&spec.left, &spec.right}) {
    if (e->kind == IntervalEnd::Kind::Robin && !(e->gamma >= 0.0)) {
      throw ValidationError("interval oracle: Robin coefficient must be nonnegative");
    }
  }
  const double s_max = 2.0 * std::numbers::pi / spec.length;
  const int samples = 20000;
  double s_prev = 0.0;
  double f_prev = characteristic(spec, 0.0);
  // s = 0 is an eigenvalue only when the constant satisfies both conditions.
  const bool constant_ok = spec.left.kind != IntervalEnd::Kind::Dirichlet &&
                           spec.right.kind != IntervalEnd::Kind::Dirichlet &&
                           (spec.left.kind != IntervalEnd::Kind::Robin || spec.left.gamma == 0.0) &&
                           (spec.right.kind != IntervalEnd::Kind::Robin || spec.right.gamma == 0.0);
  if (constant_ok) return 0.0;
  for (int k = 1; k <= samples; ++k) {
    const double s = s_max * k / samples;
    const double f = characteristic(spec, s);
    if (f == 0.0) return s * s;
    if ((f > 0.0) != (f_prev > 0.0)) {
      double lo = s_prev, hi = s, flo = f_prev;
      // Bisect in rho until the bracket is below 1e-12.
      while (hi * hi - lo * lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        const double fm = characteristic(spec, mid);
        if ((fm > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
        if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
      }
      const double s_root = 0.5 * (lo + hi);
      return s_root * s_root;
    }
    s_prev = s;
    f_prev = f;
  }
  throw std::runtime_error("interval oracle: no root in the scan window");
}

double dense_eigen_oracle(const SparseOperator& op, std::uint64_t seed) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < op.dim(); ++i) {
    if (op.dirichlet_rows.empty() || !op.dirichlet_rows[i]) keep.push_back(i);
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  if (n > 2000) throw ValidationError("dense oracle: dimension above 2000");
  const Eigen::MatrixXd full(op.matrix);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = full(keep[i], keep[j]);
  }
  // Gershgorin lower bound on the real parts of the spectrum.
  double lower = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    lower = std::min(lower, a(i, i) - (a.row(i).cwiseAbs().sum() - std::abs(a(i, i))));
  }
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> values;
  for (int start = 0; start < 20; ++start) {
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = unif(rng);
    x.normalize();
    double shift = lower - 1.0;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a - shift * id);
    double value = shift;
    for (int it = 0; it < 5000; ++it) {
      Eigen::VectorXd y = lu.solve(x);
      y.normalize();
      if (y.sum() < 0.0) y = -y;
      const double change = (y - x).norm();
      x = y;
      // Rayleigh quotient of the current direction.
      value = x.dot(a * x);
      if (change < 1e-9) break;
    }
    // Refinement: a few steps with the shift just below the current estimate.
    for (int it = 0; it < 4; ++it) {
      shift = value - 1e-7 * (1.0 + std::abs(value));
      lu.compute(a - shift * id);
      for (int k = 0; k < 3; ++k) {
        Eigen::VectorXd y = lu.solve(x);
        y.normalize();
        if (y.sum() < 0.0) y = -y;
        x = y;
      }
      // For a non-symmetric matrix use the ratio form along the dominant component.
      const Eigen::VectorXd ax = a * x;
      Eigen::Index imax = 0;
      x.cwiseAbs().maxCoeff(&imax);
      value = ax[imax] / x[imax];
    }
    values.push_back(value);
  }
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  if (*mx - *mn > 1e-10 * std::max(1.0, std::abs(*mn))) {
    std::ostringstream os;
    os << "dense oracle: random starts disagree (spread " << (*mx - *mn) << ")";
    throw std::runtime_error(os.str());
  }
  return values.front();
}

Vector fine_grid_reference(Problem problem, const ModelParams& p, int n_fine) {
  const Mesh mesh = build_mesh(p.geometry, n_fine);
  switch (problem) {
    case Problem::LogisticNeumann: {
      auto r = solve_logistic_scalar(mesh, Region::Omega, p.mu,
                                     CoefficientField::constant(mesh, Region::Omega, 0.0), p.beta,
                                     BoundarySpec::neumann(Region::Omega), p.d);
      return r.status == Existence::Positive ? r.field : Vector();
    }
    case Problem::Omega1:
    case Problem::Omega2: {
      const bool one = problem == Problem::Omega1;
      auto r = solve_omega(mesh, one ? 1 : 2, one ? p.lambda1 : p.lambda2, one ? p.alpha1 : p.alpha2, p.d);
      return r.status == Existence::Positive ? r.field : Vector();
    }
    case Problem::SemitrivialPair: {
      auto r = solve_membrane_logistic(mesh, p.lambda1, p.lambda2, p.alpha1, p.alpha2, p.d);
      if (r.status != Existence::Positive) return Vector();
      Vector out(r.pair.theta1.size() + r.pair.theta2.size());
      out << r.pair.theta1, r.pair.theta2;
      return out;
    }
    case Problem::Coexistence: {
      auto r = solve_coexistence(mesh, p);
      if (!r.found) return Vector();
      Vector out(r.state.u1.size() + r.state.u2.size() + r.state.v.size());
      out << r.state.u1, r.state.u2, r.state.v;
      return out;
    }
  }
  return Vector();
}

double nested_sup_difference(std::span<const double> x_coarse, const Vector& coarse,
                             std::span<const double> x_fine, const Vector& fine) {
  if (static_cast<std::size_t>(coarse.size()) != x_coarse.size() ||
      static_cast<std::size_t>(fine.size()) != x_fine.size()) {
    throw ValidationError("nested_sup_difference: length mismatch");
  }
  double best = 0.0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < x_coarse.size(); ++i) {
    while (j < x_fine.size() && x_fine[j] < x_coarse[i] - 1e-12) ++j;
    if (j == x_fine.size() || std::abs(x_fine[j] - x_coarse[i]) > 1e-12) {
      throw ValidationError("nested_sup_difference: coarse node missing from the fine mesh");
    }
    best = std::max(best, std::abs(coarse[i] - fine[j]));
  }
  return best;
}

}  // namespace membrana::oracles
