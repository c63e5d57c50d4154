#include "membrana/continuation.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace membrana {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr double kEps = std::numeric_limits<double>::epsilon();

double sup(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

double inf_norm(const RowMatrix& a) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    double s = 0.0;
    for (RowMatrix::InnerIterator it(a, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

Vector pack(const StateTriple& s) {
  Vector x(s.u1.size() + s.u2.size() + s.v.size());
  x << s.u1, s.u2, s.v;
  return x;
}

StateTriple unpack(const Vector& x, Eigen::Index n1, Eigen::Index n2) {
  StateTriple s;
  s.u1 = x.head(n1);
  s.u2 = x.segment(n1, n2);
  s.v = x.tail(x.size() - n1 - n2);
  return s;
}

/// Point on the extended curve (state, mu) with the weighted norm |x|^2 / N + mu^2.
struct ExtPoint {
  Vector x;
  double mu = 0.0;
};

double ext_dot(const ExtPoint& a, const ExtPoint& b) {
  return a.x.dot(b.x) / static_cast<double>(a.x.size()) + a.mu * b.mu;
}

ExtPoint ext_diff(const ExtPoint& a, const ExtPoint& b) { return {a.x - b.x, a.mu - b.mu}; }

double ext_norm(const ExtPoint& a) { return std::sqrt(ext_dot(a, a)); }

struct CorrectorResult {
  bool ok = false;
  ExtPoint point;
  double residual = 0.0;
  int iterations = 0;
};

/// Bordered Newton for F(x, mu) = 0 together with <X - pred, t> = 0.
CorrectorResult correct(const Mesh& mesh, ModelParams p, Eigen::Index n1, Eigen::Index n2,
                        const ExtPoint& pred, const ExtPoint& t, double tol) {
  CorrectorResult out;
  ExtPoint cur = pred;
  const Eigen::Index dim = pred.x.size();
  const Eigen::Index ov = n1 + n2;
  const double inv_n = 1.0 / static_cast<double>(dim);
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  for (int it = 0; it < 25; ++it) {
    p.mu = cur.mu;
    const StateTriple s = unpack(cur.x, n1, n2);
    const Vector f = coexistence_residual(mesh, p, s);
    const RowMatrix j = coexistence_jacobian(mesh, p, s);
    const double constraint = ext_dot(ext_diff(cur, pred), t);
    out.residual = sup(f);
    out.iterations = it;
    if (!std::isfinite(out.residual)) return out;
    // Each block is tested relative to its own size: near the ends of the branch one
    // component is tiny and an absolute test would accept states far from the curve.
    const double jn = inf_norm(j);
    auto block_ok = [&](Eigen::Index begin, Eigen::Index len) {
      const double xs = sup(cur.x.segment(begin, len));
      const double fs = sup(f.segment(begin, len));
      return fs <= (tol + 64.0 * kEps * jn) * xs;
    };
    const double scale = std::max(1.0, sup(cur.x));
    if (block_ok(0, ov) && block_ok(ov, dim - ov) && std::abs(constraint) <= 1e-12 * scale) {
      out.ok = true;
      out.point = cur;
      return out;
    }
    Triplets trip;
    trip.reserve(static_cast<std::size_t>(j.nonZeros() + 3 * dim + 1));
    for (Eigen::Index r = 0; r < j.outerSize(); ++r) {
      for (RowMatrix::InnerIterator e(j, r); e; ++e) trip.emplace_back(r, e.col(), e.value());
    }
    // dF/dmu is -v on the v rows.
    for (Eigen::Index k = ov; k < dim; ++k) trip.emplace_back(k, dim, -cur.x[k]);
    for (Eigen::Index k = 0; k < dim; ++k) {
      if (t.x[k] != 0.0) trip.emplace_back(dim, k, t.x[k] * inv_n);
    }
    trip.emplace_back(dim, dim, t.mu);
    ColMatrix b(dim + 1, dim + 1);
    b.setFromTriplets(trip.begin(), trip.end());
    lu.compute(b);
    if (lu.info() != Eigen::Success) return out;
    Vector rhs(dim + 1);
    rhs << f, constraint;
    const Vector step = lu.solve(rhs);
    if (!step.allFinite()) return out;
    cur.x -= step.head(dim);
    cur.mu -= step[dim];
  }
  return out;
}

}  // namespace

void StepSpec::validate() const {
  if (!(delta_mu > 0.0) || !(initial_step > 0.0) || !(max_step > 0.0) || !(min_step > 0.0) ||
      !(residual_tol > 0.0) || !(delta > 0.0) || max_points < 2) {
    throw ValidationError("step_spec: steps, tolerances and delta must be positive, max_points >= 2");
  }
  if (min_step > initial_step || initial_step > max_step) {
    throw ValidationError("step_spec: need min_step <= initial_step <= max_step");
  }
}

std::string to_string(BranchEnd e) {
  switch (e) {
    case BranchEnd::SemitrivialReached:
      return "semitrivial_reached";
    case BranchEnd::TrivialUReached:
      return "u_vanished";
    case BranchEnd::StepUnderflow:
      return "step_underflow";
    case BranchEnd::MaxPoints:
      return "max_points";
    case BranchEnd::Degenerate:
      return "degenerate";
  }
  return "unknown";
}

Branch trace_branch(const CurveEngine& engine, double lambda1, double lambda2, const StepSpec& spec) {
  spec.validate();
  const Mesh& mesh = engine.mesh();
  ModelParams p = engine.params();
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;

  Branch out;
  out.mu0 = engine.compute_mu0(lambda1, lambda2);
  const auto mu1 = engine.compute_mu1(lambda1, lambda2);
  if (!mu1) throw DomainError("mu1 has no root on its search window");
  out.mu1 = *mu1;
  if (std::abs(out.mu1 - out.mu0) < 10.0 * spec.delta_mu) {
    out.end = BranchEnd::Degenerate;
    out.note = "mu0 and mu1 closer than 10 delta_mu";
    return out;
  }
  out.mu_star_bound = engine.mu_star_constructive(lambda1, lambda2);

  const double width = std::abs(out.mu1 - out.mu0);
  const double dir = out.mu1 > out.mu0 ? 1.0 : -1.0;
  const auto n1 = static_cast<Eigen::Index>(mesh.size(Region::Omega1));
  const auto n2 = static_cast<Eigen::Index>(mesh.size(Region::Omega2));
  const auto n = static_cast<Eigen::Index>(mesh.size(Region::Omega));
  const Eigen::Index m = n1 + n2;

  // Kernel of the linearization at (theta1, theta2, 0) for mu = mu0: v = phi and
  // u' solving J_uu u' = -J_uv phi.
  const auto pair = engine.semitrivial(lambda1, lambda2);
  StateTriple semi;
  semi.u1 = pair->pair.theta1;
  semi.u2 = pair->pair.theta2;
  semi.v = Vector::Zero(n);
  const Vector phi = v_eigen_at_semitrivial(mesh, p, pair->pair).eigenfunction;
  p.mu = out.mu0;
  const RowMatrix jac = coexistence_jacobian(mesh, p, semi);
  const ColMatrix juu = jac.topLeftCorner(m, m);
  const Vector juv_phi = jac.topRightCorner(m, n) * phi;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu(juu);
  if (lu.info() != Eigen::Success) throw SolverError("branch start: singular u-block at the semitrivial state");
  const Vector ubar = -lu.solve(juv_phi);
  Vector kernel(m + n);
  kernel << ubar, phi;

  CoexistenceOptions copts;
  copts.residual_tol = spec.residual_tol;
  copts.delta = spec.delta;
  const double mu_start = out.mu0 + dir * spec.delta_mu;
  p.mu = mu_start;
  const Vector x_semi = pack(semi);
  std::optional<ExtPoint> first;
  for (double factor : {1.0, 10.0, 0.1, 100.0, 0.01, 1000.0}) {
    StateTriple start = unpack(x_semi + factor * spec.delta_mu * kernel, n1, n2);
    const auto r = newton_coexistence(mesh, p, start, copts);
    if (r.found && r.state.coexistence()) {
      first = ExtPoint{pack(r.state), mu_start};
      out.points.push_back({mu_start, 0.0, r.residual, r.state});
      break;
    }
  }
  if (!first) {
    throw SolverError("branch start: Newton did not leave the semitrivial state near mu0 (mu0 may be misdetected)");
  }

  ExtPoint prev{x_semi, out.mu0};
  ExtPoint cur = *first;
  ExtPoint tangent = ext_diff(cur, prev);
  {
    const double nrm = ext_norm(tangent);
    tangent.x /= nrm;
    tangent.mu /= nrm;
  }
  double ds = spec.initial_step * width;
  const double ds_max = spec.max_step * width;
  const double ds_min = spec.min_step * width;
  double arclength = 0.0;

  while (true) {
    if (static_cast<int>(out.points.size()) >= spec.max_points) {
      out.end = BranchEnd::MaxPoints;
      break;
    }
    if (ds < ds_min) {
      out.end = BranchEnd::StepUnderflow;
      break;
    }
    const ExtPoint pred{cur.x + ds * tangent.x, cur.mu + ds * tangent.mu};
    const auto c = correct(mesh, p, n1, n2, pred, tangent, spec.residual_tol);
    if (!c.ok || ext_norm(ext_diff(c.point, cur)) > 3.0 * ds) {
      ds *= 0.5;
      continue;
    }
    StateTriple s = unpack(c.point.x, n1, n2);
    s.classify(spec.delta);
    if (!s.coexistence()) {
      // Past the end of the branch: refine the step until it underflows.
      if (ds * 0.5 < ds_min) {
        out.end = s.positive_v ? BranchEnd::TrivialUReached : BranchEnd::SemitrivialReached;
        break;
      }
      ds *= 0.5;
      continue;
    }
    ExtPoint step = ext_diff(c.point, cur);
    const double len = ext_norm(step);
    arclength += len;
    tangent = {step.x / len, step.mu / len};
    cur = c.point;
    out.points.push_back({cur.mu, arclength, c.residual, std::move(s)});
    if (c.iterations <= 3) ds = std::min(1.5 * ds, ds_max);
  }
  return out;
}

LimitSystemResult limit_system_solve(const Mesh& mesh, const ModelParams& p, double lambda2, double mu, double m) {
  if (!(mu >= 0.0)) throw ValidationError("limit system: mu must be non-negative");
  if (!(m > 0.0)) throw ValidationError("limit system: M must be positive");
  p.validate(&mesh);
  const auto x2 = mesh.coords(Region::Omega2);
  const auto n2 = static_cast<Eigen::Index>(x2.size());
  const Vector al = p.alpha2.sample(x2);

  const auto large = approximate_large_solution(mesh, lambda2, p.alpha2, {m}, p.d);
  LimitSystemResult out;
  out.u2 = large.field();
  out.v = Vector::Zero(n2);
  out.v_omega = Vector::Zero(static_cast<Eigen::Index>(mesh.size(Region::Omega)));

  const auto v_bc = BoundarySpec::dirichlet_on_interface(Region::Omega2, 0.0);
  const auto v0 = solve_logistic_scalar(mesh, Region::Omega2, mu, CoefficientField::from(Region::Omega2, p.b2 * out.u2),
                                        p.beta, v_bc, p.d);
  if (v0.status != Existence::Positive) return out;

  const SparseOperator op = assemble_scalar(mesh, Region::Omega2, p.d,
                                            CoefficientField::constant(mesh, Region::Omega2, 0.0), v_bc);
  const auto& fixed = op.dirichlet_rows;
  Vector x(2 * n2);
  x << out.u2, v0.field;

  auto residual = [&](const Vector& y) {
    Vector r(2 * n2);
    const Vector u = y.head(n2);
    const Vector v = y.tail(n2);
    r.head(n2) = op.matrix * u;
    r.tail(n2) = op.matrix * v;
    for (Eigen::Index i = 0; i < n2; ++i) {
      if (fixed[i]) {
        r[i] = u[i] - m;
        r[n2 + i] = v[i];
      } else {
        r[i] -= u[i] * (lambda2 - al[i] * u[i] - p.a2 * v[i]);
        r[n2 + i] -= v[i] * (mu - p.beta * v[i] - p.b2 * u[i]);
      }
    }
    return r;
  };
  auto jacobian = [&](const Vector& y) {
    Triplets t;
    t.reserve(static_cast<std::size_t>(2 * op.matrix.nonZeros() + 4 * n2));
    for (Eigen::Index i = 0; i < n2; ++i) {
      if (fixed[i]) {
        t.emplace_back(i, i, 1.0);
        t.emplace_back(n2 + i, n2 + i, 1.0);
        continue;
      }
      for (RowMatrix::InnerIterator e(op.matrix, i); e; ++e) {
        t.emplace_back(i, e.col(), e.value());
        t.emplace_back(n2 + i, n2 + e.col(), e.value());
      }
      const double u = y[i];
      const double v = y[n2 + i];
      t.emplace_back(i, i, -(lambda2 - 2.0 * al[i] * u - p.a2 * v));
      t.emplace_back(i, n2 + i, p.a2 * u);
      t.emplace_back(n2 + i, n2 + i, -(mu - 2.0 * p.beta * v - p.b2 * u));
      t.emplace_back(n2 + i, i, p.b2 * v);
    }
    ColMatrix j(2 * n2, 2 * n2);
    j.setFromTriplets(t.begin(), t.end());
    return j;
  };

  // The residual scale grows with M through the rows next to Sigma.
  const double tol = 1e-9 * std::max(1.0, m);
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  Vector r = residual(x);
  double rn = sup(r);
  int it = 0;
  for (; it < 100 && rn > tol; ++it) {
    lu.compute(jacobian(x));
    if (lu.info() != Eigen::Success) throw SolverError("limit system: singular Jacobian");
    const Vector step = lu.solve(r);
    double t = 1.0;
    Vector trial;
    Vector rt;
    for (int k = 0; k < 30; ++k) {
      trial = x - t * step;
      rt = residual(trial);
      if (sup(rt) < rn) break;
      t *= 0.5;
    }
    if (!(sup(rt) < rn)) throw SolverError("limit system: line search failed");
    x = std::move(trial);
    r = std::move(rt);
    rn = sup(r);
  }
  if (rn > tol) throw SolverError("limit system: Newton did not converge");
  out.u2 = x.head(n2);
  out.v = x.tail(n2);
  // Newton leaves round-off in the Dirichlet rows; impose the boundary values exactly.
  for (Eigen::Index i = 0; i < n2; ++i) {
    if (fixed[i]) {
      out.u2[i] = m;
      out.v[i] = 0.0;
    }
  }
  out.residual = rn;
  out.iterations = it;
  bool positive = true;
  for (Eigen::Index i = 0; i < n2; ++i) {
    if (!fixed[i] && !(out.v[i] > kPositivityThreshold)) positive = false;
  }
  out.v_positive = positive;
  const auto map2 = mesh.omega_index(Region::Omega2);
  for (Eigen::Index i = 0; i < n2; ++i) out.v_omega[static_cast<Eigen::Index>(map2[i])] = out.v[i];
  return out;
}

LimitApproach limit_approach(const Mesh& mesh, const ModelParams& p, double m, std::vector<double> lambda1_values,
                             double factor) {
  if (lambda1_values.empty()) throw ValidationError("limit approach: empty lambda1 list");
  if (!(factor > 1.0)) throw ValidationError("limit approach: factor must exceed 1");
  std::sort(lambda1_values.begin(), lambda1_values.end());
  if (!(lambda1_values.front() > 0.0)) throw ValidationError("limit approach: lambda1 values must be positive");

  LimitApproach out;
  out.limit = limit_system_solve(mesh, p, p.lambda2, p.mu, m);

  // Path: geometric steps from the first requested value, passing through every request.
  std::vector<std::pair<double, bool>> path;
  double l = lambda1_values.front();
  for (double target : lambda1_values) {
    while (l * factor < target) {
      l *= factor;
      path.emplace_back(l, false);
    }
    path.emplace_back(target, true);
    l = target;
  }

  CoexistenceOptions co;
  co.delta = 0.0;
  ModelParams q = p;
  std::optional<StateTriple> seed;
  for (const auto& [lambda1, report] : path) {
    q.lambda1 = lambda1;
    CoexistenceResult r;
    if (seed) r = newton_coexistence(mesh, q, *seed, co);
    if (!seed || !r.found || !r.state.coexistence()) r = solve_coexistence(mesh, q, std::nullopt, co);
    if (!r.found) {
      if (!report) continue;
      throw SolverError("limit approach: no coexistence state at lambda1 = " + std::to_string(lambda1) + " (" +
                        r.note + ")");
    }
    seed = r.state;
    if (!report) continue;
    const Vector v2 = restrict_to(mesh, Region::Omega2, r.state.v);
    const Vector v1 = restrict_to(mesh, Region::Omega1, r.state.v);
    LimitApproachPoint pt;
    pt.lambda1 = lambda1;
    pt.min_u1 = r.state.min_u1();
    pt.dist_v_omega2 = (v2 - out.limit.v).cwiseAbs().maxCoeff();
    pt.sup_v_omega1 = v1.maxCoeff();
    pt.residual = r.residual;
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace membrana
