#include "membrana/nonlinear.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace membrana {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;
using Triplets = std::vector<Eigen::Triplet<double>>;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double inf_norm(const RowMatrix& a) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    double s = 0.0;
    for (RowMatrix::InnerIterator it(a, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

double sup(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

Existence classify_margin(double margin) {
  if (margin >= kEpsilonBand) return Existence::Positive;
  if (margin <= -kEpsilonBand) return Existence::NoPositiveSolution;
  return Existence::Indeterminate;
}

// A x = x (g - c x) on free rows, x = value on Dirichlet rows.
struct LogisticProblem {
  RowMatrix a;
  std::vector<bool> fixed;
  Vector fixed_value;
  Vector growth;
  Vector crowding;

  Vector residual(const Vector& x) const {
    Vector r = a * x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      r[i] = fixed[i] ? x[i] - fixed_value[i] : r[i] - x[i] * (growth[i] - crowding[i] * x[i]);
    }
    return r;
  }

  ColMatrix jacobian(const Vector& x) const {
    Triplets t;
    t.reserve(static_cast<std::size_t>(a.nonZeros() + x.size()));
    for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
      if (fixed[r]) {
        t.emplace_back(r, r, 1.0);
        continue;
      }
      for (RowMatrix::InnerIterator it(a, r); it; ++it) t.emplace_back(r, it.col(), it.value());
      t.emplace_back(r, r, -(growth[r] - 2.0 * crowding[r] * x[r]));
    }
    ColMatrix j(a.rows(), a.cols());
    j.setFromTriplets(t.begin(), t.end());
    return j;
  }

  double floor(const Vector& x) const {
    const double xs = sup(x);
    return 64.0 * kEps * (inf_norm(a) * xs + sup(growth) * xs + sup(crowding) * xs * xs + 1.0);
  }
};

// Newton from a super-solution. For these convex reactions the iterates decrease
// monotonically to the maximal solution, which is the positive one whenever it exists.
Vector newton_from_above(const LogisticProblem& p, Vector x, const NewtonOptions& opts,
                         double* residual, int* iterations) {
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  double rn = std::numeric_limits<double>::infinity();
  // Once the round-off floor is reached, a few more steps often shave off the last digit;
  // the best iterate is kept.
  int polish = -1;
  Vector best;
  double best_rn = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opts.max_iterations; ++it) {
    Vector r = p.residual(x);
    rn = sup(r);
    if (!std::isfinite(rn)) throw SolverError("logistic Newton produced non-finite values");
    if (rn < best_rn) {
      best_rn = rn;
      best = x;
    }
    if (polish < 0 && rn <= std::max(opts.residual_tol, p.floor(x))) polish = 0;
    if (polish >= 0 && (best_rn <= opts.residual_tol || polish == 3)) {
      *residual = best_rn;
      *iterations = it;
      return best;
    }
    if (polish >= 0) ++polish;
    if (it == opts.max_iterations) break;
    ColMatrix j = p.jacobian(x);
    if (!analyzed) {
      lu.analyzePattern(j);
      analyzed = true;
    }
    lu.factorize(j);
    if (lu.info() != Eigen::Success) throw SolverError("logistic Newton: singular Jacobian");
    x -= lu.solve(r);
  }
  std::ostringstream os;
  os << "logistic Newton did not converge in " << opts.max_iterations << " iterations (residual "
     << rn << ")";
  throw SolverError(os.str());
}

bool positive_on_free(const LogisticProblem& p, const Vector& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!p.fixed[i] && !(x[i] > 0.0)) return false;
  }
  return true;
}

}  // namespace

FieldSolution solve_logistic_scalar(const Mesh& mesh, Region region, double mu,
                                    const CoefficientField& c, const SpatialCoefficient& beta,
                                    const BoundarySpec& bc, double d, const NewtonOptions& opts) {
  const auto x = mesh.coords(region);
  const Vector bv = beta.sample(x);
  if (!(bv.minCoeff() > 0.0)) throw ValidationError("logistic: beta must be positive");
  if (!std::isfinite(mu)) throw ValidationError("logistic: mu must be finite");
  for (const auto& e : bc.endpoints) {
    if (e.kind == EndpointCondition::Kind::Dirichlet && e.value != 0.0) {
      throw ValidationError("logistic: boundary conditions must be homogeneous");
    }
  }

  FieldSolution out;
  // Every piece of a disconnected region needs its own threshold crossed.
  const auto parts = sigma1_components(mesh, region, d, c, bc);
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& part : parts) worst = std::min(worst, mu - part.value);
  out.threshold = parts.front().value;
  for (const auto& part : parts) out.threshold = std::max(out.threshold, part.value);
  out.status = classify_margin(worst);
  if (out.status != Existence::Positive) return out;

  const SparseOperator op = assemble_scalar(mesh, region, d, c, bc);
  LogisticProblem p{op.matrix, op.dirichlet_rows, Vector::Zero(op.dim()),
                    Vector::Constant(op.dim(), mu), bv};
  double k = 0.0;
  for (Eigen::Index i = 0; i < op.dim(); ++i) k = std::max(k, (mu - c.values[i]) / bv[i]);
  Vector start = Vector::Constant(op.dim(), k);
  for (Eigen::Index i = 0; i < op.dim(); ++i) {
    if (p.fixed[i]) start[i] = 0.0;
  }
  out.field = newton_from_above(p, std::move(start), opts, &out.residual, &out.iterations);
  if (!positive_on_free(p, out.field)) {
    throw SolverError("logistic Newton converged to a non-positive state above the threshold");
  }
  return out;
}

FieldSolution solve_omega(const Mesh& mesh, int which, double lambda, const SpatialCoefficient& alpha,
                          double d, const NewtonOptions& opts) {
  if (which != 1 && which != 2) throw ValidationError("solve_omega: which must be 1 or 2");
  const Region r = which == 1 ? Region::Omega1 : Region::Omega2;
  return solve_logistic_scalar(mesh, r, lambda, CoefficientField::constant(mesh, r, 0.0), alpha,
                               BoundarySpec::robin_on_interface(mesh.geometry(), r), d, opts);
}

PairSolution solve_membrane_logistic(const Mesh& mesh, double lambda1, double lambda2,
                                     const SpatialCoefficient& alpha1,
                                     const SpatialCoefficient& alpha2, double d,
                                     const NewtonOptions& opts) {
  if (!std::isfinite(lambda1) || !std::isfinite(lambda2)) {
    throw ValidationError("membrane logistic: growth rates must be finite");
  }
  const auto x1 = mesh.coords(Region::Omega1);
  const auto x2 = mesh.coords(Region::Omega2);
  const Vector al1 = alpha1.sample(x1);
  const Vector al2 = alpha2.sample(x2);
  if (!(al1.minCoeff() > 0.0) || !(al2.minCoeff() > 0.0)) {
    throw ValidationError("membrane logistic: alpha must be positive");
  }
  PairSolution out;
  out.lambda1_value = membrana::lambda1(mesh, d, -lambda1, -lambda2).value;
  out.status = classify_margin(-out.lambda1_value);
  if (out.status != Existence::Positive) return out;

  const auto n1 = static_cast<Eigen::Index>(x1.size());
  const auto n2 = static_cast<Eigen::Index>(x2.size());
  const SparseOperator op = assemble_interface(mesh, d, CoefficientField::constant(mesh, Region::Omega1, 0.0),
                                               CoefficientField::constant(mesh, Region::Omega2, 0.0));
  Vector growth(n1 + n2), crowd(n1 + n2);
  growth << Vector::Constant(n1, lambda1), Vector::Constant(n2, lambda2);
  crowd << al1, al2;
  LogisticProblem p{op.matrix, std::vector<bool>(static_cast<std::size_t>(n1 + n2), false),
                    Vector::Zero(n1 + n2), growth, crowd};
  const double k = std::max(lambda1 / al1.minCoeff(), lambda2 / al2.minCoeff());
  Vector sol = newton_from_above(p, Vector::Constant(n1 + n2, k), opts, &out.residual,
                                 &out.iterations);
  if (!(sol.minCoeff() > 0.0)) {
    throw SolverError("membrane logistic Newton converged to a non-positive state");
  }
  out.pair.theta1 = sol.head(n1);
  out.pair.theta2 = sol.tail(n2);
  return out;
}

double LargeSolution::max_increment_beyond(const Mesh& mesh, double dist) const {
  if (increments.empty()) return 0.0;
  const auto x = mesh.coords(Region::Omega2);
  const auto& g = mesh.geometry();
  double best = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double to_sigma = std::min(std::abs(x[i] - g.a), std::abs(x[i] - g.b));
    if (to_sigma >= dist - 1e-12) best = std::max(best, std::abs(increments.back()[i]));
  }
  return best;
}

LargeSolution approximate_large_solution(const Mesh& mesh, double lambda2,
                                         const SpatialCoefficient& alpha2,
                                         const std::vector<double>& m_list, double d,
                                         const NewtonOptions& opts) {
  if (m_list.empty()) throw ValidationError("large solution: M list is empty");
  for (std::size_t k = 0; k < m_list.size(); ++k) {
    if (!(m_list[k] > 0.0) || (k > 0 && !(m_list[k] > m_list[k - 1]))) {
      throw ValidationError("large solution: M list must be positive and increasing");
    }
  }
  const auto x2 = mesh.coords(Region::Omega2);
  const Vector al = alpha2.sample(x2);
  if (!(al.minCoeff() > 0.0)) throw ValidationError("large solution: alpha2 must be positive");

  LargeSolution out;
  const auto zero = CoefficientField::constant(mesh, Region::Omega2, 0.0);
  for (double m : m_list) {
    const SparseOperator op =
        assemble_scalar(mesh, Region::Omega2, d, zero, BoundarySpec::dirichlet_on_interface(Region::Omega2, m));
    const Eigen::Index n = op.dim();
    Vector fixed_value = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (op.dirichlet_rows[i]) fixed_value[i] = m;
    }
    LogisticProblem p{op.matrix, op.dirichlet_rows, fixed_value, Vector::Constant(n, lambda2), al};
    Vector start = Vector::Constant(n, std::max(m, lambda2 / al.minCoeff()));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (p.fixed[i]) start[i] = m;
    }
    double res = 0.0;
    int its = 0;
    // The residual scale grows with M; keep the target relative to it.
    NewtonOptions o = opts;
    o.residual_tol = std::max(opts.residual_tol, opts.residual_tol * m);
    Vector f = newton_from_above(p, std::move(start), o, &res, &its);
    if (!out.fields.empty()) {
      const Vector& prev = out.fields.back();
      Vector inc(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (f[i] < prev[i] - 1e-9 * std::max(1.0, std::abs(f[i]))) out.monotone = false;
        inc[i] = f[i] > 0.0 ? (f[i] - prev[i]) / f[i] : 0.0;
      }
      out.increments.push_back(std::move(inc));
    }
    out.m_values.push_back(m);
    out.fields.push_back(std::move(f));
  }
  if (!out.monotone) {
    throw SolverError("large solution: fields do not increase with the boundary value M");
  }
  return out;
}

// ---------------------------------------------------------------------------------------
// Coexistence system

namespace {

struct CoexistenceSystem {
  const Mesh& mesh;
  const ModelParams& p;
  Eigen::Index n1, n2, n;
  SparseOperator a_int;
  SparseOperator a_omega;
  Vector al1, al2;
  std::vector<std::size_t> map1, map2;
  Vector w1, w2;  // weight of an Omega1 / Omega2 node in the v-equation potential

  CoexistenceSystem(const Mesh& m, const ModelParams& params)
      : mesh(m),
        p(params),
        n1(static_cast<Eigen::Index>(m.size(Region::Omega1))),
        n2(static_cast<Eigen::Index>(m.size(Region::Omega2))),
        n(static_cast<Eigen::Index>(m.size(Region::Omega))),
        a_int(assemble_interface(m, params.d, CoefficientField::constant(m, Region::Omega1, 0.0),
                                 CoefficientField::constant(m, Region::Omega2, 0.0))),
        a_omega(assemble_scalar(m, Region::Omega, params.d,
                                CoefficientField::constant(m, Region::Omega, 0.0),
                                BoundarySpec::neumann(Region::Omega))),
        al1(params.alpha1.sample(m.coords(Region::Omega1))),
        al2(params.alpha2.sample(m.coords(Region::Omega2))) {
    auto i1 = m.omega_index(Region::Omega1);
    auto i2 = m.omega_index(Region::Omega2);
    map1.assign(i1.begin(), i1.end());
    map2.assign(i2.begin(), i2.end());
    w1 = Vector::Ones(n1);
    w2 = Vector::Ones(n2);
    for (Eigen::Index i = 0; i < n1; ++i) {
      if (map1[i] == m.omega_node_a() || map1[i] == m.omega_node_b()) {
        w1[i] = interface_blend(m, map1[i]).first;
      }
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
      if (map2[i] == m.omega_node_a() || map2[i] == m.omega_node_b()) {
        w2[i] = interface_blend(m, map2[i]).second;
      }
    }
  }

  Eigen::Index dim() const { return n1 + n2 + n; }

  Vector pack(const StateTriple& s) const {
    if (s.u1.size() != n1 || s.u2.size() != n2 || s.v.size() != n) {
      throw ValidationError("state does not match the mesh");
    }
    Vector x(dim());
    x << s.u1, s.u2, s.v;
    return x;
  }

  StateTriple unpack(const Vector& x) const {
    StateTriple s;
    s.u1 = x.head(n1);
    s.u2 = x.segment(n1, n2);
    s.v = x.tail(n);
    return s;
  }

  Vector potential(const Vector& x) const {
    Vector pot = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n1; ++i) pot[map1[i]] += p.b1 * w1[i] * x[i];
    for (Eigen::Index i = 0; i < n2; ++i) pot[map2[i]] += p.b2 * w2[i] * x[n1 + i];
    return pot;
  }

  Vector residual(const Vector& x) const {
    Vector r(dim());
    r.head(n1 + n2) = a_int.matrix * x.head(n1 + n2);
    r.tail(n) = a_omega.matrix * x.tail(n);
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double u = x[i];
      r[i] -= u * (p.lambda1 - al1[i] * u - p.a1 * x[n1 + n2 + map1[i]]);
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
      const double u = x[n1 + i];
      r[n1 + i] -= u * (p.lambda2 - al2[i] * u - p.a2 * x[n1 + n2 + map2[i]]);
    }
    const Vector pot = potential(x);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = x[n1 + n2 + j];
      r[n1 + n2 + j] -= v * (p.mu - p.beta * v - pot[j]);
    }
    return r;
  }

  RowMatrix jacobian(const Vector& x) const {
    Triplets t;
    t.reserve(static_cast<std::size_t>(a_int.matrix.nonZeros() + a_omega.matrix.nonZeros() + 6 * dim()));
    const Eigen::Index ov = n1 + n2;
    for (Eigen::Index r = 0; r < a_int.matrix.outerSize(); ++r) {
      for (RowMatrix::InnerIterator it(a_int.matrix, r); it; ++it) t.emplace_back(r, it.col(), it.value());
    }
    for (Eigen::Index r = 0; r < a_omega.matrix.outerSize(); ++r) {
      for (RowMatrix::InnerIterator it(a_omega.matrix, r); it; ++it) {
        t.emplace_back(ov + r, ov + it.col(), it.value());
      }
    }
    for (Eigen::Index i = 0; i < n1; ++i) {
      const double u = x[i];
      const Eigen::Index jv = ov + static_cast<Eigen::Index>(map1[i]);
      t.emplace_back(i, i, -(p.lambda1 - 2.0 * al1[i] * u - p.a1 * x[jv]));
      t.emplace_back(i, jv, p.a1 * u);
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
      const double u = x[n1 + i];
      const Eigen::Index jv = ov + static_cast<Eigen::Index>(map2[i]);
      t.emplace_back(n1 + i, n1 + i, -(p.lambda2 - 2.0 * al2[i] * u - p.a2 * x[jv]));
      t.emplace_back(n1 + i, jv, p.a2 * u);
    }
    const Vector pot = potential(x);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = x[ov + j];
      t.emplace_back(ov + j, ov + j, -(p.mu - 2.0 * p.beta * v - pot[j]));
    }
    for (Eigen::Index i = 0; i < n1; ++i) {
      const Eigen::Index jv = ov + static_cast<Eigen::Index>(map1[i]);
      t.emplace_back(jv, i, p.b1 * w1[i] * x[jv]);
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
      const Eigen::Index jv = ov + static_cast<Eigen::Index>(map2[i]);
      t.emplace_back(jv, n1 + i, p.b2 * w2[i] * x[jv]);
    }
    RowMatrix j(dim(), dim());
    j.setFromTriplets(t.begin(), t.end());
    return j;
  }

  double floor(const Vector& x) const {
    const double xs = std::max(sup(x), 1.0);
    const double scale = std::max(inf_norm(a_int.matrix), inf_norm(a_omega.matrix)) * xs +
                         (std::abs(p.lambda1) + std::abs(p.lambda2) + std::abs(p.mu)) * xs +
                         (sup(al1) + sup(al2) + p.a1 + p.a2 + p.b1 + p.b2 + p.beta) * xs * xs;
    return 64.0 * kEps * scale;
  }
};

double u_bound_tolerant(const Mesh& mesh, const ModelParams& p) {
  return std::max(p.u_bound(mesh), 0.0);
}

}  // namespace

Vector coexistence_residual(const Mesh& mesh, const ModelParams& p, const StateTriple& s) {
  CoexistenceSystem sys(mesh, p);
  return sys.residual(sys.pack(s));
}

RowMatrix coexistence_jacobian(const Mesh& mesh, const ModelParams& p, const StateTriple& s) {
  CoexistenceSystem sys(mesh, p);
  return sys.jacobian(sys.pack(s));
}

CoexistenceResult newton_coexistence(const Mesh& mesh, const ModelParams& p, StateTriple start,
                                     const CoexistenceOptions& opts) {
  p.validate(&mesh);
  CoexistenceSystem sys(mesh, p);
  Vector x = sys.pack(start);
  CoexistenceResult out;
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  Vector r = sys.residual(x);
  double rn = sup(r);
  for (int it = 0;; ++it) {
    out.iterations = it;
    out.residual = rn;
    if (!std::isfinite(rn)) {
      out.note = "non-finite residual";
      break;
    }
    // The u and v blocks must also be small relative to their own size: a tiny component
    // with an absolutely small residual is usually a semitrivial state in disguise.
    const double target = std::max(opts.residual_tol, sys.floor(x));
    const Eigen::Index nu = sys.n1 + sys.n2;
    auto block_ok = [&](Eigen::Index begin, Eigen::Index len) {
      return sup(r.segment(begin, len)) <= target * std::min(1.0, sup(x.segment(begin, len)));
    };
    if (rn <= target) {
      const bool u_ok = block_ok(0, nu), v_ok = block_ok(nu, sys.n);
      if (u_ok && v_ok) {
        out.found = true;
        break;
      }
      const bool u_gone = !u_ok && sup(x.segment(0, nu)) <= opts.delta;
      const bool v_gone = !v_ok && sup(x.segment(nu, sys.n)) <= opts.delta;
      if (u_gone || v_gone) {
        out.note = "iterates approach a state with a vanishing component";
        break;
      }
    }
    if (it == opts.max_iterations) {
      out.note = "iteration limit reached";
      break;
    }
    ColMatrix j = sys.jacobian(x);
    if (!analyzed) {
      lu.analyzePattern(j);
      analyzed = true;
    }
    lu.factorize(j);
    if (lu.info() != Eigen::Success) {
      out.note = "singular Jacobian";
      break;
    }
    const Vector step = lu.solve(r);
    if (!step.allFinite()) {
      out.note = "non-finite Newton step";
      break;
    }
    // Backtracking on the sup norm of the residual.
    double t = 1.0;
    bool accepted = false;
    Vector trial;
    Vector rt;
    for (int k = 0; k < 30; ++k) {
      trial = x - t * step;
      rt = sys.residual(trial);
      const double rtn = sup(rt);
      if (std::isfinite(rtn) && rtn <= (1.0 - 1e-4 * t) * rn) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Take the smallest step anyway once: Newton near a solution can be non-monotone
      // in the sup norm; give up only if that does not help either.
      if (!rt.allFinite() || sup(rt) > 10.0 * rn) {
        out.note = "line search failed";
        break;
      }
    }
    x = std::move(trial);
    r = std::move(rt);
    rn = sup(r);
  }
  out.state = sys.unpack(x);
  out.state.classify(opts.delta);
  return out;
}

EigenResult v_eigen_at_semitrivial(const Mesh& mesh, const ModelParams& p,
                                   const SemitrivialPair& pair) {
  const Vector pot = combine_on_omega(mesh, p.b1 * pair.theta1, p.b2 * pair.theta2);
  return sigma1(mesh, Region::Omega, p.d, CoefficientField::from(Region::Omega, pot),
                BoundarySpec::neumann(Region::Omega));
}

CoexistenceResult solve_coexistence(const Mesh& mesh, const ModelParams& p,
                                    const std::optional<StateTriple>& init,
                                    const CoexistenceOptions& opts) {
  p.validate(&mesh);
  auto accept = [&](CoexistenceResult r, const std::string& tag) {
    if (r.found && !r.state.coexistence()) {
      r.found = false;
      r.note = tag + ": converged to a state with a component at or below the positivity threshold";
    } else if (r.found) {
      r.note = tag;
    } else {
      r.note = tag + ": " + r.note;
    }
    return r;
  };

  if (init) {
    return accept(newton_coexistence(mesh, p, *init, opts), "given start");
  }

  CoexistenceResult none;
  if (!(p.mu > 0.0)) {
    none.note = "necessary condition mu > 0 fails";
    return none;
  }
  const PairSolution sp = solve_membrane_logistic(mesh, p.lambda1, p.lambda2, p.alpha1, p.alpha2, p.d);
  if (sp.status != Existence::Positive) {
    none.note = "necessary condition Lambda1(-lambda1,-lambda2) < 0 fails";
    return none;
  }
  const EigenResult ev = v_eigen_at_semitrivial(mesh, p, sp.pair);

  StateTriple s0;
  s0.u1 = sp.pair.theta1;
  s0.u2 = sp.pair.theta2;
  s0.v = 0.05 * p.mu * ev.eigenfunction;
  CoexistenceResult r = accept(newton_coexistence(mesh, p, s0, opts), "auto start");
  if (r.found || !opts.fallbacks) return r;
  std::string notes = r.note;

  StateTriple s1;
  s1.u1 = 0.5 * sp.pair.theta1;
  s1.u2 = 0.5 * sp.pair.theta2;
  s1.v = Vector::Constant(static_cast<Eigen::Index>(mesh.size(Region::Omega)), 0.5 * p.mu);
  r = accept(newton_coexistence(mesh, p, s1, opts), "halved start");
  if (r.found) return r;
  notes += "; " + r.note;

  // Let the dynamics pick the attractor, then polish.
  try {
    StateTriple s2 = s1;
    EvolveOptions eo;
    eo.steady_tol = 1e-6;
    const double h = mesh.segments()[1].h;
    EvolveResult ev2 = evolve_parabolic(mesh, p, s2, 200.0, std::min(0.05, 4.0 * h), eo);
    r = accept(newton_coexistence(mesh, p, ev2.state, opts), "parabolic start");
    if (r.found) return r;
    notes += "; " + r.note;
  } catch (const SolverError& e) {
    notes += std::string("; parabolic start: ") + e.what();
  }
  r.found = false;
  r.note = notes;
  return r;
}

EvolveResult evolve_parabolic(const Mesh& mesh, const ModelParams& p, const StateTriple& init,
                              double t_end, double dt, const EvolveOptions& opts) {
  p.validate(&mesh);
  if (!(t_end >= 0.0) || !(dt > 0.0)) throw ValidationError("evolve: need t_end >= 0 and dt > 0");
  CoexistenceSystem sys(mesh, p);
  Vector x = sys.pack(init);
  if (!x.allFinite() || x.minCoeff() < 0.0) throw ValidationError("evolve: initial data must be nonnegative");

  const Eigen::Index n1 = sys.n1, n2 = sys.n2, n = sys.n, ov = n1 + n2;
  const double init_u = std::max(init.u1.maxCoeff(), init.u2.maxCoeff());
  const double u_cap = 10.0 * std::max({u_bound_tolerant(mesh, p), init_u, 1.0});
  const double v_cap = 10.0 * std::max({p.mu, init.v.maxCoeff(), 1.0});

  const int steps = t_end == 0.0 ? 0 : static_cast<int>(std::ceil(t_end / dt - 1e-12));
  const double tau = steps > 0 ? t_end / steps : 0.0;

  // Constant part of the implicit matrix: tau * blockdiag(A_int, A_omega).
  Triplets fixed;
  for (Eigen::Index r = 0; r < sys.a_int.matrix.outerSize(); ++r) {
    for (RowMatrix::InnerIterator it(sys.a_int.matrix, r); it; ++it) {
      fixed.emplace_back(r, it.col(), tau * it.value());
    }
  }
  for (Eigen::Index r = 0; r < sys.a_omega.matrix.outerSize(); ++r) {
    for (RowMatrix::InnerIterator it(sys.a_omega.matrix, r); it; ++it) {
      fixed.emplace_back(ov + r, ov + it.col(), tau * it.value());
    }
  }

  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  bool analyzed = false;
  EvolveResult out;
  const double g1 = std::max(p.lambda1, 0.0), l1 = std::max(-p.lambda1, 0.0);
  const double g2 = std::max(p.lambda2, 0.0), l2 = std::max(-p.lambda2, 0.0);
  const double gv = std::max(p.mu, 0.0), lv = std::max(-p.mu, 0.0);

  for (int s = 0; s < steps; ++s) {
    Vector loss(sys.dim()), gain(sys.dim());
    for (Eigen::Index i = 0; i < n1; ++i) {
      loss[i] = l1 + sys.al1[i] * x[i] + p.a1 * x[ov + sys.map1[i]];
      gain[i] = g1;
    }
    for (Eigen::Index i = 0; i < n2; ++i) {
      loss[n1 + i] = l2 + sys.al2[i] * x[n1 + i] + p.a2 * x[ov + sys.map2[i]];
      gain[n1 + i] = g2;
    }
    const Vector pot = sys.potential(x);
    for (Eigen::Index j = 0; j < n; ++j) {
      loss[ov + j] = lv + p.beta * x[ov + j] + pot[j];
      gain[ov + j] = gv;
    }
    Triplets t = fixed;
    for (Eigen::Index i = 0; i < sys.dim(); ++i) t.emplace_back(i, i, 1.0 + tau * loss[i]);
    ColMatrix m(sys.dim(), sys.dim());
    m.setFromTriplets(t.begin(), t.end());
    if (!analyzed) {
      lu.analyzePattern(m);
      analyzed = true;
    }
    lu.factorize(m);
    if (lu.info() != Eigen::Success) throw SolverError("evolve: implicit matrix is singular");
    Vector rhs = x.cwiseProduct((Vector::Ones(sys.dim()) + tau * gain));
    Vector xn = lu.solve(rhs);
    if (!xn.allFinite()) throw SolverError("evolve: non-finite state");
    // The implicit matrix is an M-matrix, so negative entries can only be round-off.
    xn = xn.cwiseMax(0.0);
    if (xn.head(ov).maxCoeff() > u_cap || xn.tail(n).maxCoeff() > v_cap) {
      std::ostringstream os;
      os << "evolve: blow-up detected at t = " << (s + 1) * tau;
      throw SolverError(os.str());
    }
    const double change = sup(xn - x);
    x = std::move(xn);
    out.steps = s + 1;
    out.t = (s + 1) * tau;
    if (opts.steady_tol > 0.0 && change / tau < opts.steady_tol) {
      out.reached_steady = true;
      break;
    }
  }
  out.state = sys.unpack(x);
  out.state.classify();
  return out;
}

}  // namespace membrana
