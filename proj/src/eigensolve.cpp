#include "membrana/eigensolve.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace membrana {

namespace {

using ColMatrix = Eigen::SparseMatrix<double>;

RowMatrix submatrix(const RowMatrix& a, const std::vector<Eigen::Index>& keep) {
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t k = 0; k < keep.size(); ++k) pos[keep[k]] = static_cast<Eigen::Index>(k);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    for (RowMatrix::InnerIterator it(a, keep[k]); it; ++it) {
      const auto c = pos[it.col()];
      if (c >= 0) t.emplace_back(static_cast<Eigen::Index>(k), c, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(keep.size());
  RowMatrix out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double inf_norm(const RowMatrix& a) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
    double s = 0.0;
    for (RowMatrix::InnerIterator it(a, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

EigenResult inverse_iteration(const RowMatrix& a, const EigenOptions& opts) {
  const Eigen::Index n = a.rows();
  const double norm = inf_norm(a);
  const double floor = 256.0 * std::numeric_limits<double>::epsilon() * std::max(norm, 1.0);
  const double residual_target = std::max(opts.residual_tol, floor);

  // Row sums of a Z-matrix bound the principal eigenvalue from below.
  Vector ones = Vector::Ones(n);
  double shift = (a * ones).minCoeff() - 1.0;

  ColMatrix ac = a;
  ColMatrix id(n, n);
  id.setIdentity();
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(ac);

  Vector x = ones;
  double factored_shift = std::numeric_limits<double>::quiet_NaN();
  double last_gap = std::numeric_limits<double>::infinity();
  int stalled = 0;
  EigenResult res;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    if (shift != factored_shift) {
      lu.factorize(ac - shift * id);
      if (lu.info() != Eigen::Success) {
        // Shift landed on the spectrum; back off and retry.
        shift -= std::max(1e-8, 1e-8 * std::abs(shift));
        factored_shift = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      factored_shift = shift;
    }
    Vector y = lu.solve(x);
    const double ymax = y.cwiseAbs().maxCoeff();
    if (!y.allFinite() || ymax == 0.0) {
      throw EigenError("inverse iteration produced a non-finite iterate", res.residual);
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = x[i] / y[i];
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    lo += shift;
    hi += shift;
    Vector xn = y / ymax;
    const double change = (xn - x).cwiseAbs().maxCoeff();
    x = std::move(xn);

    const double value = 0.5 * (lo + hi);
    const double gap = hi - lo;
    stalled = (gap > 0.5 * last_gap) ? stalled + 1 : 0;
    last_gap = std::min(last_gap, gap);
    res.iterations = it;
    res.value = value;

    const bool tight = gap <= 1e-13 * std::max(1.0, std::abs(value)) + floor;
    // With a nearly degenerate second eigenvalue the iterate may keep drifting inside the
    // near-invariant subspace; tight Collatz-Wielandt bounds plus a small residual suffice.
    if ((change < opts.vector_tol && (tight || stalled >= 3)) || (tight && it >= 3)) {
      res.residual = (a * x - value * x).cwiseAbs().maxCoeff();
      if (res.residual <= residual_target) {
        res.eigenfunction = std::move(x);
        return res;
      }
    }
    if (gap >= 0.0 && std::isfinite(lo)) {
      shift = lo - 0.5 * gap - 1e-10 * (1.0 + std::abs(lo));
    }
  }
  res.residual = (a * x - res.value * x).cwiseAbs().maxCoeff();
  std::ostringstream os;
  os << "principal eigenpair: no convergence after " << opts.max_iterations
     << " iterations (residual " << res.residual << ")";
  throw EigenError(os.str(), res.residual);
}

}  // namespace

EigenResult principal_eigenpair(const SparseOperator& op, const EigenOptions& opts) {
  if (!op.has_dirichlet()) return inverse_iteration(op.matrix, opts);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < op.dim(); ++i) {
    if (!op.dirichlet_rows[i]) keep.push_back(i);
  }
  EigenResult r = inverse_iteration(submatrix(op.matrix, keep), opts);
  Vector full = Vector::Zero(op.dim());
  for (std::size_t k = 0; k < keep.size(); ++k) full[keep[k]] = r.eigenfunction[k];
  r.eigenfunction = std::move(full);
  return r;
}

std::vector<EigenResult> sigma1_components(const Mesh& mesh, Region region, double d,
                                          const CoefficientField& c, const BoundarySpec& bc,
                                          const EigenOptions& opts) {
  const SparseOperator op = assemble_scalar(mesh, region, d, c, bc);
  std::vector<EigenResult> out;
  for (const auto& comp : mesh.components(region)) {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = comp.begin; i < comp.end; ++i) {
      if (!op.dirichlet_rows[i]) keep.push_back(static_cast<Eigen::Index>(i));
    }
    EigenResult r = inverse_iteration(submatrix(op.matrix, keep), opts);
    Vector full = Vector::Zero(op.dim());
    for (std::size_t k = 0; k < keep.size(); ++k) full[keep[k]] = r.eigenfunction[k];
    r.eigenfunction = std::move(full);
    out.push_back(std::move(r));
  }
  return out;
}

EigenResult sigma1(const Mesh& mesh, Region region, double d, const CoefficientField& c,
                   const BoundarySpec& bc, const EigenOptions& opts) {
  auto parts = sigma1_components(mesh, region, d, c, bc, opts);
  std::size_t best = 0;
  for (std::size_t k = 1; k < parts.size(); ++k) {
    if (parts[k].value < parts[best].value) best = k;
  }
  return std::move(parts[best]);
}

EigenResult lambda1(const Mesh& mesh, double d, const CoefficientField& c1,
                    const CoefficientField& c2, const EigenOptions& opts) {
  return principal_eigenpair(assemble_interface(mesh, d, c1, c2), opts);
}

EigenResult lambda1(const Mesh& mesh, double d, double c1, double c2, const EigenOptions& opts) {
  return lambda1(mesh, d, CoefficientField::constant(mesh, Region::Omega1, c1),
                 CoefficientField::constant(mesh, Region::Omega2, c2), opts);
}

std::vector<std::pair<double, double>> lambda1_growth_check(const Mesh& mesh, double d,
                                                            const CoefficientField& c1,
                                                            const CoefficientField& c2,
                                                            const std::vector<double>& mu_list) {
  if (!(c1.values.minCoeff() > 0.0) || !(c2.values.minCoeff() > 0.0)) {
    throw ValidationError("lambda1_growth_check needs strictly positive potentials");
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(mu_list.size());
  for (double mu : mu_list) {
    auto r = lambda1(mesh, d, CoefficientField::from(Region::Omega1, mu * c1.values),
                     CoefficientField::from(Region::Omega2, mu * c2.values));
    out.emplace_back(mu, r.value);
  }
  return out;
}

}  // namespace membrana
