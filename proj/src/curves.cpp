#include "membrana/curves.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace membrana {

namespace {

constexpr int kMaxExpansions = 80;

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

std::string to_string(CurveFlag f) {
  switch (f) {
    case CurveFlag::OK:
      return "ok";
    case CurveFlag::OutOfDomain:
      return "out_of_domain";
    case CurveFlag::Indeterminate:
      return "indeterminate";
  }
  return "unknown";
}

std::string to_string(PointClass c) {
  switch (c) {
    case PointClass::CoexistencePredicted:
      return "coexistence";
    case PointClass::NonExistenceNecessary:
      return "nonexistence_necessary";
    case PointClass::NonExistenceLarge:
      return "nonexistence_large";
    case PointClass::Indeterminate:
      return "indeterminate";
  }
  return "unknown";
}

RootResult find_root_increasing(const std::function<double(double)>& f, double lo, double hi,
                                double f_lo, double f_hi, double f_tol, double bisect_width,
                                double secant_tol) {
  if (!(lo < hi)) throw SolverError("find_root_increasing: empty bracket");
  if (f_lo > 0.0 || f_hi < 0.0) {
    throw SolverError("find_root_increasing: no sign change on [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  RootResult r;
  if (f_lo == 0.0) return {lo, 0.0, 0};
  if (f_hi == 0.0) return {hi, 0.0, 0};

  while (hi - lo > bisect_width) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    ++r.evaluations;
    if (std::abs(fm) <= f_tol && hi - lo <= 1e3 * bisect_width) return {mid, fm, r.evaluations};
    if (fm < 0.0) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
  }

  // Illinois-modified regula falsi: keeps the bracket and converges superlinearly.
  double best_x = std::abs(f_lo) < std::abs(f_hi) ? lo : hi;
  double best_f = std::abs(f_lo) < std::abs(f_hi) ? f_lo : f_hi;
  int side = 0;
  double prev = std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 100; ++it) {
    double x = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double fx = f(x);
    ++r.evaluations;
    if (std::abs(fx) < std::abs(best_f)) {
      best_x = x;
      best_f = fx;
    }
    if (std::abs(fx) <= f_tol || (std::isfinite(prev) && std::abs(x - prev) < secant_tol) ||
        hi - lo < secant_tol) {
      break;
    }
    prev = x;
    if (fx < 0.0) {
      lo = x;
      f_lo = fx;
      if (side == -1) f_hi *= 0.5;
      side = -1;
    } else {
      hi = x;
      f_hi = fx;
      if (side == 1) f_lo *= 0.5;
      side = 1;
    }
  }
  r.x = best_x;
  r.f = best_f;
  return r;
}

CurveEngine::CurveEngine(Mesh mesh, ModelParams params)
    : mesh_(std::move(mesh)), params_(std::move(params)) {
  params_.validate(&mesh_);
  const auto& g = mesh_.geometry();
  sigma1_ = membrana::sigma1(mesh_, Region::Omega1, params_.d, CoefficientField::constant(mesh_, Region::Omega1, 0.0),
                   BoundarySpec::robin_on_interface(g, Region::Omega1))
                .value;
  sigma2_ = membrana::sigma1(mesh_, Region::Omega2, params_.d, CoefficientField::constant(mesh_, Region::Omega2, 0.0),
                   BoundarySpec::robin_on_interface(g, Region::Omega2))
                .value;
}

double CurveEngine::lambda1_const(double c1, double c2) const {
  const Key key{c1, c2};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = lambda_cache_.find(key);
    if (it != lambda_cache_.end()) return it->second;
  }
  const double value = membrana::lambda1(mesh_, params_.d, c1, c2).value;
  std::lock_guard<std::mutex> lock(mutex_);
  lambda_cache_[key] = value;
  return value;
}

std::shared_ptr<const PairSolution> CurveEngine::semitrivial(double lambda1, double lambda2) const {
  const Key key{lambda1, lambda2};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = pair_cache_.find(key);
    if (it != pair_cache_.end()) return it->second;
  }
  auto sol = std::make_shared<const PairSolution>(
      solve_membrane_logistic(mesh_, lambda1, lambda2, params_.alpha1, params_.alpha2, params_.d));
  std::lock_guard<std::mutex> lock(mutex_);
  pair_cache_[key] = sol;
  return sol;
}

CurveSample CurveEngine::curve_H(double nu2) const {
  CurveSample s;
  s.abscissa = nu2;
  if (!std::isfinite(nu2) || nu2 >= sigma2_ - kEpsilonBand) {
    s.flag = CurveFlag::OutOfDomain;
    s.value = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = h_cache_.find({nu2, 0.0});
    if (it != h_cache_.end()) return it->second;
  }
  // f(nu1) = -Lambda_1(-nu1, -nu2) increases in nu1. Lambda_1 <= sigma1 - nu1, so
  // nu1 = sigma1 + 1 gives f >= 1; Lambda_1 -> sigma2 - nu2 > 0 as nu1 -> -infinity.
  auto f = [&](double nu1) { return -lambda1_const(-nu1, -nu2); };
  const double hi = sigma1_ + 1.0;
  const double f_hi = f(hi);
  double step = 1.0;
  double lo = hi - step;
  double f_lo = f(lo);
  int k = 0;
  while (f_lo >= 0.0 && k < kMaxExpansions) {
    step *= 2.0;
    lo = hi - step;
    f_lo = f(lo);
    ++k;
  }
  if (f_lo >= 0.0) {
    s.flag = CurveFlag::Indeterminate;
    s.value = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  // The eigenvalue is only resolved relative to the size of the potentials.
  const double scale = std::max({1.0, std::abs(nu2), std::abs(lo)});
  const auto root = find_root_increasing(f, lo, hi, f_lo, f_hi, 1e-9 * scale * 0.1);
  s.value = root.x;
  s.residual = std::abs(root.f);
  s.flag = s.residual < 1e-9 * std::max({1.0, std::abs(nu2), std::abs(root.x)})
               ? CurveFlag::OK
               : CurveFlag::Indeterminate;
  std::lock_guard<std::mutex> lock(mutex_);
  h_cache_[{nu2, 0.0}] = s;
  return s;
}

double CurveEngine::curve_H_slope_at_zero() const {
  auto central = [&](double step) {
    const auto p = curve_H(step);
    const auto m = curve_H(-step);
    if (p.flag != CurveFlag::OK || m.flag != CurveFlag::OK) {
      throw SolverError("curve_H_slope_at_zero: H not resolved near 0");
    }
    return (p.value - m.value) / (2.0 * step);
  };
  const double s = 1e-3;
  const double d1 = central(s);
  const double d2 = central(s / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

double CurveEngine::curve_H_slope_formula() const {
  const auto& g = mesh_.geometry();
  const auto m = measures(g);
  return -(g.gamma1 / g.gamma2) * (m.omega2 / m.omega1);
}

CurveSample CurveEngine::curve_G(double mu, double lambda2) const {
  CurveSample s;
  s.abscissa = mu;
  if (!(mu > (lambda2 - sigma2_) / params_.a2 + kEpsilonBand)) {
    s.flag = CurveFlag::OutOfDomain;
    s.value = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const auto h = curve_H(lambda2 - params_.a2 * mu);
  s.flag = h.flag;
  s.residual = h.residual;
  s.value = params_.a1 * mu + h.value;
  return s;
}

CurveSample CurveEngine::curve_g(double lambda1, double lambda2) const {
  CurveSample s;
  s.abscissa = lambda1;
  const auto pair = semitrivial(lambda1, lambda2);
  if (pair->status != Existence::Positive) {
    s.flag = pair->status == Existence::Indeterminate ? CurveFlag::Indeterminate : CurveFlag::OutOfDomain;
    s.value = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  const auto eig = v_eigen_at_semitrivial(mesh_, params_, pair->pair);
  s.value = eig.value;
  s.residual = eig.residual;
  return s;
}

CurveSample CurveEngine::curve_g_equal(double lambda) const {
  if (!(lambda > 0.0)) {
    CurveSample s;
    s.abscissa = lambda;
    s.flag = CurveFlag::OutOfDomain;
    s.value = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  return curve_g(lambda, lambda);
}

double CurveEngine::compute_mu0(double lambda1, double lambda2) const {
  const auto s = curve_g(lambda1, lambda2);
  if (s.flag != CurveFlag::OK) {
    throw DomainError("mu0 requires the semitrivial pair, i.e. Lambda_1(-lambda1, -lambda2) < 0 (got " +
                      to_string(s.flag) + " at lambda1=" + fmt(lambda1) + ", lambda2=" + fmt(lambda2) + ")");
  }
  return s.value;
}

std::optional<double> CurveEngine::compute_mu1(double lambda1, double lambda2) const {
  const double a1 = params_.a1;
  const double a2 = params_.a2;
  auto f = [&](double mu) { return lambda1_const(-lambda1 + a1 * mu, -lambda2 + a2 * mu); };
  const double f0 = f(0.0);
  if (!(f0 < 0.0)) {
    throw DomainError("mu1 requires Lambda_1(-lambda1, -lambda2) < 0 (value " + fmt(f0) + ")");
  }
  const double hi = std::max(lambda1 / a1, lambda2 / a2) + 1.0;
  const double f_hi = f(hi);
  if (!(f_hi > 0.0)) return std::nullopt;
  const double scale = std::max({1.0, std::abs(lambda1), std::abs(lambda2)});
  return find_root_increasing(f, 0.0, hi, f0, f_hi, 1e-10 * scale).x;
}

Sigma0Result CurveEngine::curve_sigma0_and_Ghat(double mu) const {
  if (!(mu >= 0.0)) throw DomainError("sigma0 requires mu >= 0");
  const double a1 = params_.a1;
  const double a2 = params_.a2;
  const double target = (a2 - a1) * mu;
  Sigma0Result r;
  if (target == 0.0) {
    // h(0) = H(0) = 0 exactly.
    r.sigma0 = 0.0;
    r.ghat = a2 * mu;
    const auto h0 = curve_H(0.0);
    r.consistency = std::abs(h0.value + a1 * mu - r.ghat);
    return r;
  }
  // q(sigma) = target - h(sigma) = target + sigma - H(sigma) is increasing.
  bool ok = true;
  auto q = [&](double sigma) {
    const auto hs = curve_H(sigma);
    if (hs.flag != CurveFlag::OK) ok = false;
    return target + sigma - hs.value;
  };
  double lo = 0.0, hi = 0.0, q_lo = 0.0, q_hi = 0.0;
  if (target > 0.0) {
    // sigma0 < 0; since 0 < H(sigma) < sigma1 there, sigma0 lies in (-target, sigma1 - target).
    hi = 0.0;
    q_hi = target;
    lo = -target - 1.0;
    q_lo = q(lo);
    int k = 0;
    while (q_lo >= 0.0 && k < kMaxExpansions) {
      lo = 2.0 * lo;
      q_lo = q(lo);
      ++k;
    }
  } else {
    // sigma0 in (0, sigma2); h -> -infinity as sigma -> sigma2.
    lo = 0.0;
    q_lo = target;
    hi = sigma2_ - 2.0 * kEpsilonBand;
    q_hi = q(hi);
    if (!(q_hi > 0.0)) {
      r.flag = CurveFlag::Indeterminate;
      r.sigma0 = hi;
      r.ghat = std::numeric_limits<double>::quiet_NaN();
      return r;
    }
  }
  const auto root = find_root_increasing(q, lo, hi, q_lo, q_hi, 1e-10);
  r.sigma0 = root.x;
  r.ghat = r.sigma0 + a2 * mu;
  const auto hs = curve_H(r.sigma0);
  r.consistency = std::abs(hs.value + a1 * mu - r.ghat);
  if (!ok || hs.flag != CurveFlag::OK) r.flag = CurveFlag::Indeterminate;
  return r;
}

double CurveEngine::mu_star_constructive(double lambda1, double lambda2) const {
  const double l0 = lambda1_const(-lambda1, -lambda2);
  if (!(l0 < 0.0)) {
    throw DomainError("mu* bound requires Lambda_1(-lambda1, -lambda2) < 0");
  }
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = mu_star_cache_.find({lambda1, lambda2});
    if (it != mu_star_cache_.end()) return it->second;
  }
  const double k = std::max(lambda1 / params_.alpha1.min_on(mesh_.coords(Region::Omega1)),
                            lambda2 / params_.alpha2.min_on(mesh_.coords(Region::Omega2)));
  const auto n1 = static_cast<Eigen::Index>(mesh_.size(Region::Omega1));
  const auto n2 = static_cast<Eigen::Index>(mesh_.size(Region::Omega2));
  const Vector c = combine_on_omega(mesh_, Vector::Constant(n1, k * params_.b1), Vector::Constant(n2, k * params_.b2));
  const auto c_field = CoefficientField::from(Region::Omega, c);
  const auto bc = BoundarySpec::neumann(Region::Omega);
  const double threshold = membrana::sigma1(mesh_, Region::Omega, params_.d, c_field, bc).value;
  const SpatialCoefficient beta = params_.beta;

  // F(mu) = Lambda_1(-l1 + a1 w, -l2 + a2 w) with w the logistic solution; increasing in mu.
  auto f = [&](double mu) {
    const auto w = solve_logistic_scalar(mesh_, Region::Omega, mu, c_field, beta, bc, params_.d);
    if (w.status != Existence::Positive) return l0;
    const Vector w1 = restrict_to(mesh_, Region::Omega1, w.field);
    const Vector w2 = restrict_to(mesh_, Region::Omega2, w.field);
    const Vector p1 = (params_.a1 * w1).array() - lambda1;
    const Vector p2 = (params_.a2 * w2).array() - lambda2;
    return membrana::lambda1(mesh_, params_.d, CoefficientField::from(Region::Omega1, p1),
                   CoefficientField::from(Region::Omega2, p2))
        .value;
  };
  double lo = std::max(0.0, threshold + 2.0 * kEpsilonBand);
  double f_lo = f(lo);
  double width = std::max(1.0, std::abs(threshold));
  double hi = lo + width;
  double f_hi = f(hi);
  int it = 0;
  while (f_hi <= 0.0 && it < kMaxExpansions) {
    lo = hi;
    f_lo = f_hi;
    width *= 2.0;
    hi = lo + width;
    f_hi = f(hi);
    ++it;
  }
  if (f_hi <= 0.0) throw SolverError("mu* bound: no sign change found");
  double value = hi;
  if (f_lo < 0.0) {
    // Bisection only: the bound is reported as the upper end of the final bracket.
    while (hi - lo > 1e-6 * std::max(1.0, hi)) {
      const double mid = 0.5 * (lo + hi);
      if (f(mid) > 0.0) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    value = hi;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  mu_star_cache_[{lambda1, lambda2}] = value;
  return value;
}

double CurveEngine::lambda_star_constructive(double mu) const {
  if (!(mu > 0.0)) throw DomainError("lambda* bound requires mu > 0");
  const auto bc = BoundarySpec::neumann(Region::Omega);
  const auto n1 = static_cast<Eigen::Index>(mesh_.size(Region::Omega1));
  const auto n2 = static_cast<Eigen::Index>(mesh_.size(Region::Omega2));
  // F(lambda) = sigma_1^Omega[-d v'' + b1 w1 chi1 + b2 w2 chi2; N] - mu, increasing in lambda.
  auto f = [&](double lambda) {
    const auto w1 = solve_omega(mesh_, 1, lambda - params_.a1 * mu, params_.alpha1, params_.d);
    const auto w2 = solve_omega(mesh_, 2, lambda - params_.a2 * mu, params_.alpha2, params_.d);
    const Vector f1 = w1.status == Existence::Positive ? Vector(params_.b1 * w1.field) : Vector::Zero(n1);
    const Vector f2 = w2.status == Existence::Positive ? Vector(params_.b2 * w2.field) : Vector::Zero(n2);
    const Vector pot = combine_on_omega(mesh_, f1, f2);
    return membrana::sigma1(mesh_, Region::Omega, params_.d, CoefficientField::from(Region::Omega, pot), bc).value - mu;
  };
  double lo = std::min(params_.a1, params_.a2) * mu;
  double f_lo = f(lo);
  double width = std::max(1.0, mu);
  double hi = lo + width;
  double f_hi = f(hi);
  int it = 0;
  while (f_hi < 0.0 && it < kMaxExpansions) {
    lo = hi;
    f_lo = f_hi;
    width *= 2.0;
    hi = lo + width;
    f_hi = f(hi);
    ++it;
  }
  if (f_hi < 0.0) throw SolverError("lambda* bound: no sign change found");
  if (f_lo >= 0.0) return lo;
  while (hi - lo > 1e-6 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

PointClass CurveEngine::classify_point(double lambda1, double lambda2, double mu, bool use_large_bound) const {
  if (mu <= 0.0) return PointClass::NonExistenceNecessary;
  const double l0 = lambda1_const(-lambda1, -lambda2);
  if (l0 >= kEpsilonBand) return PointClass::NonExistenceNecessary;
  if (l0 > -kEpsilonBand) return PointClass::Indeterminate;
  const auto g = curve_g(lambda1, lambda2);
  if (g.flag != CurveFlag::OK) return PointClass::Indeterminate;
  const double l_mu = lambda1_const(-lambda1 + params_.a1 * mu, -lambda2 + params_.a2 * mu);
  if ((mu - g.value) * l_mu < -kEpsilonBand) return PointClass::CoexistencePredicted;
  if (use_large_bound && mu > mu_star_constructive(lambda1, lambda2)) return PointClass::NonExistenceLarge;
  return PointClass::Indeterminate;
}

LimitVariants CurveEngine::limiminus_variants(double lambda2, double probe_lambda1) const {
  const auto w = solve_omega(mesh_, 2, lambda2, params_.alpha2, params_.d);
  if (w.status != Existence::Positive) {
    throw DomainError("the lambda1 -> -infinity limit of g requires lambda2 > sigma2");
  }
  LimitVariants out;
  out.probe_lambda1 = probe_lambda1;
  const auto g = curve_g(probe_lambda1, lambda2);
  if (g.flag != CurveFlag::OK) throw SolverError("g is not resolved at the probe lambda1");
  out.g_probe = g.value;
  const Vector pot2 = params_.b2 * w.field;
  const auto c2 = CoefficientField::from(Region::Omega2, pot2);
  out.omega2_neumann = membrana::sigma1(mesh_, Region::Omega2, params_.d, c2, BoundarySpec::neumann(Region::Omega2)).value;
  out.omega2_robin =
      membrana::sigma1(mesh_, Region::Omega2, params_.d, c2, BoundarySpec::robin_on_interface(mesh_.geometry(), Region::Omega2))
          .value;
  const Vector pot = combine_on_omega(mesh_, Vector::Zero(static_cast<Eigen::Index>(mesh_.size(Region::Omega1))), pot2);
  out.whole_domain = membrana::sigma1(mesh_, Region::Omega, params_.d, CoefficientField::from(Region::Omega, pot),
                            BoundarySpec::neumann(Region::Omega))
                         .value;
  const double dn = std::abs(out.omega2_neumann - out.g_probe);
  const double dr = std::abs(out.omega2_robin - out.g_probe);
  const double dw = std::abs(out.whole_domain - out.g_probe);
  if (dn <= dr && dn <= dw) {
    out.closest = "neumann";
  } else if (dr <= dw) {
    out.closest = "robin";
  } else {
    out.closest = "whole";
  }
  return out;
}

double CurveEngine::dirichlet_neumann_eigenvalue(const Vector& field_on_omega2) const {
  if (field_on_omega2.size() != static_cast<Eigen::Index>(mesh_.size(Region::Omega2))) {
    throw ValidationError("dirichlet_neumann_eigenvalue: field must live on the Omega2 nodes");
  }
  const Vector pot = params_.b2 * field_on_omega2;
  return membrana::sigma1(mesh_, Region::Omega2, params_.d, CoefficientField::from(Region::Omega2, pot),
                BoundarySpec::dirichlet_on_interface(Region::Omega2, 0.0))
      .value;
}

}  // namespace membrana
