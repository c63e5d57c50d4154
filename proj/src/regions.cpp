#include "membrana/regions.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

namespace membrana {

namespace {

/// Runs fn(k) for k in [0, count) on up to `threads` workers. The first exception thrown
/// by any worker is rethrown after all workers have stopped.
template <typename Fn>
void parallel_for(int count, int threads, Fn fn) {
  const int workers = std::max(1, std::min(threads, count));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

double sup(const Vector& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

ModelParams at_point(const CurveEngine& engine, double lambda1, double lambda2, double mu) {
  ModelParams p = engine.params();
  p.lambda1 = lambda1;
  p.lambda2 = lambda2;
  p.mu = mu;
  return p;
}

/// Newton from the seed first (cheap and follows the branch), then the solver's own starts.
std::optional<StateTriple> find_coexistence(const Mesh& mesh, const ModelParams& p,
                                            const std::optional<StateTriple>& seed) {
  if (seed) {
    const auto r = newton_coexistence(mesh, p, *seed);
    if (r.found && r.state.coexistence()) return r.state;
  }
  const auto r = solve_coexistence(mesh, p);
  if (r.found) return r.state;
  return std::nullopt;
}

}  // namespace

std::string to_string(Confirmation c) {
  switch (c) {
    case Confirmation::Unchecked:
      return "unchecked";
    case Confirmation::Confirmed:
      return "confirmed";
    case Confirmation::Refuted:
      return "refuted";
  }
  return "unknown";
}

void GridSpec::validate() const {
  if (nx < 2 || nmu < 2) throw ValidationError("grid: at least two points per axis are required");
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
    throw ValidationError("grid: x range must be finite and nonempty");
  }
  if (!std::isfinite(mu_min) || !std::isfinite(mu_max) || !(mu_min < mu_max)) {
    throw ValidationError("grid: mu range must be finite and nonempty");
  }
}

double GridSpec::x(int i) const { return x_min + (x_max - x_min) * static_cast<double>(i) / (nx - 1); }

double GridSpec::mu(int j) const { return mu_min + (mu_max - mu_min) * static_cast<double>(j) / (nmu - 1); }

RegionMap region_map(const CurveEngine& engine, RegionMode mode, double lambda2, const GridSpec& grid,
                     const RegionMapOptions& opts) {
  grid.validate();
  if (opts.threads < 1) throw ValidationError("region map: threads must be at least 1");
  if (opts.band < 0) throw ValidationError("region map: band must be non-negative");
  RegionMap map;
  map.mode = mode;
  map.lambda2 = lambda2;
  map.grid = grid;
  map.cells.resize(static_cast<std::size_t>(grid.nx * grid.nmu));
  auto cell = [&](int i, int j) -> RegionCell& { return map.cells[static_cast<std::size_t>(i * grid.nmu + j)]; };
  const bool equal = mode == RegionMode::EqualLambda;

  // In the equal-lambda mode the lambda* bound depends on mu only: one value per row.
  std::vector<double> lambda_star(static_cast<std::size_t>(grid.nmu), std::numeric_limits<double>::infinity());
  if (equal && opts.use_large_bound) {
    parallel_for(grid.nmu, opts.threads, [&](int j) {
      const double mu = grid.mu(j);
      if (mu > 0.0) lambda_star[static_cast<std::size_t>(j)] = engine.lambda_star_constructive(mu);
    });
  }

  parallel_for(grid.nx, opts.threads, [&](int i) {
    const double x = grid.x(i);
    const double l2 = equal ? x : lambda2;
    for (int j = 0; j < grid.nmu; ++j) {
      RegionCell& c = cell(i, j);
      c.x = x;
      c.mu = grid.mu(j);
      c.cls = engine.classify_point(x, l2, c.mu, opts.use_large_bound);
      if (equal && c.cls == PointClass::Indeterminate && x > lambda_star[static_cast<std::size_t>(j)]) {
        c.cls = PointClass::NonExistenceLarge;
      }
    }
  });

  if (!opts.confirm) return map;

  std::vector<char> check(map.cells.size(), 0);
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.nmu; ++j) {
      const auto cls = cell(i, j).cls;
      if (cls == PointClass::CoexistencePredicted) {
        check[static_cast<std::size_t>(i * grid.nmu + j)] = 1;
      } else if (cls == PointClass::Indeterminate) {
        bool near = false;
        for (int di = -opts.band; di <= opts.band && !near; ++di) {
          for (int dj = -opts.band; dj <= opts.band && !near; ++dj) {
            const int ii = i + di;
            const int jj = j + dj;
            if (ii < 0 || jj < 0 || ii >= grid.nx || jj >= grid.nmu) continue;
            near = cell(ii, jj).cls == PointClass::CoexistencePredicted;
          }
        }
        if (near) check[static_cast<std::size_t>(i * grid.nmu + j)] = 1;
      }
    }
  }

  const Mesh& mesh = engine.mesh();
  parallel_for(grid.nx, opts.threads, [&](int i) {
    std::optional<StateTriple> seed;
    int seed_j = -2;
    for (int j = 0; j < grid.nmu; ++j) {
      if (!check[static_cast<std::size_t>(i * grid.nmu + j)]) continue;
      RegionCell& c = cell(i, j);
      const ModelParams p = at_point(engine, c.x, equal ? c.x : lambda2, c.mu);
      const auto state = find_coexistence(mesh, p, seed_j == j - 1 ? seed : std::nullopt);
      if (state) {
        c.confirmation = Confirmation::Confirmed;
        seed = state;
        seed_j = j;
      } else {
        c.confirmation = Confirmation::Refuted;
      }
    }
  });
  return map;
}

CoexistenceVerdict check_coexistence(const Mesh& mesh, const ModelParams& p, const std::optional<StateTriple>& seed,
                                     const RefutationOptions& ropts) {
  CoexistenceVerdict out;
  if (p.mu > 0.0) {
    if (auto state = find_coexistence(mesh, p, seed)) {
      out.result = Confirmation::Confirmed;
      out.state = std::move(state);
      out.note = "newton";
      return out;
    }
  }
  // Parabolic oracle from a positive state well inside the a priori bounds.
  const auto n1 = static_cast<Eigen::Index>(mesh.size(Region::Omega1));
  const auto n2 = static_cast<Eigen::Index>(mesh.size(Region::Omega2));
  const auto n = static_cast<Eigen::Index>(mesh.size(Region::Omega));
  const double ub = std::max(1.0, 0.5 * p.u_bound(mesh));
  StateTriple init;
  init.u1 = Vector::Constant(n1, ub);
  init.u2 = Vector::Constant(n2, ub);
  init.v = Vector::Constant(n, std::max(1.0, 0.5 * p.mu));
  const double h = mesh.segments()[1].h;
  try {
    const auto ev = evolve_parabolic(mesh, p, init, ropts.t_end, std::min(0.05, 4.0 * h));
    const double s1 = sup(ev.state.u1);
    const double s2 = sup(ev.state.u2);
    const double sv = sup(ev.state.v);
    if (std::min({s1, s2, sv}) < ropts.extinction) {
      out.result = Confirmation::Refuted;
      out.note = sv < ropts.extinction ? "v extinct" : "u extinct";
    } else {
      out.note = "newton failed but the parabolic flow keeps all components";
    }
  } catch (const SolverError& e) {
    out.note = std::string("parabolic oracle failed: ") + e.what();
  }
  return out;
}

namespace {

/// Shared bisection: `verdict(x, seed)` decides a point, starting from a confirmed lower point.
template <typename Verdict>
void bisect_bracket(Bracket& b, std::optional<StateTriple> seed, const BracketOptions& opts, Verdict verdict) {
  int k = 0;
  while (b.upper - b.lower > opts.rel_tol * std::max(1.0, std::abs(b.upper)) && k < opts.max_bisections) {
    const double mid = 0.5 * (b.lower + b.upper);
    const auto v = verdict(mid, seed);
    ++b.evaluations;
    ++k;
    if (v.result == Confirmation::Confirmed) {
      b.lower = mid;
      seed = v.state;
    } else if (v.result == Confirmation::Refuted) {
      b.upper = mid;
      b.upper_refuted = true;
    } else {
      b.note = "bisection stopped at an unresolved point (" + v.note + ")";
      break;
    }
  }
}

}  // namespace

Bracket estimate_mu_star(const CurveEngine& engine, double lambda1, double lambda2, const BracketOptions& opts) {
  if (!(engine.lambda1_const(-lambda1, -lambda2) < 0.0)) {
    throw DomainError("mu* bracket requires Lambda_1(-lambda1, -lambda2) < 0");
  }
  Bracket b;
  b.constructive = engine.mu_star_constructive(lambda1, lambda2);
  const double lo_w = opts.window_lo.value_or(0.0);
  const double hi_w = opts.window_hi.value_or(b.constructive);
  if (!(lo_w < hi_w)) throw ValidationError("mu* bracket: empty window");
  const Mesh& mesh = engine.mesh();
  auto verdict = [&](double mu, const std::optional<StateTriple>& seed) {
    return check_coexistence(mesh, at_point(engine, lambda1, lambda2, mu), seed, opts.refutation);
  };

  std::vector<double> candidates;
  const double mu0 = engine.compute_mu0(lambda1, lambda2);
  if (const auto mu1 = engine.compute_mu1(lambda1, lambda2)) {
    const double a = std::min(mu0, *mu1);
    const double c = std::max(mu0, *mu1);
    for (double f : {0.5, 0.25, 0.75, 0.1, 0.9}) candidates.push_back(a + f * (c - a));
  }
  for (int k = 1; k < 16; ++k) candidates.push_back(lo_w + (hi_w - lo_w) * k / 16.0);

  std::optional<StateTriple> seed;
  bool found = false;
  for (double mu : candidates) {
    if (!(mu > lo_w && mu < hi_w) || !(mu > 0.0)) continue;
    const auto v = verdict(mu, std::nullopt);
    ++b.evaluations;
    if (v.result == Confirmation::Confirmed) {
      b.lower = mu;
      seed = v.state;
      found = true;
      break;
    }
  }
  if (!found) throw SolverError("mu* bracket: window exhaustion, no confirmed coexistence state in the window");

  b.upper = hi_w;
  const auto top = verdict(b.upper, seed);
  ++b.evaluations;
  if (top.result == Confirmation::Confirmed) {
    throw SolverError("mu* bracket: window exhaustion, coexistence confirmed at the upper window end");
  }
  b.upper_refuted = top.result == Confirmation::Refuted;
  if (!b.upper_refuted) b.note = "upper window end unresolved (" + top.note + ")";
  bisect_bracket(b, seed, opts, verdict);
  return b;
}

Bracket estimate_lambda_star(const CurveEngine& engine, double mu, const BracketOptions& opts) {
  if (!(mu > 0.0)) throw DomainError("lambda* bracket requires mu > 0");
  Bracket b;
  b.constructive = engine.lambda_star_constructive(mu);
  const double lo_w = opts.window_lo.value_or(0.0);
  const double hi_w = opts.window_hi.value_or(b.constructive);
  if (!(lo_w < hi_w)) throw ValidationError("lambda* bracket: empty window");
  const Mesh& mesh = engine.mesh();
  auto verdict = [&](double lambda, const std::optional<StateTriple>& seed) {
    return check_coexistence(mesh, at_point(engine, lambda, lambda, mu), seed, opts.refutation);
  };

  // Predicted cells first, then the rest of the window.
  std::vector<double> predicted;
  std::vector<double> others;
  for (int k = 1; k < 32; ++k) {
    const double lambda = lo_w + (hi_w - lo_w) * k / 32.0;
    if (!(lambda > 0.0)) continue;
    if (engine.classify_point(lambda, lambda, mu, false) == PointClass::CoexistencePredicted) {
      predicted.push_back(lambda);
    } else {
      others.push_back(lambda);
    }
  }
  std::optional<StateTriple> seed;
  bool found = false;
  // The largest confirmed start gives the tightest bracket.
  std::reverse(predicted.begin(), predicted.end());
  for (const auto* list : {&predicted, &others}) {
    for (double lambda : *list) {
      const auto v = verdict(lambda, std::nullopt);
      ++b.evaluations;
      if (v.result == Confirmation::Confirmed) {
        b.lower = lambda;
        seed = v.state;
        found = true;
        break;
      }
    }
    if (found) break;
  }
  if (!found) throw SolverError("lambda* bracket: window exhaustion, no confirmed coexistence state in the window");

  b.upper = hi_w;
  const auto top = verdict(b.upper, seed);
  ++b.evaluations;
  if (top.result == Confirmation::Confirmed) {
    throw SolverError("lambda* bracket: window exhaustion, coexistence confirmed at the upper window end");
  }
  b.upper_refuted = top.result == Confirmation::Refuted;
  if (!b.upper_refuted) b.note = "upper window end unresolved (" + top.note + ")";
  bisect_bracket(b, seed, opts, verdict);
  return b;
}

}  // namespace membrana
