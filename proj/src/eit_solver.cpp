#include "privmech/eit_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace privmech {

namespace {

constexpr double kBoundaryTol = 1e-12;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// v [f(p)] v^T for a componentwise weight function already evaluated into w.
double weighted_quadratic(const std::vector<double>& v, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * v[i] * w[i];
  return s;
}

void require_strictly_positive(const Distribution& p, const char* field) {
  if (!p.strictly_positive())
    throw ValidationError(field, "entries must be strictly positive");
}

}  // namespace

std::string to_string(CaseTag tag) {
  switch (tag) {
    case CaseTag::FirstOnly: return "first_only";
    case CaseTag::SecondOnly: return "second_only";
    case CaseTag::Both: return "both";
  }
  return "unknown";
}

Mechanism perfect_privacy_mechanism(const std::vector<double>& w0, std::size_t m) {
  if (w0.empty() || m < w0.size())
    throw ValidationError("perfect_privacy_mechanism", "need m >= output size >= 1");
  double sum = 0.0;
  for (double x : w0) {
    if (!(x >= 0.0)) throw ValidationError("w0", "negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw ValidationError("w0", "entries must sum to 1");
  return Mechanism(std::vector<std::vector<double>>(m, w0));
}

Mechanism perfect_privacy_mechanism(const Distribution& w0, std::size_t m) {
  return perfect_privacy_mechanism(w0.probs(), m);
}

PrincipalDirection principal_direction(const Distribution& p1, const Distribution& p2) {
  if (p1.size() != p2.size())
    throw ValidationError("principal_direction", "dimension mismatch");
  PrincipalDirection dir;
  dir.v.resize(p1.size());
  double norm2 = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    dir.v[i] = p1[i] - p2[i];
    norm2 += dir.v[i] * dir.v[i];
  }
  dir.lambda = norm2;
  if (norm2 == 0.0) {
    dir.degenerate = true;
    std::fill(dir.v.begin(), dir.v.end(), 0.0);
    return dir;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : dir.v) x *= inv;
  return dir;
}

CaseTag select_active_case(const Distribution& p1, const Distribution& p2,
                           double eps1, double eps2, const PrincipalDirection& dir) {
  if (dir.degenerate || dir.lambda <= 0.0)
    throw ValidationError("select_active_case", "degenerate direction");
  if (!(eps1 > 0.0) || !(eps2 > 0.0))
    throw ValidationError("select_active_case", "budgets must be positive");
  require_strictly_positive(p1, "p1");
  require_strictly_positive(p2, "p2");

  const std::size_t m = p1.size();
  std::vector<double> w_num1(m), w_den1(m), w_num2(m), w_den2(m);
  for (std::size_t i = 0; i < m; ++i) {
    w_num1[i] = p2[i] / (p1[i] * p1[i]);
    w_den1[i] = 1.0 / p1[i];
    w_num2[i] = p1[i] / (p2[i] * p2[i]);
    w_den2[i] = 1.0 / p2[i];
  }
  const double ratio1 = weighted_quadratic(dir.v, w_num1) / weighted_quadratic(dir.v, w_den1);
  const double ratio2 = weighted_quadratic(dir.v, w_num2) / weighted_quadratic(dir.v, w_den2);
  if (ratio1 < eps2 / eps1 - kBoundaryTol) return CaseTag::FirstOnly;
  if (ratio2 < eps1 / eps2 - kBoundaryTol) return CaseTag::SecondOnly;
  return CaseTag::Both;
}

std::vector<double> alpha_single_constraint(int which, double eps,
                                            const Distribution& p_active,
                                            const PrincipalDirection& dir) {
  if (which != 1 && which != 2)
    throw ValidationError("alpha_single_constraint", "which must be 1 or 2");
  if (!(eps >= 0.0))
    throw ValidationError("alpha_single_constraint", "negative budget");
  require_strictly_positive(p_active, "p_active");
  const std::size_t m = p_active.size();
  std::vector<double> inv_p(m);
  for (std::size_t i = 0; i < m; ++i) inv_p[i] = 1.0 / p_active[i];
  const double quad = weighted_quadratic(dir.v, inv_p);
  const double scale = std::sqrt(2.0 * eps / quad);
  std::vector<double> alpha(m);
  for (std::size_t i = 0; i < m; ++i) alpha[i] = scale * dir.v[i] * inv_p[i];
  return alpha;
}

namespace {

// Residuals g_k(eta) = sum_i p_ki v_i^2 / d_i^2 - 8 eps_k / lambda^2,
// d_i = eta1 p1_i + eta2 p2_i. Strictly decreasing in each eta.
struct EtaSystem {
  const Distribution& p1;
  const Distribution& p2;
  const std::vector<double>& v;
  double rhs1, rhs2;

  std::pair<double, double> residuals(double eta1, double eta2) const {
    double g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = eta1 * p1[i] + eta2 * p2[i];
      const double s = v[i] * v[i] / (d * d);
      g1 += p1[i] * s;
      g2 += p2[i] * s;
    }
    return {g1 - rhs1, g2 - rhs2};
  }

  // Jacobian of residuals w.r.t. (eta1, eta2).
  void jacobian(double eta1, double eta2, double j[2][2]) const {
    j[0][0] = j[0][1] = j[1][0] = j[1][1] = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = eta1 * p1[i] + eta2 * p2[i];
      const double s = -2.0 * v[i] * v[i] / (d * d * d);
      j[0][0] += s * p1[i] * p1[i];
      j[0][1] += s * p1[i] * p2[i];
      j[1][0] += s * p2[i] * p1[i];
      j[1][1] += s * p2[i] * p2[i];
    }
  }
};

// Root of g(eta1) = 0 at fixed eta2 by bisection; g decreasing in eta1.
template <typename G>
double bisect_decreasing(G g, double lo, double hi, int iters) {
  while (g(lo) < 0.0 && lo > 1e-300) lo *= 0.5;
  while (g(hi) > 0.0 && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < iters; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

std::pair<double, double> solve_eta(const Distribution& p1, const Distribution& p2,
                                    double eps1, double eps2,
                                    const PrincipalDirection& dir, double tol) {
  if (dir.degenerate || dir.lambda <= 0.0)
    throw ValidationError("solve_eta", "degenerate direction");
  if (!(eps1 > 0.0) || !(eps2 > 0.0))
    throw ValidationError("solve_eta", "budgets must be positive");
  require_strictly_positive(p1, "p1");
  require_strictly_positive(p2, "p2");

  const double lam = dir.lambda;
  EtaSystem sys{p1, p2, dir.v, 8.0 * eps1 / (lam * lam), 8.0 * eps2 / (lam * lam)};

  // symmetric closed-form seed with p_bar, eps_bar
  double quad_bar = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i)
    quad_bar += dir.v[i] * dir.v[i] * 0.5 * (p1[i] + p2[i]);
  const double eps_bar = 0.5 * (eps1 + eps2);
  double eta1 = std::sqrt(lam * lam * quad_bar / (8.0 * eps_bar));
  double eta2 = eta1;

  double x1 = std::log(eta1), x2 = std::log(eta2);
  bool converged = false;
  // Iterate to the floating-point floor rather than stopping at tol: callers
  // check the residuals in absolute terms, and with quadratic convergence the
  // extra iterations are essentially free.
  double best_x1 = x1, best_x2 = x2;
  double best_score = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it < 100; ++it) {
    eta1 = std::exp(x1);
    eta2 = std::exp(x2);
    auto [g1, g2] = sys.residuals(eta1, eta2);
    const double score = std::max(std::abs(g1) / std::max(1.0, sys.rhs1),
                                  std::abs(g2) / std::max(1.0, sys.rhs2));
    if (score < best_score) {
      best_score = score;
      best_x1 = x1;
      best_x2 = x2;
      stalled = 0;
    } else if (++stalled >= 3 && best_score <= tol) {
      break;  // at the floor and already within tolerance
    }
    double j[2][2];
    sys.jacobian(eta1, eta2, j);
    // chain rule to log coordinates
    j[0][0] *= eta1; j[1][0] *= eta1;
    j[0][1] *= eta2; j[1][1] *= eta2;
    const double det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    if (det == 0.0 || !std::isfinite(det)) break;
    double dx1 = -(j[1][1] * g1 - j[0][1] * g2) / det;
    double dx2 = -(-j[1][0] * g1 + j[0][0] * g2) / det;
    const double step = std::max(std::abs(dx1), std::abs(dx2));
    if (step > 4.0) {  // damp long steps
      dx1 *= 4.0 / step;
      dx2 *= 4.0 / step;
    }
    x1 += dx1;
    x2 += dx2;
  }
  eta1 = std::exp(best_x1);
  eta2 = std::exp(best_x2);
  converged = best_score <= tol;

  if (!converged) {
    // nested bisection: inner solves g1(eta1; eta2) = 0, outer drives g2.
    auto inner = [&](double e2) {
      auto g = [&](double e1) { return sys.residuals(e1, e2).first; };
      return bisect_decreasing(g, 1e-6, 1e6, 200);
    };
    auto outer = [&](double e2) { return sys.residuals(inner(e2), e2).second; };
    eta2 = bisect_decreasing(outer, 1e-6, 1e6, 200);
    eta1 = inner(eta2);
    auto [g1, g2] = sys.residuals(eta1, eta2);
    if (std::abs(g1) > tol * std::max(1.0, sys.rhs1) ||
        std::abs(g2) > tol * std::max(1.0, sys.rhs2))
      throw ConvergenceError("solve_eta: residuals did not reach tolerance");
  }
  return {eta1, eta2};
}

std::vector<double> alpha_both_constraints(const PrincipalDirection& dir,
                                           const Distribution& p1,
                                           const Distribution& p2,
                                           double eta1, double eta2) {
  if (!(eta1 > 0.0) || !(eta2 > 0.0))
    throw ValidationError("alpha_both_constraints", "dual variables must be positive");
  std::vector<double> alpha(p1.size());
  for (std::size_t i = 0; i < p1.size(); ++i)
    alpha[i] = 0.5 * dir.lambda * dir.v[i] / (eta1 * p1[i] + eta2 * p2[i]);
  return alpha;
}

std::vector<double> orthogonal_direction(const Distribution& w0,
                                         const PrincipalDirection& dir) {
  require_strictly_positive(w0, "w0");
  const std::size_t m = w0.size();
  std::vector<double> s(m);
  for (std::size_t i = 0; i < m; ++i) s[i] = std::sqrt(w0[i]);

  std::vector<double> v(m);
  const double proj = dot(dir.v, s);
  double norm2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    v[i] = dir.v[i] - proj * s[i];
    norm2 += v[i] * v[i];
  }
  if (std::sqrt(norm2) < 1e-9) {
    // v* parallel to sqrt(w0): take the smallest-index complement basis
    // vector, e_0 minus its component along s.
    std::fill(v.begin(), v.end(), 0.0);
    v[0] = 1.0;
    const double c = s[0];
    norm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      v[i] -= c * s[i];
      norm2 += v[i] * v[i];
    }
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

AssembledMechanism assemble_mechanism(const Distribution& w0,
                                      const std::vector<double>& alpha,
                                      const std::vector<double>& v) {
  if (v.size() != w0.size())
    throw ValidationError("assemble_mechanism", "v length does not match w0");
  const std::size_t m = alpha.size();
  const std::size_t n = w0.size();
  AssembledMechanism out;
  out.entries.assign(m, std::vector<double>(n, 0.0));
  out.theta.assign(m, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double t = alpha[i] * v[j] * std::sqrt(w0[j]);
      out.theta[i][j] = t;
      const double e = w0[j] + t;
      out.entries[i][j] = e;
      if (e < 0.0 || e > 1.0) out.stochastic = false;
    }
  }
  return out;
}

namespace {

Mechanism clamp_to_mechanism(const Distribution& w0,
                             const std::vector<std::vector<double>>& theta, double t) {
  std::vector<std::vector<double>> rows(theta.size(),
                                        std::vector<double>(w0.size(), 0.0));
  for (std::size_t i = 0; i < theta.size(); ++i)
    for (std::size_t j = 0; j < w0.size(); ++j)
      rows[i][j] = std::clamp(w0[j] + t * theta[i][j], 0.0, 1.0);
  // rows sum to 1 up to rounding; clamp only trims 1e-17-scale spill
  return Mechanism(std::move(rows));
}

bool scaled_feasible(const Distribution& w0,
                     const std::vector<std::vector<double>>& theta, double t,
                     const Distribution& p1, const Distribution& p2,
                     double eps1, double eps2) {
  for (std::size_t i = 0; i < theta.size(); ++i)
    for (std::size_t j = 0; j < w0.size(); ++j) {
      const double e = w0[j] + t * theta[i][j];
      if (e < 0.0 || e > 1.0) return false;
    }
  Mechanism w = clamp_to_mechanism(w0, theta, t);
  return mutual_information(p1, w) <= eps1 + 1e-15 &&
         mutual_information(p2, w) <= eps2 + 1e-15;
}

}  // namespace

std::pair<Mechanism, double> repair_feasibility(const Distribution& w0,
                                                const std::vector<double>& alpha,
                                                const std::vector<double>& v,
                                                const Distribution& p1,
                                                const Distribution& p2,
                                                double eps1, double eps2) {
  AssembledMechanism cand = assemble_mechanism(w0, alpha, v);
  if (scaled_feasible(w0, cand.theta, 1.0, p1, p2, eps1, eps2))
    return {clamp_to_mechanism(w0, cand.theta, 1.0), 1.0};
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 32; ++it) {
    const double mid = 0.5 * (lo + hi);
    (scaled_feasible(w0, cand.theta, mid, p1, p2, eps1, eps2) ? lo : hi) = mid;
  }
  return {clamp_to_mechanism(w0, cand.theta, lo), lo};
}

EitSolution solve(const Distribution& p1, const Distribution& p2,
                  double eps1, double eps2, const std::optional<Distribution>& w0_in) {
  if (p1.size() != p2.size()) throw ValidationError("solve", "dimension mismatch");
  if (!(eps1 >= 0.0)) throw ValidationError("eps1", "must be nonnegative");
  if (!(eps2 >= 0.0)) throw ValidationError("eps2", "must be nonnegative");
  require_strictly_positive(p1, "p1");
  require_strictly_positive(p2, "p2");
  Distribution w0 = w0_in ? *w0_in : Distribution::uniform(p1.size());
  if (w0.size() != p1.size()) throw ValidationError("w0", "dimension mismatch");
  require_strictly_positive(w0, "w0");

  const std::size_t m = p1.size();
  PrincipalDirection dir = principal_direction(p1, p2);

  EitSolution sol{w0,
                  std::vector<double>(m, 0.0),
                  std::vector<double>(m, 0.0),
                  ActiveCase{},
                  perfect_privacy_mechanism(w0, m)};

  if (dir.degenerate || eps1 == 0.0 || eps2 == 0.0) {
    sol.degenerate = true;
    sol.v = orthogonal_direction(
        w0, dir.degenerate ? PrincipalDirection{1.0, std::vector<double>(m, 0.0), false}
                           : dir);
    return sol;
  }

  ActiveCase ac;
  ac.tag = select_active_case(p1, p2, eps1, eps2, dir);
  std::vector<double> alpha;
  switch (ac.tag) {
    case CaseTag::FirstOnly: {
      alpha = alpha_single_constraint(1, eps1, p1, dir);
      std::vector<double> inv_p(m);
      for (std::size_t i = 0; i < m; ++i) inv_p[i] = 1.0 / p1[i];
      ac.eta1 = std::sqrt(dir.lambda * dir.lambda *
                          weighted_quadratic(dir.v, inv_p) / (8.0 * eps1));
      break;
    }
    case CaseTag::SecondOnly: {
      alpha = alpha_single_constraint(2, eps2, p2, dir);
      std::vector<double> inv_p(m);
      for (std::size_t i = 0; i < m; ++i) inv_p[i] = 1.0 / p2[i];
      ac.eta2 = std::sqrt(dir.lambda * dir.lambda *
                          weighted_quadratic(dir.v, inv_p) / (8.0 * eps2));
      break;
    }
    case CaseTag::Both: {
      auto [e1, e2] = solve_eta(p1, p2, eps1, eps2, dir);
      ac.eta1 = e1;
      ac.eta2 = e2;
      alpha = alpha_both_constraints(dir, p1, p2, e1, e2);
      break;
    }
  }

  std::vector<double> v = orthogonal_direction(w0, dir);
  const double av = dot(alpha, dir.v);

  // try both sign representatives, keep the larger exact utility
  EitSolution best = sol;
  bool have = false;
  for (int sign : {+1, -1}) {
    std::vector<double> a(m);
    for (std::size_t i = 0; i < m; ++i) a[i] = sign * alpha[i];
    auto [mech, t] = repair_feasibility(w0, a, v, p1, p2, eps1, eps2);
    const double util = kl_divergence(pushforward(p1, mech), pushforward(p2, mech));
    if (!have || util > best.exact_utility + 1e-15) {
      best.alpha = std::move(a);
      best.mechanism = mech;
      best.repair_scale = t;
      best.exact_utility = util;
      have = true;
    }
  }
  best.v = v;
  best.active_case = ac;
  best.approx_utility = 0.5 * dir.lambda * av * av;
  best.exact_leak1 = mutual_information(p1, best.mechanism);
  best.exact_leak2 = mutual_information(p2, best.mechanism);
  return best;
}

}  // namespace privmech
