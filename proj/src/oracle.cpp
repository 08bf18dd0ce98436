#include "privmech/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <thread>
#include <vector>

namespace privmech {

namespace {

std::size_t worker_count() {
  if (const char* env = std::getenv("PRIVMECH_THREADS")) {
    const long n = std::atol(env);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

inline double xlog(double x) { return x > 0.0 ? std::log(x) : 0.0; }

// I(p, W) for a 2x2 channel with rows (a, 1-a), (b, 1-b), p = (p, 1-p).
inline double mi2(double p, double a, double b) {
  const double q = p * a + (1.0 - p) * b;
  double mi = 0.0;
  if (a > 0.0) mi += p * a * std::log(a / q);
  if (a < 1.0) mi += p * (1.0 - a) * std::log((1.0 - a) / (1.0 - q));
  if (b > 0.0) mi += (1.0 - p) * b * std::log(b / q);
  if (b < 1.0) mi += (1.0 - p) * (1.0 - b) * std::log((1.0 - b) / (1.0 - q));
  return std::max(mi, 0.0);
}

inline double kl2(double q1, double q2) {
  double d = 0.0;
  if (q1 > 0.0) {
    if (q2 <= 0.0) return std::numeric_limits<double>::infinity();
    d += q1 * std::log(q1 / q2);
  }
  if (q1 < 1.0) {
    if (q2 >= 1.0) return std::numeric_limits<double>::infinity();
    d += (1.0 - q1) * std::log((1.0 - q1) / (1.0 - q2));
  }
  return std::max(d, 0.0);
}

struct BinaryBest {
  double utility = -1.0;
  std::int64_t ia = -1, ib = -1;

  // prefer larger utility, then smaller (a, b)
  bool better_than(const BinaryBest& o) const {
    if (utility != o.utility) return utility > o.utility;
    if (ia != o.ia) return ia < o.ia;
    return ib < o.ib;
  }
};

}  // namespace

void GridSpec::validate() const {
  if (!(step > 0.0) || step > 0.1)
    throw ValidationError("grid.step", "must be in (0, 0.1]");
  const double inv = 1.0 / step;
  if (std::abs(inv - std::round(inv)) > 1e-9)
    throw ValidationError("grid.step", "1/step must be an integer");
  if (!(feasibility_tol >= 0.0))
    throw ValidationError("grid.feasibility_tol", "must be nonnegative");
}

bool is_feasible(const Mechanism& w, const Distribution& p1, const Distribution& p2,
                 double eps1, double eps2, double tol) {
  return mutual_information(p1, w) <= eps1 + tol &&
         mutual_information(p2, w) <= eps2 + tol;
}

OracleResult oracle_solve_binary(const Distribution& p1, const Distribution& p2,
                                 double eps1, double eps2, const GridSpec& grid) {
  grid.validate();
  if (p1.size() != 2 || p2.size() != 2)
    throw ValidationError("oracle_solve_binary", "requires binary alphabets");
  if (!(eps1 >= 0.0) || !(eps2 >= 0.0))
    throw ValidationError("oracle_solve_binary", "budgets must be nonnegative");

  const std::int64_t n = static_cast<std::int64_t>(std::llround(1.0 / grid.step));
  const double pa = p1[0];
  const double pb = p2[0];
  const double tol = grid.feasibility_tol;

  const std::size_t nthreads = std::min<std::size_t>(worker_count(),
                                                     static_cast<std::size_t>(n) + 1);
  std::vector<BinaryBest> partial(nthreads);
  auto scan = [&](std::size_t tid) {
    BinaryBest best;
    for (std::int64_t ia = static_cast<std::int64_t>(tid); ia <= n;
         ia += static_cast<std::int64_t>(nthreads)) {
      const double a = static_cast<double>(ia) * grid.step;
      for (std::int64_t ib = 0; ib <= n; ++ib) {
        const double b = static_cast<double>(ib) * grid.step;
        if (mi2(pa, a, b) > eps1 + tol) continue;
        if (mi2(pb, a, b) > eps2 + tol) continue;
        const double u = kl2(pa * a + (1.0 - pa) * b, pb * a + (1.0 - pb) * b);
        BinaryBest cand{u, ia, ib};
        if (cand.better_than(best)) best = cand;
      }
    }
    partial[tid] = best;
  };

  if (nthreads == 1) {
    scan(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(scan, t);
    for (auto& th : pool) th.join();
  }

  BinaryBest best;
  for (const auto& b : partial)
    if (b.ia >= 0 && b.better_than(best)) best = b;
  if (best.ia < 0)
    throw ConvergenceError("oracle_solve_binary: no feasible grid point");

  const double a = static_cast<double>(best.ia) * grid.step;
  const double b = static_cast<double>(best.ib) * grid.step;
  return {Mechanism({{a, 1.0 - a}, {b, 1.0 - b}}), best.utility};
}

OracleResult oracle_solve_general(const Distribution& p1, const Distribution& p2,
                                  double eps1, double eps2, const GridSpec& grid,
                                  std::size_t m) {
  grid.validate();
  if (m > 3) throw ValidationError("oracle_solve_general", "m must be at most 3");
  if (grid.step < 0.02)
    throw ValidationError("grid.step", "general oracle requires step >= 0.02");
  if (p1.size() != m || p2.size() != m)
    throw ValidationError("oracle_solve_general", "dimension mismatch");

  // all simplex rows on the grid
  const std::int64_t n = static_cast<std::int64_t>(std::llround(1.0 / grid.step));
  std::vector<std::vector<double>> rows;
  if (m == 2) {
    for (std::int64_t i = 0; i <= n; ++i)
      rows.push_back({static_cast<double>(i) * grid.step,
                      static_cast<double>(n - i) * grid.step});
  } else {
    for (std::int64_t i = 0; i <= n; ++i)
      for (std::int64_t j = 0; i + j <= n; ++j)
        rows.push_back({static_cast<double>(i) * grid.step,
                        static_cast<double>(j) * grid.step,
                        static_cast<double>(n - i - j) * grid.step});
  }

  double best_u = -1.0;
  std::vector<std::size_t> best_idx;
  std::vector<std::size_t> idx(m, 0);
  const std::size_t r = rows.size();
  while (true) {
    std::vector<std::vector<double>> w_rows(m);
    for (std::size_t i = 0; i < m; ++i) w_rows[i] = rows[idx[i]];
    Mechanism w(w_rows);
    if (is_feasible(w, p1, p2, eps1, eps2, grid.feasibility_tol)) {
      const double u = kl_divergence(pushforward(p1, w), pushforward(p2, w));
      if (u > best_u || (u == best_u && idx < best_idx)) {
        best_u = u;
        best_idx = idx;
      }
    }
    // odometer increment
    bool done = false;
    std::size_t pos = m;
    while (true) {
      if (pos == 0) {
        done = true;
        break;
      }
      --pos;
      if (++idx[pos] < r) break;
      idx[pos] = 0;
    }
    if (done) break;
  }
  if (best_u < 0.0)
    throw ConvergenceError("oracle_solve_general: no feasible grid point");
  std::vector<std::vector<double>> w_rows(m);
  for (std::size_t i = 0; i < m; ++i) w_rows[i] = rows[best_idx[i]];
  return {Mechanism(std::move(w_rows)), best_u};
}

}  // namespace privmech
