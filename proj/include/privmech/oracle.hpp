#pragma once

#include <cstddef>

#include "privmech/infocore.hpp"

// Brute-force grid search over row-stochastic matrices for the original
// non-convex tradeoff problem; ground truth for validating the closed-form
// solver on small alphabets.

namespace privmech {

struct GridSpec {
  double step = 1e-3;            // 1/step must be an integer
  double feasibility_tol = 1e-12;

  void validate() const;
};

struct OracleResult {
  Mechanism mechanism;
  double utility = 0.0;
};

// Both exact leakages within budget + tol.
bool is_feasible(const Mechanism& w, const Distribution& p1, const Distribution& p2,
                 double eps1, double eps2, double tol = 1e-12);

// Exhaustive search over W = [[a,1-a],[b,1-b]] with a, b on the grid.
// Deterministic: ties broken toward smallest (a, b). Parallel over grid
// chunks; PRIVMECH_THREADS caps the worker count (0 or unset = auto).
OracleResult oracle_solve_binary(const Distribution& p1, const Distribution& p2,
                                 double eps1, double eps2, const GridSpec& grid);

// Coarse-grid search for m <= 3 (step >= 0.02 enforced); smoke-test scale.
OracleResult oracle_solve_general(const Distribution& p1, const Distribution& p2,
                                  double eps1, double eps2, const GridSpec& grid,
                                  std::size_t m);

}  // namespace privmech
