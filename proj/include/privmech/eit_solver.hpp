#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "privmech/infocore.hpp"

// Closed-form solver for the high-privacy (Euclidean) approximation of the
// leakage-constrained error-exponent maximization. The pipeline goes from
// (p1, p2, eps1, eps2, w0) through the rank-1 reduction to an assembled,
// feasibility-repaired mechanism.

namespace privmech {

// Eigenpair of (p1-p2)^T (p1-p2): lambda = ||p1-p2||^2 and the unit
// vector along p1-p2. Degenerate when p1 == p2.
struct PrincipalDirection {
  double lambda = 0.0;
  std::vector<double> v;
  bool degenerate = false;
};

enum class CaseTag { FirstOnly, SecondOnly, Both };

std::string to_string(CaseTag tag);

// Which leakage constraints bind at the optimum, with the dual variables
// (zero for an inactive constraint).
struct ActiveCase {
  CaseTag tag = CaseTag::Both;
  double eta1 = 0.0;
  double eta2 = 0.0;
};

struct EitSolution {
  Distribution w0;
  std::vector<double> alpha;  // scale vector of the rank-1 perturbation
  std::vector<double> v;      // unit vector orthogonal to sqrt(w0)
  ActiveCase active_case;
  Mechanism mechanism;        // assembled W0 + t * Theta, stochastic
  double repair_scale = 1.0;  // t in (0,1]
  double exact_utility = 0.0;
  double exact_leak1 = 0.0;
  double exact_leak2 = 0.0;
  double approx_utility = 0.0;
  bool degenerate = false;    // p1 == p2 or zero budgets
};

// Rank-1 mechanism with every row equal to w0; leaks nothing for any input.
Mechanism perfect_privacy_mechanism(const std::vector<double>& w0, std::size_t m);
Mechanism perfect_privacy_mechanism(const Distribution& w0, std::size_t m);

PrincipalDirection principal_direction(const Distribution& p1, const Distribution& p2);

// Theorem-2 branch selection. Ratios equal to eps2/eps1 within 1e-12 are
// classified as Both (the closed forms agree continuously there).
CaseTag select_active_case(const Distribution& p1, const Distribution& p2,
                           double eps1, double eps2, const PrincipalDirection& dir);

// alpha for a single active constraint k with distribution p_active:
// sqrt(2 eps / (v*[p^-1]v*^T)) * v*[p^-1].
std::vector<double> alpha_single_constraint(int which, double eps,
                                            const Distribution& p_active,
                                            const PrincipalDirection& dir);

// Dual variables for the both-active case: roots of
//   sum_i p_ki v*_i^2 / (eta1 p1_i + eta2 p2_i)^2 = 8 eps_k / lambda^2.
// Damped Newton on (log eta1, log eta2) with analytic Jacobian, nested
// bisection fallback.
std::pair<double, double> solve_eta(const Distribution& p1, const Distribution& p2,
                                    double eps1, double eps2,
                                    const PrincipalDirection& dir, double tol = 1e-10);

// alpha_i = (lambda/2) v*_i / (eta1 p1_i + eta2 p2_i).
std::vector<double> alpha_both_constraints(const PrincipalDirection& dir,
                                           const Distribution& p1,
                                           const Distribution& p2,
                                           double eta1, double eta2);

// Unit vector orthogonal to sqrt(w0): normalized projection of v* onto the
// orthogonal complement, deterministic Householder basis vector fallback
// when the projection degenerates.
std::vector<double> orthogonal_direction(const Distribution& w0,
                                         const PrincipalDirection& dir);

struct AssembledMechanism {
  std::vector<std::vector<double>> entries;  // W0 + Theta, possibly outside [0,1]
  std::vector<std::vector<double>> theta;    // the perturbation alone
  bool stochastic = true;
};

// Theta = alpha^T v [sqrt(w0)]; rows of Theta sum to 0 by orthogonality.
// Entries of W0 + Theta may leave [0,1] for large budgets; flagged.
AssembledMechanism assemble_mechanism(const Distribution& w0,
                                      const std::vector<double>& alpha,
                                      const std::vector<double>& v);

// Largest t in (0,1] (bisection, 32 iterations) with W0 + t*Theta
// entry-wise in [0,1] and exact leakages within the budgets.
std::pair<Mechanism, double> repair_feasibility(const Distribution& w0,
                                                const std::vector<double>& alpha,
                                                const std::vector<double>& v,
                                                const Distribution& p1,
                                                const Distribution& p2,
                                                double eps1, double eps2);

// End-to-end pipeline; picks the sign of alpha whose repaired mechanism has
// the larger exact utility (ties toward +).
EitSolution solve(const Distribution& p1, const Distribution& p2,
                  double eps1, double eps2,
                  const std::optional<Distribution>& w0 = std::nullopt);

}  // namespace privmech
