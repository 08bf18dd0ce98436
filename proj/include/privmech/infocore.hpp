#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

// Exact finite-alphabet information measures and their second-order
// (chi-squared) Euclidean approximations. All logarithms are natural;
// callers that want bits rescale by 1/ln 2.

namespace privmech {

inline constexpr double kSimplexTol = 1e-12;
inline constexpr double kRowSumZeroTol = 1e-10;
inline constexpr double kDefaultPerturbationRadius = 0.3;

enum class LogBase { Natural, Two };

// Validation failure on construction of a domain type or on a CLI input.
class ValidationError : public std::invalid_argument {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// An iterative routine failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Probability mass function on a finite alphabet of size >= 2.
// Entries are nonnegative and sum to 1 within kSimplexTol; a vector that
// fails this is rejected, never renormalized.
class Distribution {
 public:
  explicit Distribution(std::vector<double> probs, std::string field = "distribution");

  static Distribution uniform(std::size_t m);

  const std::vector<double>& probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }

  bool strictly_positive() const noexcept;

  bool operator==(const Distribution&) const = default;

 private:
  std::vector<double> probs_;
};

// Row-stochastic M x N channel, N <= M. Every entry in [0,1], every row
// sums to 1 within kSimplexTol.
class Mechanism {
 public:
  explicit Mechanism(std::vector<std::vector<double>> rows, std::string field = "mechanism");

  static Mechanism identity(std::size_t m);

  const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }
  std::size_t input_size() const noexcept { return rows_.size(); }
  std::size_t output_size() const noexcept { return rows_.front().size(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return rows_[i][j]; }

  bool operator==(const Mechanism&) const = default;

 private:
  std::vector<std::vector<double>> rows_;
};

// Additive perturbation of the rank-1 base mechanism with rows w0.
// Each row of deltas sums to 0 within kRowSumZeroTol and |delta_ij| is
// bounded by radius * w0_j.
class Perturbation {
 public:
  Perturbation(std::vector<std::vector<double>> deltas, Distribution base,
               double radius = kDefaultPerturbationRadius);

  const std::vector<std::vector<double>>& deltas() const noexcept { return deltas_; }
  const Distribution& base() const noexcept { return base_; }
  double radius() const noexcept { return radius_; }
  std::size_t input_size() const noexcept { return deltas_.size(); }
  std::size_t output_size() const noexcept { return deltas_.front().size(); }

 private:
  std::vector<std::vector<double>> deltas_;
  Distribution base_;
  double radius_;
};

// Shannon entropy, -sum p_i log p_i with 0 log 0 = 0.
double entropy(const Distribution& p, LogBase base = LogBase::Natural);

// Relative entropy D(p || q) in nats. Returns +infinity when some
// p_i > 0 has q_i = 0.
double kl_divergence(const Distribution& p, const Distribution& q);

// Output distribution p W.
Distribution pushforward(const Distribution& p, const Mechanism& w);

// I(p, W) = sum_ij p_i W_ij log(W_ij / (pW)_j), zero-mass terms dropped.
double mutual_information(const Distribution& p, const Mechanism& w,
                          LogBase base = LogBase::Natural);

// Second-order approximation of D(p1 W || p2 W) for W = W0 + Theta:
// (1/2) || (p1 - p2) Theta [w0^{-1/2}] ||^2.
double chi2_kl_approx(const Distribution& p1, const Distribution& p2,
                      const Perturbation& theta);

// Second-order approximation of I(p, W0 + Theta):
// (1/2) sum_i p_i || Theta_i [w0^{-1/2}] ||^2.
double chi2_mi_approx(const Distribution& p, const Perturbation& theta);

}  // namespace privmech
