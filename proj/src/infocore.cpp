#include "privmech/infocore.hpp"

#include <cmath>
#include <limits>

namespace privmech {

namespace {

constexpr double kLn2 = 0.6931471805599453;

double rescale(double nats, LogBase base) {
  return base == LogBase::Two ? nats / kLn2 : nats;
}

void check_simplex(const std::vector<double>& v, const std::string& field) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= 0.0)) throw ValidationError(field, "negative or NaN entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kSimplexTol)
    throw ValidationError(field, "entries sum to " + std::to_string(sum) + ", expected 1");
}

}  // namespace

Distribution::Distribution(std::vector<double> probs, std::string field)
    : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw ValidationError(field, "alphabet size must be at least 2");
  check_simplex(probs_, field);
}

Distribution Distribution::uniform(std::size_t m) {
  if (m < 2) throw ValidationError("distribution", "alphabet size must be at least 2");
  return Distribution(std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

bool Distribution::strictly_positive() const noexcept {
  for (double x : probs_)
    if (x <= 0.0) return false;
  return true;
}

Mechanism::Mechanism(std::vector<std::vector<double>> rows, std::string field)
    : rows_(std::move(rows)) {
  if (rows_.empty()) throw ValidationError(field, "no rows");
  const std::size_t n = rows_.front().size();
  if (n == 0) throw ValidationError(field, "empty rows");
  if (n > rows_.size())
    throw ValidationError(field, "output alphabet larger than input alphabet");
  for (const auto& row : rows_) {
    if (row.size() != n) throw ValidationError(field, "ragged rows");
    double sum = 0.0;
    for (double x : row) {
      if (!(x >= 0.0) || x > 1.0) throw ValidationError(field, "entry outside [0,1]");
      sum += x;
    }
    if (std::abs(sum - 1.0) > kSimplexTol)
      throw ValidationError(field, "row sums to " + std::to_string(sum) + ", expected 1");
  }
}

Mechanism Mechanism::identity(std::size_t m) {
  std::vector<std::vector<double>> rows(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) rows[i][i] = 1.0;
  return Mechanism(std::move(rows));
}

Perturbation::Perturbation(std::vector<std::vector<double>> deltas, Distribution base,
                           double radius)
    : deltas_(std::move(deltas)), base_(std::move(base)), radius_(radius) {
  if (!(radius_ >= 0.0) || radius_ >= 1.0)
    throw ValidationError("perturbation", "radius must be in [0,1)");
  if (deltas_.empty()) throw ValidationError("perturbation", "no rows");
  const std::size_t n = base_.size();
  for (const auto& row : deltas_) {
    if (row.size() != n)
      throw ValidationError("perturbation", "row length does not match base");
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(row[j]) > radius_ * base_[j] + 1e-15)
        throw ValidationError("perturbation", "entry exceeds radius * w0");
      sum += row[j];
    }
    if (std::abs(sum) > kRowSumZeroTol)
      throw ValidationError("perturbation", "row sum " + std::to_string(sum) + " not 0");
  }
}

double entropy(const Distribution& p, LogBase base) {
  double h = 0.0;
  for (double x : p.probs())
    if (x > 0.0) h -= x * std::log(x);
  return rescale(std::max(h, 0.0), base);
}

double kl_divergence(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size())
    throw ValidationError("kl_divergence", "dimension mismatch");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) {
      if (q[i] <= 0.0) return std::numeric_limits<double>::infinity();
      d += p[i] * std::log(p[i] / q[i]);
    }
  }
  return std::max(d, 0.0);
}

Distribution pushforward(const Distribution& p, const Mechanism& w) {
  if (p.size() != w.input_size())
    throw ValidationError("pushforward", "dimension mismatch");
  std::vector<double> out(w.output_size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += p[i] * w(i, j);
  for (double& x : out)
    if (x < 0.0) x = 0.0;  // accumulated rounding
  return Distribution(std::move(out), "pushforward");
}

double mutual_information(const Distribution& p, const Mechanism& w, LogBase base) {
  if (p.size() != w.input_size())
    throw ValidationError("mutual_information", "dimension mismatch");
  std::vector<double> q(w.output_size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += p[i] * w(i, j);
  double mi = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    for (std::size_t j = 0; j < q.size(); ++j) {
      const double wij = w(i, j);
      if (wij > 0.0) mi += p[i] * wij * std::log(wij / q[j]);
    }
  }
  return rescale(std::max(mi, 0.0), base);
}

double chi2_kl_approx(const Distribution& p1, const Distribution& p2,
                      const Perturbation& theta) {
  if (p1.size() != p2.size() || p1.size() != theta.input_size())
    throw ValidationError("chi2_kl_approx", "dimension mismatch");
  const Distribution& w0 = theta.base();
  double acc = 0.0;
  for (std::size_t j = 0; j < theta.output_size(); ++j) {
    if (w0[j] <= 0.0) throw ValidationError("chi2_kl_approx", "zero entry in w0");
    double diff = 0.0;
    for (std::size_t i = 0; i < theta.input_size(); ++i)
      diff += (p1[i] - p2[i]) * theta.deltas()[i][j];
    acc += diff * diff / w0[j];
  }
  return 0.5 * acc;
}

double chi2_mi_approx(const Distribution& p, const Perturbation& theta) {
  if (p.size() != theta.input_size())
    throw ValidationError("chi2_mi_approx", "dimension mismatch");
  const Distribution& w0 = theta.base();
  double acc = 0.0;
  for (std::size_t i = 0; i < theta.input_size(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < theta.output_size(); ++j) {
      if (w0[j] <= 0.0) throw ValidationError("chi2_mi_approx", "zero entry in w0");
      row += theta.deltas()[i][j] * theta.deltas()[i][j] / w0[j];
    }
    acc += p[i] * row;
  }
  return 0.5 * acc;
}

}  // namespace privmech
