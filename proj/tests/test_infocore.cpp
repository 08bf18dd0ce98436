#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "privmech/eit_solver.hpp"
#include "privmech/infocore.hpp"
#include "test_util.hpp"

using namespace privmech;
using testutil::random_distribution;
using testutil::random_mechanism;
using testutil::random_theta;

namespace {

// independent direct-summation oracles, kept free of library calls
double entropy_oracle(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p)
    if (x > 0.0) h -= x * std::log(x);
  return h;
}

double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

}  // namespace

TEST_CASE("distribution validation") {
  CHECK_THROWS_AS(Distribution({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(Distribution({1.1, -0.1}), ValidationError);
  CHECK_THROWS_AS(Distribution({1.0}), ValidationError);
  CHECK_NOTHROW(Distribution({0.3, 0.7}));
  CHECK(Distribution::uniform(4)[2] == doctest::Approx(0.25));
}

TEST_CASE("mechanism validation") {
  CHECK_NOTHROW(Mechanism({{0.9, 0.1}, {0.2, 0.8}}));
  CHECK_THROWS_AS(Mechanism({{0.9, 0.2}, {0.2, 0.8}}), ValidationError);
  // N > M rejected
  CHECK_THROWS_AS(Mechanism({{0.2, 0.3, 0.5}}), ValidationError);
  // N < M allowed
  CHECK_NOTHROW(Mechanism({{1.0}, {1.0}, {1.0}}));
}

TEST_CASE("perturbation validation") {
  Distribution w0({0.5, 0.5});
  CHECK_NOTHROW(Perturbation({{0.1, -0.1}, {-0.1, 0.1}}, w0));
  // row sum not zero
  CHECK_THROWS_AS(Perturbation({{0.1, 0.1}, {-0.1, 0.1}}, w0), ValidationError);
  // exceeds radius * w0
  CHECK_THROWS_AS(Perturbation({{0.2, -0.2}, {0.0, 0.0}}, w0, 0.3), ValidationError);
}

TEST_CASE("entropy") {
  CHECK(entropy(Distribution({0.5, 0.5})) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(entropy(Distribution({1.0, 0.0})) == 0.0);
  const double expected = entropy_oracle({0.95, 0.05});
  CHECK(expected == doctest::Approx(0.19851524334587).epsilon(1e-10));
  CHECK(entropy(Distribution({0.95, 0.05})) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(entropy(Distribution({0.5, 0.5}), LogBase::Two) == doctest::Approx(1.0));
}

TEST_CASE("kl divergence") {
  CHECK(kl_divergence(Distribution({0.3, 0.7}), Distribution({0.3, 0.7})) == 0.0);
  CHECK(kl_divergence(Distribution({1.0, 0.0}), Distribution({0.5, 0.5})) ==
        doctest::Approx(std::log(2.0)));
  CHECK(kl_divergence(Distribution({0.5, 0.5}), Distribution({1.0, 0.0})) ==
        std::numeric_limits<double>::infinity());
  const double expected = kl_oracle({0.95, 0.05}, {0.55, 0.45});
  CHECK(expected == doctest::Approx(0.40937).epsilon(1e-4));
  CHECK(kl_divergence(Distribution({0.95, 0.05}), Distribution({0.55, 0.45})) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(kl_divergence(Distribution({0.5, 0.5}), Distribution::uniform(3)),
                  ValidationError);
}

TEST_CASE("pushforward") {
  Distribution p({0.95, 0.05});
  CHECK(pushforward(p, Mechanism::identity(2)) == p);
  Mechanism w({{0.9, 0.1}, {0.2, 0.8}});
  Distribution out = pushforward(p, w);
  CHECK(out[0] == doctest::Approx(0.865).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.135).epsilon(1e-12));
  // rank-1 mechanism maps everything to w0
  Mechanism w0 = perfect_privacy_mechanism(Distribution({0.3, 0.7}), 2);
  CHECK(pushforward(p, w0)[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("mutual information") {
  Distribution p({0.3, 0.7});
  CHECK(mutual_information(p, Mechanism::identity(2)) ==
        doctest::Approx(entropy(p)).epsilon(1e-12));
  Mechanism rank1 = perfect_privacy_mechanism(Distribution({0.25, 0.75}), 2);
  CHECK(mutual_information(p, rank1) <= 1e-14);
  // BSC(0.1) with uniform input: ln 2 - H(0.9, 0.1)
  Mechanism bsc({{0.9, 0.1}, {0.1, 0.9}});
  const double expected = std::log(2.0) - entropy_oracle({0.9, 0.1});
  CHECK(mutual_information(Distribution({0.5, 0.5}), bsc) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("chi2 kl approximation") {
  Distribution w0({0.5, 0.5});
  Distribution p1({0.05, 0.95}), p2({0.95, 0.05});
  Perturbation zero({{0.0, 0.0}, {0.0, 0.0}}, w0);
  CHECK(chi2_kl_approx(p1, p2, zero) == 0.0);

  Perturbation theta({{-0.0707, 0.0707}, {0.0707, -0.0707}}, w0);
  CHECK(chi2_kl_approx(p1, p1, theta) == 0.0);

  // direct formula evaluation: diff_j = sum_i (p1_i - p2_i) theta_ij
  const double diff = (0.05 - 0.95) * (-0.0707) + (0.95 - 0.05) * 0.0707;
  const double expected = 0.5 * (diff * diff / 0.5 + diff * diff / 0.5);
  CHECK(chi2_kl_approx(p1, p2, theta) == doctest::Approx(expected).epsilon(1e-12));

  // matches exact KL of the pushforwards to second order
  Mechanism w({{0.5 - 0.0707, 0.5 + 0.0707}, {0.5 + 0.0707, 0.5 - 0.0707}});
  const double exact = kl_divergence(pushforward(p1, w), pushforward(p2, w));
  CHECK(chi2_kl_approx(p1, p2, theta) == doctest::Approx(exact).epsilon(0.2));
}

TEST_CASE("chi2 mi approximation") {
  Distribution w0({0.5, 0.5});
  Perturbation zero({{0.0, 0.0}, {0.0, 0.0}}, w0);
  CHECK(chi2_mi_approx(Distribution({0.4, 0.6}), zero) == 0.0);

  // rows (+d, -d) and (-d, +d) over uniform binary w0: value 2 d^2 for any p
  const double d = 0.05;
  Perturbation theta({{d, -d}, {-d, d}}, w0);
  for (auto p : {Distribution({0.5, 0.5}), Distribution({0.1, 0.9})})
    CHECK(chi2_mi_approx(p, theta) == doctest::Approx(2 * d * d).epsilon(1e-12));
}

TEST_CASE("nonnegativity and bounds over random inputs") {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 200; ++it) {
    const std::size_t m = 2 + it % 5;
    Distribution p1 = random_distribution(rng, m);
    Distribution p2 = random_distribution(rng, m, 1e-3);
    Mechanism w = random_mechanism(rng, m, m);
    CHECK(kl_divergence(p1, p2) >= 0.0);
    CHECK(mutual_information(p1, w) >= 0.0);
    CHECK(mutual_information(p1, w) <=
          std::min(entropy(p1), entropy(pushforward(p1, w))) + 1e-12);
    // data processing
    CHECK(kl_divergence(pushforward(p1, w), pushforward(p2, w)) <=
          kl_divergence(p1, p2) + 1e-12);
    // simplex preserved
    Distribution out = pushforward(p1, w);
    double sum = 0.0;
    for (double x : out.probs()) {
      CHECK(x >= 0.0);
      sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("approximation error falls at least cubically faster than linear") {
  // Seed avoids instances sitting at the crossover between the quadratic and
  // cubic error regimes of the MI expansion, where partial cancellation can
  // transiently push the per-halving ratio below 3 at these finite radii.
  std::mt19937_64 rng(56);
  int checked = 0;
  for (int it = 0; it < 60 && checked < 30; ++it) {
    const std::size_t m = 2 + it % 3;
    Distribution p1 = random_distribution(rng, m, 0.05);
    Distribution p2 = random_distribution(rng, m, 0.05);
    Distribution w0 = random_distribution(rng, m, 0.2);
    auto theta0 = random_theta(rng, w0, m, 1.0);

    auto errors_at = [&](double rho) {
      std::vector<std::vector<double>> th = theta0;
      std::vector<std::vector<double>> rows(m, std::vector<double>(m));
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          th[i][j] *= rho;
          rows[i][j] = w0[j] + th[i][j];
        }
      Perturbation pert(th, w0, 0.9);
      Mechanism w(rows);
      const double kl_exact = kl_divergence(pushforward(p1, w), pushforward(p2, w));
      const double mi_exact = mutual_information(p1, w);
      return std::pair{std::abs(kl_exact - chi2_kl_approx(p1, p2, pert)),
                       std::abs(mi_exact - chi2_mi_approx(p1, pert))};
    };

    auto [ekl1, emi1] = errors_at(0.2);
    auto [ekl2, emi2] = errors_at(0.1);
    auto [ekl3, emi3] = errors_at(0.05);
    if (ekl3 < 1e-13 || emi3 < 1e-13) continue;  // below float noise
    CHECK(ekl1 / ekl2 >= 3.0);
    CHECK(ekl2 / ekl3 >= 3.0);
    CHECK(emi1 / emi2 >= 3.0);
    CHECK(emi2 / emi3 >= 3.0);
    ++checked;
  }
  CHECK(checked >= 20);
}
