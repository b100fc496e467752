#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <vector>

#include "galam/errors.hpp"
#include "galam/model.hpp"

using namespace galam;
using Rooms = std::map<int, std::int64_t>;
using namespace galam::model;

namespace {

// Heads distribution of `flips` coin flips by dynamic programming; shares no
// code with the closed-form binomial sums in the library.
double coin_win(int flips, double p) {
  std::vector<double> dist{1.0};
  for (int f = 0; f < flips; ++f) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      next[k] += dist[k] * (1.0 - p);
      next[k + 1] += dist[k] * p;
    }
    dist = std::move(next);
  }
  double win = 0.0;
  for (int k = flips / 2 + 1; k <= flips; ++k) win += dist[static_cast<std::size_t>(k)];
  return win;
}

double oracle_alpha(int size) {
  double lo = 0.5, hi = 1.0 - 1e-9;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (coin_win(size, mid) - mid < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// P(a fixed seat of a room of `size` ends positive) in the inflexible model by
// enumerating all 4^size seat categories.
double inflexible_room_oracle(int size, double p, double a, double b) {
  const double probs[4] = {a, p - a, b, 1.0 - p - b};  // +infl, +float, -infl, -float
  std::vector<int> cat(static_cast<std::size_t>(size), 0);
  double total = 0.0;
  for (long code = 0; code < (1L << (2 * size)); ++code) {
    double w = 1.0;
    int positives = 0;
    for (int s = 0; s < size; ++s) {
      cat[static_cast<std::size_t>(s)] = static_cast<int>((code >> (2 * s)) & 3);
      w *= probs[cat[static_cast<std::size_t>(s)]];
      if (cat[static_cast<std::size_t>(s)] < 2) ++positives;
    }
    if (w == 0.0) continue;
    const bool room_positive = positives > size / 2;
    const int c = cat[0];
    const bool seat_positive = c == 0 || (c == 1 && room_positive) || (c == 3 && room_positive);
    if (seat_positive) total += w;
  }
  return total;
}

RoomConfig random_config(std::mt19937_64& rng, int min_size, int max_size) {
  std::uniform_int_distribution<int> size_dist(min_size, max_size);
  std::uniform_int_distribution<int> count_dist(1, 40);
  std::uniform_int_distribution<int> kinds(1, 4);
  std::map<int, std::int64_t> rooms;
  const int k = kinds(rng);
  for (int i = 0; i < k; ++i) rooms[size_dist(rng)] += count_dist(rng);
  return RoomConfig(rooms);
}

}  // namespace

TEST_CASE("f_single values") {
  CHECK(f_single(3, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(f_single(4, 0.5) == doctest::Approx(5.0 / 16.0).epsilon(1e-15));
  CHECK(f_single(2, 0.25) == doctest::Approx(0.0625).epsilon(1e-15));
  for (int i = 2; i <= 20; ++i) {
    CHECK(f_single(i, 0.0) == 0.0);
    CHECK(f_single(i, 1.0) == 1.0);
    for (double p : {0.1, 0.37, 0.5, 0.81}) CHECK(f_single(i, p) == doctest::Approx(coin_win(i, p)).epsilon(1e-13));
  }
}

TEST_CASE("f_single rejects bad input") {
  CHECK_THROWS_AS(f_single(1, 0.5), DomainError);
  CHECK_THROWS_AS(f_single(3, -0.1), DomainError);
  CHECK_THROWS_AS(f_single(3, 1.1), DomainError);
  CHECK_THROWS_AS(f_single(3, std::nan("")), DomainError);
}

TEST_CASE("expected_positive and expected_negative values") {
  CHECK(expected_positive(RoomConfig::uniform(3, 10), 0.5) == doctest::Approx(0.5));
  // a_3 = a_4 = 1/2: 0.5 * 0.5 + 0.5 * 5/16
  CHECK(expected_positive(RoomConfig(Rooms{{3, 4}, {4, 3}}), 0.5) == doctest::Approx(0.40625).epsilon(1e-15));
  CHECK(expected_positive(RoomConfig::uniform(2, 7), 0.3) == doctest::Approx(0.09).epsilon(1e-14));

  CHECK(expected_negative(RoomConfig::uniform(2, 5), 0.1) == doctest::Approx(0.19).epsilon(1e-14));
  CHECK(expected_negative(RoomConfig(Rooms{{3, 2}, {4, 1}, {7, 3}}), 0.0) == 0.0);
  CHECK(expected_negative(RoomConfig::uniform(3, 5), 0.5) == doctest::Approx(0.5));
}

TEST_CASE("negative/positive identity, monotonicity and endpoints on random configs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const RoomConfig config = random_config(rng, 2, 16);
    CHECK(expected_positive(config, 0.0) == 0.0);
    CHECK(expected_positive(config, 1.0) == 1.0);
    CHECK(h(config, 0.0) == 0.0);
    CHECK(h(config, 1.0) == 0.0);
    double prev = 0.0;
    for (int k = 0; k <= 1000; ++k) {
      const double p = k / 1000.0;
      const double f = expected_positive(config, p);
      CHECK(std::fabs(expected_negative(config, p) - (1.0 - expected_positive(config, 1.0 - p))) <= 1e-12);
      CHECK(f >= prev - 1e-15);  // rounding at the top end
      CHECK(f_prime(config, p) >= 0.0);
      prev = f;
    }
  }
}

TEST_CASE("h values") {
  CHECK(h(RoomConfig::uniform(4, 3), 0.5) == doctest::Approx(-0.1875).epsilon(1e-15));
  CHECK(h(RoomConfig::uniform(3, 3), 0.5) == 0.0);
  CHECK(h(RoomConfig::uniform(6, 3), 0.5) == doctest::Approx(-0.15625).epsilon(1e-15));
  // -C(i, i/2) / 2^(i+1) for every even size
  for (int i = 4; i <= 30; i += 2) {
    CHECK(h(RoomConfig::uniform(i, 1), 0.5) == doctest::Approx(-binomial(i, i / 2) / std::ldexp(1.0, i + 1)));
  }
}

TEST_CASE("f_prime_single values and finite differences") {
  CHECK(f_prime_single(3, 0.5) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(f_prime_single(2, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  for (int i = 4; i <= 16; ++i) CHECK(f_prime_single(i, 0.0) == 0.0);

  const double step = 1e-6;
  for (int i = 2; i <= 16; ++i) {
    for (int k = 1; k <= 99; ++k) {
      const double p = k / 100.0;
      const double fd = (f_single(i, p + step) - f_single(i, p - step)) / (2.0 * step);
      const double exact = f_prime_single(i, p);
      CHECK(std::fabs(fd - exact) <= 1e-6 * std::max(std::fabs(exact), 1e-3));
    }
  }
}

TEST_CASE("fixed points of uniform configurations") {
  const auto r3 = find_fixed_points(RoomConfig::uniform(3, 100));
  REQUIRE(r3.unique);
  CHECK(r3.roots[0] == doctest::Approx(0.5).epsilon(1e-12));

  const auto r4 = find_fixed_points(RoomConfig::uniform(4, 100));
  REQUIRE(r4.unique);
  CHECK(std::fabs(r4.roots[0] - (1.0 + std::sqrt(13.0)) / 6.0) <= 1e-10);
  CHECK(r4.brackets[0].first <= r4.roots[0]);
  CHECK(r4.roots[0] <= r4.brackets[0].second);

  // mpmath bisection at 50 digits (tests/oracles/derive_goldens.py)
  const auto r6 = find_fixed_points(RoomConfig::uniform(6, 100));
  REQUIRE(r6.unique);
  CHECK(std::fabs(r6.roots[0] - 0.65287106587582720682) <= 1e-10);
  CHECK(std::fabs(r6.roots[0] - oracle_alpha(6)) <= 1e-10);

  CHECK(find_fixed_points(RoomConfig::uniform(2, 50)).roots.empty());
}

TEST_CASE("fixed point preconditions") {
  const auto c = RoomConfig::uniform(3, 2);
  CHECK_THROWS_AS(find_fixed_points(c, 1e-2), std::invalid_argument);
  CHECK_THROWS_AS(find_fixed_points(c, 1e-4, 1e-17), std::invalid_argument);
}

TEST_CASE("threshold") {
  CHECK(threshold(RoomConfig::uniform(5, 4)) == doctest::Approx(0.5).epsilon(1e-12));

  try {
    threshold(RoomConfig::uniform(2, 4));
    FAIL("expected NoUniqueThreshold");
  } catch (const NoUniqueThreshold& e) {
    CHECK(e.report().roots.empty());
    CHECK(std::string(e.what()).find("no root") != std::string::npos);
  }

  // a_3 = a_4 = 1/2; bisection oracle gives exactly 2/3
  const double mixed = threshold(RoomConfig(Rooms{{3, 4}, {4, 3}}));
  CHECK(mixed > 0.5);
  CHECK(mixed < 0.767593);
  CHECK(std::fabs(mixed - 2.0 / 3.0) <= 1e-10);

  // a_2 = a_3 = 1/2 gives h = -p (1 - p)^2: no interior root, tangent at 1
  CHECK_THROWS_AS(threshold(RoomConfig(Rooms{{2, 3}, {3, 2}})), NoUniqueThreshold);
}

TEST_CASE("odd sizes are ordered around 1/2") {
  for (int i = 3; i <= 13; i += 2) {
    for (int k = 51; k <= 99; ++k) CHECK(f_single(i, k / 100.0) < f_single(i + 2, k / 100.0));
    for (int k = 1; k <= 49; ++k) CHECK(f_single(i, k / 100.0) > f_single(i + 2, k / 100.0));
  }
}

TEST_CASE("even-size thresholds decrease towards 1/2") {
  double prev = 1.0;
  for (int i = 4; i <= 16; i += 2) {
    const double alpha = threshold(RoomConfig::uniform(i, 1));
    CHECK(alpha > 0.5);
    CHECK(alpha < prev);
    CHECK(std::fabs(alpha - oracle_alpha(i)) <= 1e-10);
    prev = alpha;
  }
  for (int i = 3; i <= 15; i += 2) CHECK(std::fabs(threshold(RoomConfig::uniform(i, 1)) - 0.5) <= 1e-12);
}

TEST_CASE("unique threshold and sign pattern for mixed sizes 3..16") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 60; ++trial) {
    const RoomConfig config = random_config(rng, 3, 16);
    const auto report = find_fixed_points(config, 1e-3);
    INFO(config.digest());
    REQUIRE(report.unique);
    CHECK(sign_pattern_holds(config, report.roots[0], 1e-3));
    CHECK(report.roots[0] >= 0.5 - 1e-12);
  }
}

TEST_CASE("tie-break expectation") {
  const auto two = RoomConfig::uniform(2, 10);
  for (double p : {0.0, 0.2, 0.5, 0.9, 1.0}) CHECK(expected_positive_tiebreak(two, p, 0.0) == doctest::Approx(p * p));
  CHECK(expected_positive_tiebreak(two, 0.5, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
  for (double k : {0.0, 0.3, 1.0}) {
    CHECK(expected_positive_tiebreak(RoomConfig::uniform(3, 4), 0.4, k) == doctest::Approx(f_single(3, 0.4)));
  }
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RoomConfig config = random_config(rng, 2, 12);
    for (int k = 0; k <= 100; ++k) {
      const double p = k / 100.0;
      const double g = expected_positive_tiebreak(config, p, 0.5);
      CHECK(g >= 0.0);
      CHECK(g <= 1.0);
      CHECK(std::fabs(expected_positive_tiebreak(config, 1.0 - p, 0.5) - (1.0 - g)) <= 1e-12);
      CHECK(expected_positive_tiebreak(config, p, 0.0) == doctest::Approx(expected_positive(config, p)));
    }
  }
}

TEST_CASE("inflexible expectation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const RoomConfig config = random_config(rng, 2, 12);
    for (int k = 0; k <= 20; ++k) {
      const double p = k / 20.0;
      CHECK(expected_positive_inflexible(config, p, 0.0, 0.0) == doctest::Approx(expected_positive(config, p)));
    }
  }
  const auto three = RoomConfig::uniform(3, 10);
  const double edge = expected_positive_inflexible(three, 0.2, 0.2, 0.2);
  CHECK(edge >= 0.0);
  CHECK(edge <= 1.0);
  CHECK(edge > 0.2);  // positive inflexibles never flip, converted floaters add to them
  CHECK(expected_positive_inflexible(three, 0.5, 0.1, 0.1) == doctest::Approx(0.5).epsilon(1e-14));

  CHECK_THROWS_AS(expected_positive_inflexible(three, 0.05, 0.1, 0.1), DomainError);
  CHECK_THROWS_AS(expected_positive_inflexible(three, 0.95, 0.1, 0.1), DomainError);
  CHECK_THROWS_AS(expected_positive_inflexible(three, 0.5, 0.6, 0.6), DomainError);
}

TEST_CASE("inflexible expectation matches category enumeration") {
  for (int size = 2; size <= 6; ++size) {
    for (auto [a, b] : {std::pair{0.1, 0.1}, std::pair{0.05, 0.2}, std::pair{0.3, 0.0}}) {
      for (double p = a; p <= 1.0 - b + 1e-12; p += 0.05) {
        const double pc = std::min(p, 1.0 - b);
        CHECK(expected_positive_inflexible(RoomConfig::uniform(size, 1), pc, a, b) ==
              doctest::Approx(inflexible_room_oracle(size, pc, a, b)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("inflexible expectation is nondecreasing on [a, 1 - b]") {
  for (int size : {2, 3, 4, 5, 8}) {
    for (auto [a, b] : {std::pair{0.1, 0.1}, std::pair{0.05, 0.3}, std::pair{0.25, 0.05}}) {
      double prev = -1.0;
      for (int k = 0; k <= 1000; ++k) {
        const double p = a + (1.0 - a - b) * k / 1000.0;
        const double g = expected_positive_inflexible(RoomConfig::uniform(size, 1), p, a, b);
        CHECK(g >= prev - 1e-15);
        prev = g;
      }
    }
  }
}

TEST_CASE("drift iterates") {
  const DriftSpec identity{1.0, 1.0, 0.0, DriftDirection::lower};
  for (int t : {0, 1, 5, 50}) CHECK(drift_iterate(identity, 0.37, t).value == 0.37);

  // R^m(n^-1/2) = 2^(2m) n^-1/2 for K = 2, ell = 1, delta = 1
  const DriftSpec doubling{2.0, 1.0, 1.0, DriftDirection::upper};
  const double n = 1e6;
  const int m = static_cast<int>(std::log2(n) / 6.0);
  const auto r = drift_iterate(doubling, 1.0 / std::sqrt(n), m);
  CHECK_FALSE(r.clamped);
  CHECK(r.value == doctest::Approx(std::pow(2.0, 2 * m) / std::sqrt(n)).epsilon(1e-14));
  CHECK(r.value <= std::pow(n, -1.0 / 6.0));

  // Q^m(eps') >= (eps'/2)^(i^m) for K = 1, ell = i, delta = 1/2
  for (int i = 3; i <= 5; ++i) {
    for (int mm = 1; mm <= 4; ++mm) {
      const DriftSpec squaring{1.0, static_cast<double>(i), 0.5, DriftDirection::lower};
      const auto q = drift_iterate(squaring, 0.1, mm);
      CHECK(q.value >= std::pow(0.05, std::pow(i, mm)));
    }
  }
}

TEST_CASE("drift iterate equals its closed form for power laws") {
  for (double K : {0.5, 1.0, 1.5}) {
    for (double ell : {1.0, 1.5, 2.0}) {
      for (double delta : {0.0, 0.1, 0.4}) {
        for (auto dir : {DriftDirection::lower, DriftDirection::upper}) {
          const DriftSpec spec{K, ell, delta, dir};
          for (int t = 0; t <= 10; ++t) {
            const auto it = drift_iterate(spec, 0.3, t);
            if (it.clamped) break;
            const double closed = drift_closed_form(spec, 0.3, t);
            if (closed < std::numeric_limits<double>::min()) {
              CHECK(it.value < 1e-290);  // subnormal range carries no relative precision
            } else {
              CHECK(std::fabs(it.value - closed) <= 1e-12 * closed);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("drift clamps and validates") {
  const auto big = drift_iterate({3.0, 1.0, 0.5, DriftDirection::upper}, 0.5, 3);
  CHECK(big.clamped);
  CHECK(big.value == 1.0);
  const auto tiny = drift_iterate({1.0, 4.0, 0.0, DriftDirection::lower}, 1e-10, 6);
  CHECK(tiny.clamped);
  CHECK(tiny.value == 0.0);
  CHECK_THROWS_AS(drift_iterate({0.0, 1.0, 0.0, DriftDirection::lower}, 0.5, 1), DomainError);
  CHECK_THROWS_AS(drift_iterate({1.0, 0.5, 0.0, DriftDirection::lower}, 0.5, 1), DomainError);
  CHECK_THROWS_AS(drift_iterate({1.0, 1.0, 1.5, DriftDirection::lower}, 0.5, 1), DomainError);
  CHECK_THROWS_AS(drift_iterate({1.0, 1.0, 0.0, DriftDirection::lower}, 0.0, 1), DomainError);
}

TEST_CASE("fixed point report JSON round trip") {
  const auto report = find_fixed_points(RoomConfig(Rooms{{3, 5}, {6, 2}}));
  const nlohmann::json j = report;
  const auto back = fixed_point_report_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.roots == report.roots);
  CHECK(back.brackets == report.brackets);
  CHECK(back.unique == report.unique);
  CHECK(back.tolerance == report.tolerance);
}
