#include "galam/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "galam/detail/compensated_sum.hpp"
#include "galam/errors.hpp"

namespace galam::model {
namespace {

using detail::CompensatedSum;

constexpr int kTable = kMaxRoomSize + 1;

constexpr std::array<std::array<std::uint64_t, kTable>, kTable> make_pascal() {
  std::array<std::array<std::uint64_t, kTable>, kTable> c{};
  for (int i = 0; i < kTable; ++i) {
    c[i][0] = 1;
    for (int j = 1; j <= i; ++j) c[i][j] = c[i - 1][j - 1] + (j < i ? c[i - 1][j] : 0);
  }
  return c;
}

constexpr auto kPascal = make_pascal();

void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

void check_size(int size) {
  if (size < 2 || size > kMaxRoomSize) {
    throw DomainError("room size must lie in [2, " + std::to_string(kMaxRoomSize) + "], got " +
                      std::to_string(size));
  }
}

// p^0..p^size and (1-p)^0..(1-p)^size.
struct Powers {
  std::array<double, kTable> p{};
  std::array<double, kTable> q{};
  Powers(double prob, int size) {
    p[0] = q[0] = 1.0;
    const double comp = 1.0 - prob;
    for (int j = 1; j <= size; ++j) {
      p[j] = p[j - 1] * prob;
      q[j] = q[j - 1] * comp;
    }
  }
};

// sum_{j=from}^{size} C(size,j) p^j (1-p)^(size-j)
double upper_tail(int size, int from, const Powers& pw) {
  CompensatedSum s;
  for (int j = from; j <= size; ++j) s += binomial(size, j) * pw.p[j] * pw.q[size - j];
  return s.value();
}

// sum_i seats_i * g(i) / n, exact whenever every g(i) is an exact integer.
template <typename PerSize>
double seat_weighted(const RoomConfig& config, PerSize&& g) {
  CompensatedSum s;
  for (const auto& [size, count] : config.rooms()) {
    s += static_cast<double>(config.seats_in(size)) * g(size);
  }
  return s.value() / static_cast<double>(config.n());
}

}  // namespace

double binomial(int i, int j) {
  if (i < 0 || j < 0 || j > i || i > kMaxRoomSize) return 0.0;
  return static_cast<double>(kPascal[i][j]);
}

double f_single(int size, double p) {
  check_size(size);
  check_probability(p, "p");
  return upper_tail(size, size / 2 + 1, Powers(p, size));
}

double tie_single(int size, double p) {
  check_size(size);
  check_probability(p, "p");
  if (size % 2 != 0) return 0.0;
  const int m = size / 2;
  return binomial(size, m) * std::pow(p, m) * std::pow(1.0 - p, m);
}

double f_prime_single(int size, double p) {
  check_size(size);
  check_probability(p, "p");
  const int m = size / 2;
  return (m + 1) * binomial(size, m + 1) * std::pow(p, m) * std::pow(1.0 - p, size - m - 1);
}

double expected_positive(const RoomConfig& config, double p) {
  check_probability(p, "p");
  return seat_weighted(config, [p](int size) { return upper_tail(size, size / 2 + 1, Powers(p, size)); });
}

double expected_negative(const RoomConfig& config, double p) {
  check_probability(p, "p");
  return seat_weighted(config, [p](int size) { return upper_tail(size, (size + 1) / 2, Powers(p, size)); });
}

double h(const RoomConfig& config, double p) { return expected_positive(config, p) - p; }

double f_prime(const RoomConfig& config, double p) {
  check_probability(p, "p");
  return seat_weighted(config, [p](int size) { return f_prime_single(size, p); });
}

FixedPointReport find_fixed_points_of(const std::function<double(double)>& g, double lo, double hi,
                                      double grid_resolution, double tolerance) {
  if (!(grid_resolution > 0.0 && grid_resolution <= 1e-3)) {
    throw std::invalid_argument("grid resolution must lie in (0, 1e-3]");
  }
  if (!(tolerance >= 10.0 * std::numeric_limits<double>::epsilon())) {
    throw std::invalid_argument("root tolerance must be at least 10 machine epsilons");
  }
  if (!(lo < hi)) throw std::invalid_argument("empty search interval");

  FixedPointReport report;
  report.grid_resolution = grid_resolution;
  report.tolerance = tolerance;

  const auto steps = std::max<std::int64_t>(2, std::llround((hi - lo) / grid_resolution));
  auto grid = [&](std::int64_t k) {
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(steps);
  };
  auto sign_at = [&](double p) {
    const double x = g(p) - p;
    return (x > 0.0) - (x < 0.0);
  };

  double prev_p = grid(1);
  int prev_sign = sign_at(prev_p);
  if (prev_sign == 0) {
    report.roots.push_back(prev_p);
    report.brackets.emplace_back(prev_p, prev_p);
  }
  for (std::int64_t k = 2; k < steps; ++k) {
    const double p = grid(k);
    const int s = sign_at(p);
    if (s == 0) {
      report.roots.push_back(p);
      report.brackets.emplace_back(p, p);
    } else if (prev_sign != 0 && s != prev_sign) {
      double a = prev_p;
      double b = p;
      while (b - a > tolerance) {
        const double mid = 0.5 * (a + b);
        const int sm = sign_at(mid);
        if (sm == 0) {
          a = b = mid;
        } else if (sm == prev_sign) {
          a = mid;
        } else {
          b = mid;
        }
      }
      report.roots.push_back(0.5 * (a + b));
      report.brackets.emplace_back(prev_p, p);
    }
    prev_p = p;
    prev_sign = s;
  }
  report.unique = report.roots.size() == 1;
  return report;
}

FixedPointReport find_fixed_points(const RoomConfig& config, double grid_resolution, double tolerance) {
  return find_fixed_points_of([&config](double p) { return expected_positive(config, p); }, 0.0, 1.0,
                              grid_resolution, tolerance);
}

std::vector<double> upcrossings(const std::function<double(double)>& g, const FixedPointReport& report) {
  std::vector<double> out;
  const double step = report.grid_resolution;
  for (std::size_t r = 0; r < report.roots.size(); ++r) {
    const auto [lo, hi] = report.brackets[r];
    const double below = lo < hi ? lo : std::max(0.0, lo - step);
    const double above = lo < hi ? hi : std::min(1.0, hi + step);
    if (g(below) - below < 0.0 && g(above) - above > 0.0) out.push_back(report.roots[r]);
  }
  return out;
}

bool sign_pattern_holds(const RoomConfig& config, double alpha, double grid_resolution, double tolerance) {
  const auto steps = static_cast<std::int64_t>(std::llround(1.0 / grid_resolution));
  for (std::int64_t k = 1; k < steps; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(steps);
    if (std::fabs(p - alpha) <= tolerance) continue;
    const double value = h(config, p);
    if (p < alpha ? !(value < 0.0) : !(value > 0.0)) return false;
  }
  return true;
}

NoUniqueThreshold::NoUniqueThreshold(FixedPointReport report)
    : std::runtime_error(report.roots.empty()
                             ? std::string("no unique threshold: h has no root in (0, 1)")
                             : "no unique threshold: h has " + std::to_string(report.roots.size()) +
                                   " roots in (0, 1)"),
      report_(std::move(report)) {}

double threshold(const RoomConfig& config, double grid_resolution, double tolerance) {
  FixedPointReport report = find_fixed_points(config, grid_resolution, tolerance);
  if (!report.unique) throw NoUniqueThreshold(std::move(report));
  const double alpha = report.roots.front();
  if (!sign_pattern_holds(config, alpha, grid_resolution)) throw NoUniqueThreshold(std::move(report));
  return alpha;
}

double expected_positive_tiebreak(const RoomConfig& config, double p, double k) {
  check_probability(p, "p");
  check_probability(k, "k");
  return seat_weighted(config, [p, k](int size) {
    const Powers pw(p, size);
    double value = upper_tail(size, size / 2 + 1, pw);
    if (size % 2 == 0) value += k * binomial(size, size / 2) * pw.p[size / 2] * pw.q[size / 2];
    return value;
  });
}

double expected_positive_inflexible(const RoomConfig& config, double p, double a, double b) {
  VariantSpec::inflexible(a, b);  // validates a, b
  check_probability(p, "p");
  constexpr double slack = 1e-12;
  if (p < a - slack || p > 1.0 - b + slack) {
    throw DomainError("p must lie in [a, 1 - b] for the inflexible variant");
  }
  const double negative_floater = std::max(0.0, 1.0 - p - b);
  return seat_weighted(config, [&](int i) {
    const Powers pw(p, i);
    CompensatedSum s;
    // seat positive (floater or inflexible) and the room majority is positive
    for (int j = i / 2 + 1; j <= i; ++j) s += binomial(i - 1, j - 1) * pw.p[j] * pw.q[i - j];
    // negative floater converted by a positive majority
    for (int j = i / 2 + 1; j <= i - 1; ++j) {
      s += binomial(i - 1, j) * negative_floater * pw.p[j] * pw.q[i - j - 1];
    }
    // positive inflexible that keeps its opinion in a negative room
    for (int j = 1; j <= i / 2; ++j) s += binomial(i - 1, j - 1) * a * pw.p[j - 1] * pw.q[i - j];
    return s.value();
  });
}

std::function<double(double)> expectation_map(const RoomConfig& config, const VariantSpec& variant) {
  switch (variant.kind) {
    case VariantKind::tie_break:
      return [config, k = variant.k](double p) { return expected_positive_tiebreak(config, p, k); };
    case VariantKind::inflexible:
      return [config, a = variant.a, b = variant.b](double p) {
        return expected_positive_inflexible(config, p, a, b);
      };
    case VariantKind::standard:
      break;
  }
  return [config](double p) { return expected_positive(config, p); };
}

void DriftSpec::validate() const {
  if (!(K > 0.0)) throw DomainError("drift K must be positive");
  if (!(ell >= 1.0)) throw DomainError("drift exponent ell must be at least 1");
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("drift delta must lie in [0, 1]");
}

namespace {
double drift_factor(const DriftSpec& spec) {
  return spec.direction == DriftDirection::lower ? 1.0 - spec.delta : 1.0 + spec.delta;
}
}  // namespace

DriftValue drift_iterate(const DriftSpec& spec, double b, int t) {
  spec.validate();
  if (!(b > 0.0 && b <= 1.0)) throw DomainError("drift start b must lie in (0, 1]");
  if (t < 0) throw DomainError("drift rounds t must be nonnegative");
  const double scale = drift_factor(spec) * spec.K;
  DriftValue out{b, false};
  for (int step = 0; step < t; ++step) {
    out.value = scale * std::pow(out.value, spec.ell);
    if (out.value > 1.0) {
      out.value = 1.0;
      out.clamped = true;
    } else if (out.value == 0.0 && scale > 0.0) {
      out.clamped = true;  // underflow
    }
  }
  return out;
}

double drift_closed_form(const DriftSpec& spec, double b, int t) {
  spec.validate();
  double exponent = 0.0;
  for (int j = 0; j < t; ++j) exponent += std::pow(spec.ell, j);
  // log space so a large factor and a tiny start do not meet as inf * 0
  const double scale = drift_factor(spec) * spec.K;
  if (scale == 0.0) return t == 0 ? b : 0.0;
  return std::exp(exponent * std::log(scale) + std::pow(spec.ell, t) * std::log(b));
}

void to_json(nlohmann::json& j, const FixedPointReport& report) {
  nlohmann::json brackets = nlohmann::json::array();
  for (const auto& [lo, hi] : report.brackets) brackets.push_back({lo, hi});
  j = nlohmann::json{{"roots", report.roots},
                     {"brackets", brackets},
                     {"unique", report.unique},
                     {"grid_resolution", report.grid_resolution},
                     {"tolerance", report.tolerance}};
}

FixedPointReport fixed_point_report_from_json(const nlohmann::json& j) {
  FixedPointReport r;
  r.roots = j.at("roots").get<std::vector<double>>();
  for (const auto& br : j.at("brackets")) r.brackets.emplace_back(br.at(0).get<double>(), br.at(1).get<double>());
  r.unique = j.at("unique").get<bool>();
  r.grid_resolution = j.value("grid_resolution", 0.0);
  r.tolerance = j.at("tolerance").get<double>();
  return r;
}

}  // namespace galam::model
